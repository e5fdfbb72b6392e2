"""Discrete set representations on model-space grids: masks with exact
per-cell volumes, geodesic interpolation of sets, inner/outer measure
brackets, distance extremes, homothety and convexity diagnostics.

Grids are regular in chart coordinates: cartesian boxes in euclidean space,
colatitude/longitude bands on the 2-sphere and polar coordinates on the
hyperbolic plane (both with exact cell volumes and periodic longitude).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .modelspace import CutLocusError, ModelSpace, SpaceMismatchError, distance, geodesic_point
from .pmeans import DomainError

__all__ = [
    "GridGeometry",
    "DiscreteSet",
    "MeasureEstimate",
    "HomothetyFit",
    "measure",
    "interpolation_set",
    "interpolation_snap",
    "theta",
    "distance_extremes",
    "homothety_fit",
    "convexity_residual",
    "dilate_mask",
    "erode_mask",
    "save_grid_set",
    "load_grid_set",
]

# hard cap on |A|*|B| pair enumeration (desk scale)
PAIR_CAP = 40_000_000
_CHUNK = 400_000  # pairs per vectorized chunk


@dataclass(frozen=True)
class GridGeometry:
    """Regular grid in chart coordinates with spacing h."""

    space: ModelSpace
    origin: tuple[float, ...]
    h: float
    shape: tuple[int, ...]

    def __post_init__(self):
        if self.h <= 0:
            raise DomainError("grid spacing h must be positive")
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        object.__setattr__(self, "shape", tuple(int(v) for v in self.shape))
        if len(self.origin) != self.ndim or len(self.shape) != self.ndim:
            raise DomainError("origin/shape do not match the chart dimension")
        if self.space.kind == "sphere":
            if self.space.n != 2:
                raise DomainError("sphere grids are implemented for n = 2")
            phi_hi = self.origin[0] + self.shape[0] * self.h
            if self.origin[0] < -1e-12 or phi_hi > math.pi + 1e-12:
                raise DomainError("sphere grid colatitude range must lie in [0, pi]")
        if self.space.kind == "hyperbolic":
            if self.space.n != 2:
                raise DomainError("hyperbolic grids are implemented for n = 2")
            if self.origin[0] < -1e-12:
                raise DomainError("hyperbolic polar grid needs r >= 0")

    @property
    def ndim(self) -> int:
        return self.space.n if self.space.kind == "euclidean" else 2

    @property
    def wrap_axes(self) -> tuple[int, ...]:
        if self.space.kind == "euclidean":
            return ()
        # longitude / polar angle is periodic when the grid spans the circle
        full = abs(self.shape[1] * self.h - 2 * math.pi) < 1e-9
        return (1,) if full else ()

    def chart_centers(self) -> np.ndarray:
        """(N, ndim) chart coordinates of all cell centers, C-order."""
        axes = [
            self.origin[ax] + (np.arange(self.shape[ax]) + 0.5) * self.h
            for ax in range(self.ndim)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def centers(self) -> np.ndarray:
        """(N, embedding_dim) embedding coordinates of all cell centers."""
        return self.space.from_chart(self.chart_centers())

    def cell_volumes(self) -> np.ndarray:
        """Per-cell volumes, shaped like the grid (exact for band/polar cells)."""
        if self.space.kind == "euclidean":
            return np.full(self.shape, self.h**self.ndim)
        rho = self.space.radius
        lo = self.origin[0] + np.arange(self.shape[0]) * self.h
        hi = lo + self.h
        if self.space.kind == "sphere":
            band = rho**2 * (np.cos(lo) - np.cos(hi))
        else:
            band = rho**2 * (np.cosh(hi / rho) - np.cosh(lo / rho))
        return np.broadcast_to((band * self.h)[:, None], self.shape).copy()

    def cell_of(self, points: np.ndarray) -> np.ndarray:
        """Integer cell indices of embedding points (no bounds clipping)."""
        chart = self.space.to_chart(np.asarray(points, dtype=float))
        idx = np.floor((chart - np.asarray(self.origin)) / self.h).astype(np.int64)
        for ax in self.wrap_axes:
            idx[..., ax] = np.mod(idx[..., ax], self.shape[ax])
        return idx

    def in_bounds(self, idx: np.ndarray) -> np.ndarray:
        ok = np.ones(idx.shape[:-1], dtype=bool)
        for ax in range(self.ndim):
            ok &= (idx[..., ax] >= 0) & (idx[..., ax] < self.shape[ax])
        return ok

    def max_cell_diameter(self) -> float:
        """Upper bound on the metric diameter of a grid cell."""
        if self.space.kind == "euclidean":
            return self.h * math.sqrt(self.ndim)
        rho = self.space.radius
        if self.space.kind == "sphere":
            return self.h * rho * math.sqrt(2.0)
        r_hi = self.origin[0] + self.shape[0] * self.h
        width = rho * math.sinh(r_hi / rho)  # angular cells widen with r
        return self.h * math.sqrt(1.0 + width**2)

    @staticmethod
    def euclidean_box(n: int, lo, hi, h: float) -> "GridGeometry":
        """Grid covering the box [lo, hi] (cell-aligned, outward rounded)."""
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        shape = tuple(int(math.ceil((b - a) / h - 1e-12)) for a, b in zip(lo, hi))
        return GridGeometry(ModelSpace.euclidean(n), tuple(lo), h, shape)

    @staticmethod
    def sphere_latlon(k: float, h: float) -> "GridGeometry":
        """Full colatitude/longitude grid on the 2-sphere of curvature k.

        The spacing is snapped to the nearest exact divisor of pi so the
        longitude axis tiles the circle (periodic indexing needs this).
        """
        n_phi = max(2, int(round(math.pi / h)))
        h = math.pi / n_phi
        return GridGeometry(ModelSpace.sphere(2, k), (0.0, 0.0), h, (n_phi, 2 * n_phi))

    @staticmethod
    def hyperbolic_polar(k: float, r_max: float, h: float) -> "GridGeometry":
        """Polar grid on the hyperbolic plane of curvature k, radius r_max;
        spacing snapped so the angular axis tiles the circle exactly."""
        n_phi = max(8, int(round(2 * math.pi / h)))
        h = 2 * math.pi / n_phi
        n_r = int(math.ceil(r_max / h))
        return GridGeometry(ModelSpace.hyperbolic(2, k), (0.0, 0.0), h, (n_r, n_phi))


def _shift(mask: np.ndarray, axis: int, step: int, wrap: bool) -> np.ndarray:
    if wrap:
        return np.roll(mask, step, axis=axis)
    out = np.zeros_like(mask)
    src = [slice(None)] * mask.ndim
    dst = [slice(None)] * mask.ndim
    if step > 0:
        dst[axis] = slice(step, None)
        src[axis] = slice(None, -step)
    else:
        dst[axis] = slice(None, step)
        src[axis] = slice(-step, None)
    out[tuple(dst)] = mask[tuple(src)]
    return out


def dilate_mask(mask: np.ndarray, wrap_axes: tuple[int, ...] = ()) -> np.ndarray:
    """One-cell dilation with the full box neighborhood (separable per axis)."""
    out = mask.copy()
    for ax in range(mask.ndim):
        wrap = ax in wrap_axes
        out = out | _shift(out, ax, 1, wrap) | _shift(out, ax, -1, wrap)
    return out


def erode_mask(mask: np.ndarray, wrap_axes: tuple[int, ...] = ()) -> np.ndarray:
    out = mask.copy()
    for ax in range(mask.ndim):
        wrap = ax in wrap_axes
        out = out & _shift(out, ax, 1, wrap) & _shift(out, ax, -1, wrap)
    return out


@dataclass
class DiscreteSet:
    """A measurable set at desk scale: a grid mask or a finite point cloud."""

    space: ModelSpace
    grid: GridGeometry | None = None
    mask: np.ndarray | None = None
    cloud: np.ndarray | None = None

    def __post_init__(self):
        if self.grid is not None:
            if self.grid.space != self.space:
                raise SpaceMismatchError("grid space differs from the set's space")
            if self.mask is None:
                raise DomainError("grid-backed sets need a mask")
            self.mask = np.asarray(self.mask, dtype=bool)
            if self.mask.shape != self.grid.shape:
                raise DomainError("mask shape does not match the grid")
        elif self.cloud is None:
            raise DomainError("a set is either grid-backed or a point cloud")
        else:
            self.cloud = np.asarray(self.cloud, dtype=float)

    @staticmethod
    def from_mask(grid: GridGeometry, mask: np.ndarray) -> "DiscreteSet":
        return DiscreteSet(grid.space, grid=grid, mask=mask)

    @staticmethod
    def from_cloud(space: ModelSpace, points: np.ndarray) -> "DiscreteSet":
        return DiscreteSet(space, cloud=np.asarray(points, dtype=float))

    @staticmethod
    def from_predicate(grid: GridGeometry, pred) -> "DiscreteSet":
        """Cells whose centers satisfy pred(embedding points) -> bool array."""
        keep = pred(grid.centers()).reshape(grid.shape)
        return DiscreteSet.from_mask(grid, keep)

    @staticmethod
    def geodesic_ball(grid: GridGeometry, center: np.ndarray, radius: float) -> "DiscreteSet":
        center = np.asarray(center, dtype=float)
        return DiscreteSet.from_predicate(
            grid, lambda pts: np.asarray(distance(grid.space, pts, center)) <= radius
        )

    @staticmethod
    def euclidean_box(grid: GridGeometry, lo, hi) -> "DiscreteSet":
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        return DiscreteSet.from_predicate(
            grid, lambda pts: np.all((pts >= lo) & (pts <= hi), axis=-1)
        )

    @property
    def is_grid(self) -> bool:
        return self.grid is not None

    @property
    def resolution(self) -> float:
        return self.grid.h if self.is_grid else 0.0

    def points(self) -> np.ndarray:
        """Embedding coordinates of the samples (cell centers or the cloud)."""
        if self.is_grid:
            return self.grid.centers()[self.mask.ravel()]
        return self.cloud

    def size(self) -> int:
        return int(self.mask.sum()) if self.is_grid else len(self.cloud)

    def is_empty(self) -> bool:
        return self.size() == 0


@dataclass(frozen=True)
class MeasureEstimate:
    value: float
    inner: float
    outer: float

    @property
    def bracket_width(self) -> float:
        return self.outer - self.inner


def measure(A: DiscreteSet) -> MeasureEstimate:
    """Cell-count measure with an [inner, outer] bracket from one-cell
    erosion/dilation (width O(perimeter * h) for nice sets)."""
    if not A.is_grid:
        raise DomainError("measure needs a grid-mask representation")
    vols = A.grid.cell_volumes()
    wrap = A.grid.wrap_axes
    value = float(vols[A.mask].sum())
    outer = float(vols[dilate_mask(A.mask, wrap)].sum())
    inner = float(vols[erode_mask(A.mask, wrap)].sum())
    return MeasureEstimate(value, inner, outer)


def _pair_iter(xs: np.ndarray, ys: np.ndarray):
    """Yield (chunk of xs, ys) index ranges keeping chunks below _CHUNK pairs."""
    na, nb = len(xs), len(ys)
    rows = max(1, _CHUNK // max(nb, 1))
    for lo in range(0, na, rows):
        yield lo, min(lo + rows, na)


def _check_pair_cap(na: int, nb: int) -> None:
    if na * nb > PAIR_CAP:
        raise DomainError(
            f"pair enumeration {na} x {nb} exceeds the desk-scale cap {PAIR_CAP}"
        )


def interpolation_snap(A: DiscreteSet, B: DiscreteSet, s: float) -> DiscreteSet:
    """s-intermediate points of A x B snapped to the grid, without the outer
    dilation; the inner half of the interpolation-set bracket.

    Raises :class:`CutLocusError` naming an offending pair if A x B contains
    one (sphere antipodes).
    """
    if not 0.0 < s < 1.0:
        raise DomainError(f"s must lie in (0,1), got {s}")
    if A.space != B.space:
        raise SpaceMismatchError("interpolation needs both sets on one space")
    if not (A.is_grid and B.is_grid) or A.grid != B.grid:
        raise DomainError("interpolation_set needs both sets on a common grid")
    if A.is_empty() or B.is_empty():
        raise DomainError("interpolation of an empty set is undefined")
    grid = A.grid
    space = A.space
    xs = A.points()
    ys = B.points()
    _check_pair_cap(len(xs), len(ys))
    out = np.zeros(grid.shape, dtype=bool)
    flat = out.reshape(-1)
    strides = np.array([int(np.prod(grid.shape[ax + 1 :], dtype=np.int64)) for ax in range(grid.ndim)])
    for lo, hi in _pair_iter(xs, ys):
        xa = xs[lo:hi, None, :]
        yb = ys[None, :, :]
        if space.kind == "sphere":
            d = np.asarray(distance(space, xa, yb))
            bad = d >= space.diameter - 1e-9
            if np.any(bad):
                i, j = np.argwhere(bad)[0]
                raise CutLocusError(
                    f"cut-locus pair in A x B: {xs[lo + i].tolist()} / {ys[j].tolist()}"
                )
        z = geodesic_point(space, xa, yb, s).reshape(-1, space.embedding_dim)
        idx = grid.cell_of(z)
        ok = grid.in_bounds(idx)
        if not np.all(ok):
            raise DomainError("grid does not cover the interpolation set")
        flat[idx @ strides] = True
    return DiscreteSet.from_mask(grid, out)


def interpolation_set(A: DiscreteSet, B: DiscreteSet, s: float) -> DiscreteSet:
    """All s-intermediate points of A x B, snapped to A's grid and dilated by
    one cell (outer-measure convention: interpolants fall between nodes)."""
    snap = interpolation_snap(A, B, s)
    return DiscreteSet.from_mask(A.grid, dilate_mask(snap.mask, A.grid.wrap_axes))


def distance_extremes(A: DiscreteSet, B: DiscreteSet) -> tuple[float, float]:
    """(min, max) of pairwise distances over the samples of A x B."""
    if A.space != B.space:
        raise SpaceMismatchError("distance extremes need one common space")
    xs, ys = A.points(), B.points()
    if len(xs) == 0 or len(ys) == 0:
        raise DomainError("empty set has no distance extremes")
    _check_pair_cap(len(xs), len(ys))
    dmin, dmax = math.inf, -math.inf
    for lo, hi in _pair_iter(xs, ys):
        d = np.asarray(distance(A.space, xs[lo:hi, None, :], ys[None, :, :]))
        dmin = min(dmin, float(d.min()))
        dmax = max(dmax, float(d.max()))
    return dmin, dmax


def theta(A: DiscreteSet, B: DiscreteSet, k: float) -> float:
    """Inf of pairwise distances for k >= 0, sup for k < 0."""
    dmin, dmax = distance_extremes(A, B)
    return dmin if k >= 0 else dmax


def centroid(A: DiscreteSet) -> np.ndarray:
    if not A.is_grid:
        return A.cloud.mean(axis=0)
    vols = A.grid.cell_volumes()[A.mask]
    pts = A.points()
    return (pts * vols[:, None]).sum(axis=0) / vols.sum()


@dataclass(frozen=True)
class HomothetyFit:
    scale: float
    translation: np.ndarray
    residual: float


def homothety_fit(A: DiscreteSet, B: DiscreteSet) -> HomothetyFit:
    """Fit B ~ c0*A + x0 (euclidean); residual is the symmetric-difference
    measure of the transformed set against B, relative to B."""
    if A.space.kind != "euclidean":
        raise DomainError("homothety_fit is a euclidean operation")
    if not (A.is_grid and B.is_grid):
        raise DomainError("homothety_fit needs grid-backed sets")
    mA, mB = measure(A).value, measure(B).value
    if mA <= 0 or mB <= 0:
        raise DomainError("homothety_fit needs sets of positive measure")
    n = A.space.n
    c0 = (mB / mA) ** (1.0 / n)
    x0 = centroid(B) - c0 * centroid(A)
    # rasterize c0*A + x0 on B's grid by pulling B-cell centers back through A
    zs = B.grid.centers()
    w = (zs - x0) / c0
    idx = A.grid.cell_of(w)
    ok = A.grid.in_bounds(idx)
    flatA = A.mask.reshape(-1)
    strides = np.array(
        [int(np.prod(A.grid.shape[ax + 1 :], dtype=np.int64)) for ax in range(A.grid.ndim)]
    )
    transformed = np.zeros(len(zs), dtype=bool)
    transformed[ok] = flatA[idx[ok] @ strides]
    transformed = transformed.reshape(B.grid.shape)
    sym = transformed ^ B.mask
    vols = B.grid.cell_volumes()
    residual = float(vols[sym].sum()) / mB
    return HomothetyFit(c0, x0, residual)


def convexity_residual(A: DiscreteSet) -> float:
    """measure(hull(A) \\ A) / measure(A); O(h) iff A is convex up to null sets."""
    if A.space.kind != "euclidean":
        raise DomainError("convexity_residual is a euclidean operation")
    if not A.is_grid:
        raise DomainError("convexity_residual needs a grid mask")
    mA = measure(A).value
    if mA <= 0:
        raise DomainError("convexity_residual needs positive measure")
    pts = A.points()
    centers = A.grid.centers()
    n = A.space.n
    if n == 1:
        lo, hi = pts.min(), pts.max()
        hull = (centers[:, 0] >= lo - 1e-12) & (centers[:, 0] <= hi + 1e-12)
    else:
        from scipy.spatial import ConvexHull

        try:
            hullobj = ConvexHull(pts)
        except Exception:
            return 0.0  # degenerate (lower-dimensional) sets are trivially convex
        eqs = hullobj.equations
        vals = centers @ eqs[:, :-1].T + eqs[:, -1]
        hull = np.all(vals <= 1e-9, axis=1)
    hull = hull.reshape(A.grid.shape)
    extra = hull & ~A.mask
    vols = A.grid.cell_volumes()
    return float(vols[extra].sum()) / mA


# -- persistence -----------------------------------------------------------


def _space_to_json(space: ModelSpace) -> dict:
    return {"kind": space.kind, "n": space.n, "k": space.k}


def _space_from_json(d: dict) -> ModelSpace:
    return ModelSpace(d["kind"], int(d["n"]), float(d["k"]))


def save_grid_set(path: str | Path, A: DiscreteSet) -> None:
    """Write a mask as row-major 0/1 CSV plus a JSON header next to it."""
    if not A.is_grid:
        raise DomainError("only grid sets persist as CSV masks")
    path = Path(path)
    rows = A.mask.reshape(A.grid.shape[0], -1).astype(int)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerows(rows.tolist())
    header = {
        "schema": "bbl-lab/1",
        "space": _space_to_json(A.space),
        "h": A.grid.h,
        "origin": list(A.grid.origin),
        "shape": list(A.grid.shape),
    }
    with open(path.with_suffix(path.suffix + ".json"), "w") as fh:
        json.dump(header, fh, sort_keys=True, indent=1)


def load_grid_set(path: str | Path) -> DiscreteSet:
    path = Path(path)
    with open(path.with_suffix(path.suffix + ".json")) as fh:
        header = json.load(fh)
    space = _space_from_json(header["space"])
    grid = GridGeometry(space, tuple(header["origin"]), float(header["h"]), tuple(header["shape"]))
    with open(path, newline="") as fh:
        rows = [[int(v) for v in row] for row in csv.reader(fh) if row]
    mask = np.asarray(rows, dtype=bool).reshape(grid.shape)
    return DiscreteSet.from_mask(grid, mask)
