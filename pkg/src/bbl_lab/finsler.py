"""2-D Minkowski (Finsler) plane geometry: Randers and mountain-slope norms,
forward/backward metric balls as inscribed polygons, exact Minkowski
interpolation of convex polygons, homothety testing and the resulting
Brunn-Minkowski deficits.

On a Minkowski plane d_F(x, y) = F(y - x), so metric balls are translates of
the (an)isotropic unit ball scaled by the radius; non-reversible norms make
forward and backward balls genuinely different shapes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from scipy.optimize import least_squares

from .pmeans import DomainError

__all__ = [
    "RandersNorm",
    "MatsumotoNorm",
    "EuclideanNorm",
    "MinkowskiNorm",
    "Polygon",
    "norm_eval",
    "is_reversible",
    "forward_ball",
    "backward_ball",
    "polygon_minkowski_interpolation",
    "minkowski_bm_deficit",
    "homothety_test",
    "MinkowskiBMReport",
    "HomothetyResult",
    "write_svg",
]

DEFAULT_DIRECTIONS = 1024
_CONVEX_TOL = 1e-12
HOMOTHETY_DECISION = 1e-3  # residual (relative to R) separating the two verdicts


@dataclass(frozen=True)
class RandersNorm:
    """F(y) = sqrt(<Qy, y>) + <b, y> with Q SPD and <Q^-1 b, b> < 1."""

    Q: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=float)
        b = np.asarray(self.b, dtype=float)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "b", b)
        if Q.shape != (2, 2) or b.shape != (2,):
            raise DomainError("Randers data must be a 2x2 matrix and a 2-vector")
        if abs(Q[0, 1] - Q[1, 0]) > 1e-12:
            raise DomainError("Q must be symmetric")
        if np.linalg.eigvalsh(Q).min() <= 0:
            raise DomainError("Q must be positive definite")
        if float(b @ np.linalg.solve(Q, b)) >= 1.0:
            raise DomainError("Randers norm needs <Q^-1 b, b> < 1")


@dataclass(frozen=True)
class MatsumotoNorm:
    """Mountain-slope metric: walking at speed v on a plane inclined by
    alpha under gravity; requires g*sin(alpha) < v."""

    alpha: float
    v: float
    gravity: float = 9.81

    def __post_init__(self):
        if not 0.0 <= self.alpha < math.pi / 2:
            raise DomainError("alpha must lie in [0, pi/2)")
        if self.v <= 0:
            raise DomainError("speed v must be positive")
        if self.gravity * math.sin(self.alpha) >= self.v:
            raise DomainError("slope condition g*sin(alpha) < v violated")


@dataclass(frozen=True)
class EuclideanNorm:
    """F(y) = |y| / v."""

    v: float = 1.0

    def __post_init__(self):
        if self.v <= 0:
            raise DomainError("speed v must be positive")


MinkowskiNorm = Union[RandersNorm, MatsumotoNorm, EuclideanNorm]


def norm_eval(F: MinkowskiNorm, y) -> float | np.ndarray:
    """Evaluate the norm; vectorized over trailing shape (..., 2)."""
    y = np.asarray(y, dtype=float)
    scalar = y.ndim == 1
    y2 = np.atleast_2d(y)
    if isinstance(F, RandersNorm):
        quad = np.einsum("...i,ij,...j->...", y2, F.Q, y2)
        out = np.sqrt(quad) + y2 @ F.b
    elif isinstance(F, MatsumotoNorm):
        n2 = np.einsum("...i,...i->...", y2, y2)
        nrm = np.sqrt(n2)
        den = F.v * nrm + 0.5 * F.gravity * math.sin(F.alpha) * y2[..., 1]
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(nrm > 0, n2 / den, 0.0)
    else:
        out = np.sqrt(np.einsum("...i,...i->...", y2, y2)) / F.v
    return float(out[0]) if scalar else out


def is_reversible(F: MinkowskiNorm) -> bool:
    if isinstance(F, RandersNorm):
        return bool(np.all(F.b == 0))
    if isinstance(F, MatsumotoNorm):
        return F.alpha == 0.0
    return True


@dataclass(frozen=True)
class Polygon:
    """Closed simple polygon, counterclockwise, vertices (N, 2)."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        object.__setattr__(self, "vertices", v)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise DomainError("polygon needs at least 3 planar vertices")
        if self.area <= 0:
            raise DomainError("polygon must be counterclockwise with positive area")

    @property
    def area(self) -> float:
        v = self.vertices
        x, y = v[:, 0], v[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @property
    def centroid(self) -> np.ndarray:
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        cross = v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]
        c = ((v + w) * cross[:, None]).sum(axis=0) / (6.0 * self.area)
        return c

    def is_convex(self, tol: float = _CONVEX_TOL) -> bool:
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        cross = e[:, 0] * np.roll(e[:, 1], -1) - e[:, 1] * np.roll(e[:, 0], -1)
        return bool(np.all(cross >= -tol * np.abs(cross).max()))

    def translated(self, t) -> "Polygon":
        return Polygon(self.vertices + np.asarray(t, dtype=float))

    def scaled(self, c: float) -> "Polygon":
        if c <= 0:
            raise DomainError("scale factor must be positive")
        return Polygon(self.vertices * c)


def _unit_directions(m: int) -> np.ndarray:
    th = 2 * math.pi * np.arange(m) / m
    return np.stack([np.cos(th), np.sin(th)], axis=-1)


def forward_ball(F: MinkowskiNorm, x, r: float, m: int = DEFAULT_DIRECTIONS) -> Polygon:
    """Inscribed polygon of B+(x, r) = {y : F(y - x) < r}: vertices exactly on
    the indicatrix, uniformly sampled in direction angle."""
    if m < 16:
        raise DomainError("need at least 16 angular samples")
    if r <= 0:
        raise DomainError("radius must be positive")
    x = np.asarray(x, dtype=float)
    u = _unit_directions(m)
    vals = norm_eval(F, u)
    return Polygon(x + r * u / vals[:, None])


def backward_ball(F: MinkowskiNorm, y, R: float, m: int = DEFAULT_DIRECTIONS) -> Polygon:
    """Inscribed polygon of B-(y, R) = {z : F(y - z) < R}."""
    if m < 16:
        raise DomainError("need at least 16 angular samples")
    if R <= 0:
        raise DomainError("radius must be positive")
    y = np.asarray(y, dtype=float)
    u = _unit_directions(m)
    vals = norm_eval(F, u)
    return Polygon(y - R * u / vals[:, None])


def _start_index(v: np.ndarray) -> int:
    # lowest, then leftmost vertex: edge angles increase monotonically from it
    order = np.lexsort((v[:, 0], v[:, 1]))
    return int(order[0])


def polygon_minkowski_interpolation(A: Polygon, B: Polygon, s: float) -> Polygon:
    """Exact (1-s)A + sB for convex polygons by the edge-merge sweep."""
    if not 0.0 < s < 1.0:
        raise DomainError(f"s must lie in (0,1), got {s}")
    if not A.is_convex() or not B.is_convex():
        raise DomainError("Minkowski interpolation implemented for convex polygons")
    pa = A.vertices * (1.0 - s)
    pb = B.vertices * s
    ia, ib = _start_index(pa), _start_index(pb)
    pa = np.roll(pa, -ia, axis=0)
    pb = np.roll(pb, -ib, axis=0)
    ea = np.roll(pa, -1, axis=0) - pa
    eb = np.roll(pb, -1, axis=0) - pb

    def angles(e):
        return np.mod(np.arctan2(e[:, 1], e[:, 0]), 2 * math.pi)

    tha, thb = angles(ea), angles(eb)
    edges = []
    i = j = 0
    while i < len(ea) or j < len(eb):
        if j >= len(eb) or (i < len(ea) and tha[i] <= thb[j]):
            edges.append(ea[i])
            i += 1
        else:
            edges.append(eb[j])
            j += 1
    start = pa[0] + pb[0]
    verts = [start]
    for e in edges[:-1]:
        verts.append(verts[-1] + e)
    out = np.asarray(verts)
    # merge collinear runs produced by parallel edges
    e = np.roll(out, -1, axis=0) - out
    cross = e[:, 0] * np.roll(e[:, 1], -1) - e[:, 1] * np.roll(e[:, 0], -1)
    scale = max(np.abs(cross).max(), 1.0)
    keep = np.abs(np.roll(cross, 1)) > 1e-14 * scale
    if keep.sum() >= 3:
        out = out[keep]
    return Polygon(out)


@dataclass(frozen=True)
class MinkowskiBMReport:
    lhs: float
    rhs: float
    deficit: float
    tol: float
    area_interp: float
    area_forward: float
    area_backward: float


def _bm_parts(F, x, r, y, R, s, m):
    A = forward_ball(F, x, r, m)
    B = backward_ball(F, y, R, m)
    Z = polygon_minkowski_interpolation(A, B, s)
    return A.area, B.area, Z.area


def minkowski_bm_deficit(
    F: MinkowskiNorm, x, r: float, y, R: float, s: float, m: int = DEFAULT_DIRECTIONS
) -> MinkowskiBMReport:
    """area(Z_s(B+, B-))^(1/2) against the interpolated root areas.

    Inscribed polygons underestimate areas by O(m^-2); the self-calibrating
    tolerance compares areas at m and 2m and propagates the difference
    through the deficit.
    """
    if isinstance(F, MatsumotoNorm) and not forward_ball(F, (0, 0), 1.0, m).is_convex():
        raise DomainError(
            "mountain-slope indicatrix is not convex at these parameters; "
            "the Minkowski-plane analysis does not apply"
        )
    aA, aB, aZ = _bm_parts(F, x, r, y, R, s, m)
    aA2, aB2, aZ2 = _bm_parts(F, x, r, y, R, s, 2 * m)
    lhs = math.sqrt(aZ)
    rhs = (1.0 - s) * math.sqrt(aA) + s * math.sqrt(aB)
    tol = 10.0 * (
        (aZ2 - aZ) / (2.0 * math.sqrt(aZ))
        + (1.0 - s) * (aA2 - aA) / (2.0 * math.sqrt(aA))
        + s * (aB2 - aB) / (2.0 * math.sqrt(aB))
    )
    return MinkowskiBMReport(lhs, rhs, lhs - rhs, tol, aZ, aA, aB)


@dataclass(frozen=True)
class HomothetyResult:
    ok: bool
    residual: float
    translation: np.ndarray


def homothety_test(
    F: MinkowskiNorm, x, r: float, y, R: float, m: int = DEFAULT_DIRECTIONS
) -> HomothetyResult:
    """Is the backward ball of radius R a translate of the (R/r)-rescaled
    forward ball?

    The translation is seeded by the centroid difference and refined by least
    squares on the forward-ball defining equation; the residual is the worst
    relative violation max |F(w - t) - R| / R over backward vertices w.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    fwd = forward_ball(F, x * (R / r), R, m)  # forward shape at radius R
    bwd = backward_ball(F, y, R, m)
    w = bwd.vertices
    t0 = bwd.centroid - fwd.centroid + x * (R / r)  # candidate forward center

    def resid(t):
        return (np.asarray(norm_eval(F, w - t)) - R) / R

    sol = least_squares(resid, t0, method="lm")
    residual = float(np.abs(resid(sol.x)).max())
    return HomothetyResult(residual <= HOMOTHETY_DECISION, residual, sol.x)


# -- SVG output --------------------------------------------------------------


def _svg_path(P: Polygon, digits: int = 6) -> str:
    pts = " L ".join(f"{v[0]:.{digits}f} {v[1]:.{digits}f}" for v in P.vertices)
    return f"M {pts} Z"


def write_svg(path: str | Path, polygons: list[tuple[Polygon, str]], title: str = "") -> None:
    """Write polygons (with stroke colors) as a standalone SVG 1.1 file."""
    allv = np.vstack([P.vertices for P, _ in polygons])
    lo = allv.min(axis=0)
    hi = allv.max(axis=0)
    pad = 0.05 * float(max(hi - lo))
    lo -= pad
    hi += pad
    w, h = hi - lo
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'viewBox="{lo[0]:.6f} {lo[1]:.6f} {w:.6f} {h:.6f}" width="480" height="480">',
        # flip the y axis so the figure reads in math orientation
        f'<g transform="translate(0 {lo[1] + hi[1]:.6f}) scale(1 -1)">',
    ]
    if title:
        lines.append(f"<title>{title}</title>")
    for P, stroke in polygons:
        lines.append(
            f'<path d="{_svg_path(P)}" fill="none" stroke="{stroke}" '
            f'stroke-width="{0.004 * max(w, h):.6f}"/>'
        )
    lines.append("</g></svg>")
    Path(path).write_text("\n".join(lines) + "\n")
