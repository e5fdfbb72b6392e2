"""Borell-Brascamp-Lieb machinery on grid densities: deficits, minimal
admissible upper densities (weighted sup-convolution), transport-based lower
bounds on the deficit, equality diagnostics, the Dubuc normal form and its
fitting, quantitative and distorted Brunn-Minkowski inequalities, and the
power-mean integral inequality.

The deficit of a triple (f, g, h) at weight s and exponent p >= -1/n is

    ||h||_1 / M_s^{p/(1+pn)}(||f||_1, ||g||_1) - 1,

and it is bounded below by the transport integral of the quantitative
Hoelder gap along any optimal coupling of the normalized marginals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .finsler import Polygon, polygon_minkowski_interpolation
from .gap import GapInput, gap, gap_array
from .modelspace import CutLocusError, ModelSpace, distance, geodesic_point, sk, sk_array, tau
from .ot import TransportPlan, WeightedCloud
from .pmeans import DomainError, Exponent, ExponentLike, as_exponent, bbl_target_exponent, pmean, pmean_array
from .sets import (
    DiscreteSet,
    GridGeometry,
    dilate_mask,
    erode_mask,
    interpolation_set,
    interpolation_snap,
    measure,
    theta,
)
from .sets import _check_pair_cap, _pair_iter, _shift, convexity_residual, homothety_fit

__all__ = [
    "GridDensity",
    "DeficitReport",
    "EqualityDiagnostics",
    "DubucFit",
    "Box",
    "QuantitativeBMReport",
    "DistortedBMReport",
    "HolderIntegralReport",
    "deficit",
    "admissible_h",
    "deficit_lower_bound",
    "equality_diagnostics",
    "deficit_report",
    "dubuc_construct",
    "dubuc_fit",
    "quantitative_bm",
    "distorted_bm",
    "distorted_bm_densities",
    "curvature_equality_residuals",
    "holder_integral_check",
]

SUPPORT_REL_TOL = 1e-12  # cells below this fraction of max are not support
CONVEXITY_THRESHOLD_CELLS = 8.0  # convexity residual <= 8h declares convex


@dataclass
class GridDensity:
    """Nonnegative compactly supported density sampled on a grid."""

    grid: GridGeometry
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise DomainError("density values do not match the grid shape")
        if np.any(self.values < 0):
            raise DomainError("density values must be nonnegative")

    @property
    def space(self) -> ModelSpace:
        return self.grid.space

    @property
    def mass(self) -> float:
        return float((self.values * self.grid.cell_volumes()).sum())

    def support_mask(self) -> np.ndarray:
        vmax = self.values.max()
        if vmax == 0:
            return np.zeros(self.grid.shape, dtype=bool)
        return self.values > SUPPORT_REL_TOL * vmax

    def support_set(self) -> DiscreteSet:
        return DiscreteSet.from_mask(self.grid, self.support_mask())

    def support_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(points, values, weights) over support cells, C-order."""
        mask = self.support_mask().ravel()
        pts = self.grid.centers()[mask]
        vals = self.values.ravel()[mask]
        vols = self.grid.cell_volumes().ravel()[mask]
        return pts, vals, vals * vols

    def cloud(self) -> WeightedCloud:
        """Normalized transport marginal supported on the support cells."""
        pts, _, w = self.support_arrays()
        if w.sum() <= 0:
            raise DomainError("density has zero mass")
        return WeightedCloud(self.space, pts, w / w.sum())

    def sample_at(self, points: np.ndarray, outer: bool = False) -> np.ndarray:
        """Nearest-cell values at embedding points (0 outside the grid); with
        outer=True take the max over the one-cell neighborhood, the right
        convention when rasterization may shift a point across a cell edge."""
        vals = self.values
        if outer:
            v = vals.copy()
            for ax in range(v.ndim):
                wrap = ax in self.grid.wrap_axes
                v = np.maximum(v, np.maximum(_shift(v, ax, 1, wrap), _shift(v, ax, -1, wrap)))
            vals = v
        idx = self.grid.cell_of(np.asarray(points, dtype=float))
        ok = self.grid.in_bounds(idx)
        flat = vals.reshape(-1)
        strides = np.array(
            [int(np.prod(self.grid.shape[ax + 1 :], dtype=np.int64)) for ax in range(self.grid.ndim)]
        )
        out = np.zeros(idx.shape[:-1])
        ix = idx[ok] @ strides if np.any(ok) else np.zeros(0, dtype=np.int64)
        out[ok] = flat[ix]
        return out

    def quadrature_uncertainty(self) -> float:
        """Midpoint-rule mass-error model h*(perimeter + total variation):
        boundary-layer mass plus the discrete-gradient term."""
        mask = self.support_mask()
        vols = self.grid.cell_volumes()
        ring = mask & ~erode_mask(mask, self.grid.wrap_axes)
        boundary = float((self.values * vols)[ring].sum())
        tv = 0.0
        for ax in range(self.values.ndim):
            tv += float((np.abs(np.diff(self.values, axis=ax)) * 1.0).sum())
        tv_mass = tv * self.grid.h ** self.grid.ndim if self.space.kind == "euclidean" else tv * float(
            vols.mean()
        )
        return boundary + tv_mass


def _require_shared_grid(*densities: GridDensity) -> GridGeometry:
    g0 = densities[0].grid
    for d in densities[1:]:
        if d.grid != g0:
            raise DomainError("densities must share one grid")
    return g0


def _distortion_weights(space: ModelSpace, s: float, d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(v_{1-s}(y,x), v_s(x,y)) for pair distances d; ones in flat space."""
    if space.kind == "euclidean":
        one = np.ones_like(d)
        return one, one
    skd = sk_array(space.k, d)
    v1 = (sk_array(space.k, (1.0 - s) * d) / skd) ** (space.n - 1)
    v2 = (sk_array(space.k, s * d) / skd) ** (space.n - 1)
    return v1, v2


def deficit(f: GridDensity, g: GridDensity, h: GridDensity, s: float, p: ExponentLike) -> float:
    """||h||_1 / M_s^{p/(1+pn)}(||f||_1, ||g||_1) - 1."""
    _require_shared_grid(f, g, h)
    mf, mg, mh = f.mass, g.mass, h.mass
    if mf <= 0 or mg <= 0 or mh <= 0:
        raise DomainError("deficit needs densities of positive mass")
    q = bbl_target_exponent(p, f.space.n)
    return mh / pmean(s, q, mf, mg) - 1.0


def admissible_h(f: GridDensity, g: GridDensity, s: float, p: ExponentLike) -> GridDensity:
    """Minimal grid density dominating the distortion-weighted p-mean of
    (f, g) along s-intermediate points: the weighted sup-convolution, cells
    never reached staying at 0."""
    grid = _require_shared_grid(f, g)
    space = f.space
    p = as_exponent(p)
    xs, fv, _ = f.support_arrays()
    ys, gv, _ = g.support_arrays()
    if len(xs) == 0 or len(ys) == 0:
        raise DomainError("admissible_h needs nonzero densities")
    _check_pair_cap(len(xs), len(ys))
    out = np.zeros(int(np.prod(grid.shape)))
    strides = np.array(
        [int(np.prod(grid.shape[ax + 1 :], dtype=np.int64)) for ax in range(grid.ndim)]
    )
    for lo, hi in _pair_iter(xs, ys):
        xa = xs[lo:hi, None, :]
        yb = ys[None, :, :]
        d = np.asarray(distance(space, xa, yb))
        if space.kind == "sphere" and np.any(d >= space.diameter - 1e-9):
            i, j = np.argwhere(d >= space.diameter - 1e-9)[0]
            raise CutLocusError(
                f"cut-locus pair across supports: {xs[lo + i].tolist()} / {ys[j].tolist()}"
            )
        v1, v2 = _distortion_weights(space, s, d)
        vals = pmean_array(s, p, fv[lo:hi, None] / v1, gv[None, :] / v2)
        z = geodesic_point(space, xa, yb, s).reshape(-1, space.embedding_dim)
        idx = grid.cell_of(z)
        if not np.all(grid.in_bounds(idx)):
            raise DomainError("grid does not cover the interpolation of the supports")
        np.maximum.at(out, idx @ strides, vals.ravel())
    return GridDensity(grid, out.reshape(grid.shape))


def _check_plan_matches(plan: TransportPlan, f: GridDensity, g: GridDensity) -> None:
    fp, _, _ = f.support_arrays()
    gp, _, _ = g.support_arrays()
    if len(plan.source) != len(fp) or len(plan.target) != len(gp):
        raise DomainError("plan marginals do not match the densities' supports")
    if not np.allclose(plan.source.points, fp, atol=1e-9) or not np.allclose(
        plan.target.points, gp, atol=1e-9
    ):
        raise DomainError("plan support points do not match the densities")


def deficit_lower_bound(
    f: GridDensity, g: GridDensity, s: float, p: ExponentLike, plan: TransportPlan
) -> float:
    """Transport integral of the quantitative-Hoelder gap against the
    coupling: sum over couplings of mass * G(f/v_{1-s}, g/v_s, 1/||f||,
    1/||g||); evaluated per coupling entry on mass-split rows."""
    _require_shared_grid(f, g)
    _check_plan_matches(plan, f, g)
    space = f.space
    p = as_exponent(p)
    mf, mg = f.mass, g.mass
    _, fv, _ = f.support_arrays()
    _, gv, _ = g.support_arrays()
    xs = plan.source.points[plan.i]
    ys = plan.target.points[plan.j]
    d = np.asarray(distance(space, xs, ys))
    v1, v2 = _distortion_weights(space, s, d)
    a = fv[plan.i] / v1
    b = gv[plan.j] / v2
    ok = (a > 0) & (b > 0)
    if not np.any(ok):
        return 0.0
    cc = np.full(ok.sum(), 1.0 / mf)
    dd = np.full(ok.sum(), 1.0 / mg)
    g_vals = gap_array(s, p, space.n, a[ok], b[ok], cc, dd)
    return float(np.sum(plan.mass[ok] * g_vals))


@dataclass
class EqualityDiagnostics:
    """Residuals of the three equality conditions (support transport, the
    Jacobian measure identity, the pointwise ratio identity), plus the mass
    balance required at the endpoint exponent."""

    support_residual: float
    jacobian_residual: float
    ratio_residual_h: float
    ratio_residual_g: float
    mass_residual: Optional[float] = None

    def residuals(self) -> dict:
        out = {
            "support": self.support_residual,
            "jacobian": self.jacobian_residual,
            "ratio_h": self.ratio_residual_h,
            "ratio_g": self.ratio_residual_g,
        }
        if self.mass_residual is not None:
            out["mass"] = self.mass_residual
        return out

    @property
    def max_residual(self) -> float:
        return max(self.residuals().values())


def _displaced_support(
    f: GridDensity, plan: TransportPlan, s: float
) -> tuple[np.ndarray, np.ndarray]:
    """(snap mask, dilated mask) of the s-displacement of supp f."""
    grid = f.grid
    zs = geodesic_point(f.space, plan.source.points[plan.i], plan.target.points[plan.j], s)
    idx = grid.cell_of(zs)
    ok = grid.in_bounds(idx)
    if not np.all(ok):
        raise DomainError("grid does not cover the displaced support")
    mask = np.zeros(grid.shape, dtype=bool)
    strides = np.array(
        [int(np.prod(grid.shape[ax + 1 :], dtype=np.int64)) for ax in range(grid.ndim)]
    )
    mask.reshape(-1)[idx @ strides] = True
    return mask, dilate_mask(mask, grid.wrap_axes)


def equality_diagnostics(
    f: GridDensity,
    g: GridDensity,
    h: GridDensity,
    s: float,
    p: ExponentLike,
    plan: TransportPlan,
) -> EqualityDiagnostics:
    grid = _require_shared_grid(f, g, h)
    _check_plan_matches(plan, f, g)
    space = f.space
    n = space.n
    p = as_exponent(p)
    mf, mg = f.mass, g.mass
    vols = grid.cell_volumes()

    # (i) support match between supp h and the s-displacement of supp f,
    # tolerating the one-cell rasterization fringe on both sides
    snap, dilated = _displaced_support(f, plan, s)
    supp_h = h.support_mask()
    fringe_h = dilate_mask(supp_h, grid.wrap_axes)
    sym = (supp_h & ~dilated) | (snap & ~fringe_h)
    mh_supp = float(vols[supp_h].sum())
    support_residual = float(vols[sym].sum()) / mh_supp

    # per-coupling data
    xs = plan.source.points[plan.i]
    ys = plan.target.points[plan.j]
    d = np.asarray(distance(space, xs, ys))
    v1, v2 = _distortion_weights(space, s, d)
    _, fv, fw = f.support_arrays()
    _, gv, _ = g.support_arrays()
    fi = fv[plan.i]
    gj = gv[plan.j]
    zs = geodesic_point(space, xs, ys, s)
    hz = h.sample_at(zs, outer=True)
    w = plan.mass / plan.mass.sum()

    at_endpoint = p.is_lower_endpoint_for(n)
    vols_flat = vols.ravel()
    mask_flat = f.support_mask().ravel()
    cell_i = vols_flat[mask_flat][plan.i]
    row_mass = plan.source.masses[plan.i]

    if at_endpoint:
        # measure identity  m(psi_s(supp f)) = integral of f / h(psi_s)
        displaced_measure = float(vols[snap].sum())
        good = hz > 0
        integrand = np.where(good, fi / np.where(good, hz, 1.0), 0.0)
        target = float(np.sum((plan.mass / row_mass) * cell_i * integrand))
        jacobian_residual = abs(displaced_measure - target) / max(displaced_measure, 1e-300)
        # ratio identity  h(psi_s(x)) = M_s^{-1/n}(f/v1, g/v2)
        rhs = pmean_array(s, -1.0 / n, fi / v1, gj / v2)
        ratio_h = float(np.sum(w * np.abs(hz - rhs)) / np.sum(w * rhs))
        mass_residual = abs(mf - mg) / max(mf, mg)
        return EqualityDiagnostics(support_residual, jacobian_residual, ratio_h, ratio_h, mass_residual)

    q = bbl_target_exponent(p, n)
    qv = float(q)
    # (ii) Jacobian condition as a measure identity:
    #   m(psi_s(supp f)) = [M_s^q(1, mg/mf)]^{n q} * integral of v_{1-s}
    displaced_measure = float(vols[snap].sum())
    distortion_integral = float(np.sum((plan.mass / row_mass) * cell_i * v1))
    factor = pmean(s, q, 1.0, mg / mf) ** (n * qv)
    target = factor * distortion_integral
    jacobian_residual = abs(displaced_measure - target) / max(displaced_measure, 1e-300)

    # (iii) three-way ratio identity on couplings
    e = 1.0 - n * qv  # = 1/(pn+1), 0 at p = +inf
    K = pmean(s, q, mf, mg) ** e
    r1 = hz / K
    r2 = (fi / v1) / mf**e
    r3 = (gj / v2) / mg**e
    denom = float(np.sum(w * r2))
    ratio_h = float(np.sum(w * np.abs(r1 - r2)) / denom)
    ratio_g = float(np.sum(w * np.abs(r3 - r2)) / denom)
    return EqualityDiagnostics(support_residual, jacobian_residual, ratio_h, ratio_g)


def _deficit_uncertainty(f: GridDensity, g: GridDensity, h: GridDensity, delta: float) -> float:
    """First-order propagation of the per-density quadrature uncertainty into
    the deficit (the log-derivative of a power mean w.r.t. each mass is <= 1)."""
    return (1.0 + abs(delta)) * (
        h.quadrature_uncertainty() / h.mass
        + f.quadrature_uncertainty() / f.mass
        + g.quadrature_uncertainty() / g.mass
    )


@dataclass
class DeficitReport:
    deficit: float
    lower_bound: float
    margin: float
    discretization_error: float
    diagnostics: Optional[EqualityDiagnostics] = None
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "schema": "bbl-lab/1",
            "deficit": self.deficit,
            "lower_bound": self.lower_bound,
            "margin": self.margin,
            "discretization_error": self.discretization_error,
        }
        if self.diagnostics is not None:
            out["diagnostics"] = self.diagnostics.residuals()
        out.update(self.meta)
        return out


def deficit_report(
    f: GridDensity,
    g: GridDensity,
    h: GridDensity,
    s: float,
    p: ExponentLike,
    plan: Optional[TransportPlan] = None,
    diagnostics: bool = False,
) -> DeficitReport:
    """Deficit, transport lower bound and the quadrature error estimate in
    one record; the accepted regime is margin >= -discretization_error."""
    d = deficit(f, g, h, s, p)
    bound = deficit_lower_bound(f, g, s, p, plan) if plan is not None else 0.0
    err = _deficit_uncertainty(f, g, h, d)
    diag = equality_diagnostics(f, g, h, s, p, plan) if (diagnostics and plan is not None) else None
    return DeficitReport(d, bound, d - bound, err, diag)


# -- Dubuc normal form -------------------------------------------------------


def _dubuc_factors(s: float, p: Exponent, n: int, c0: float) -> tuple[float, float]:
    """(g factor, h factor) of the normal form: g = c0^{1/p} Phi composed with
    the homothety, h carries the interpolated-mass factor."""
    if p.infinite > 0:
        return 1.0, 1.0
    if p.is_lower_endpoint_for(n):
        return c0 ** float(-n), pmean(s, -1.0 / n, 1.0, c0 ** float(-n))
    pv = float(p)
    if pv == 0.0:
        if abs(c0 - 1.0) > 1e-12:
            raise DomainError("p = 0 requires c0 = 1 in the normal form")
        return 1.0, 1.0
    gfac = c0 ** (1.0 / pv)
    q = pv / (pv * n + 1.0)
    hfac = pmean(s, q, 1.0, c0 ** ((pv * n + 1.0) / pv)) ** (1.0 / (pv * n + 1.0))
    return gfac, hfac


def dubuc_construct(
    Phi: GridDensity, s: float, p: ExponentLike, c0: float, x0
) -> tuple[GridDensity, GridDensity, GridDensity]:
    """Equality-case triple from a profile on a convex support:
    f = Phi, g the c0-homothety of Phi (weighted by c0^{1/p}), h the
    s-interpolated homothety with the matching mass factor.

    All three are resampled onto one common grid at Phi's spacing.
    """
    if Phi.space.kind != "euclidean":
        raise DomainError("the normal form is a euclidean construction")
    if c0 <= 0:
        raise DomainError("c0 must be positive")
    p = as_exponent(p)
    n = Phi.space.n
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    gfac, hfac = _dubuc_factors(s, p, n, c0)
    ch = 1.0 - s + s * c0

    pts, _, _ = Phi.support_arrays()
    lo = pts.min(axis=0) - Phi.grid.h
    hi = pts.max(axis=0) + Phi.grid.h
    corners = [lo, hi, c0 * lo + x0, c0 * hi + x0, ch * lo + s * x0, ch * hi + s * x0]
    glo = np.min(corners, axis=0) - 2 * Phi.grid.h
    ghi = np.max(corners, axis=0) + 2 * Phi.grid.h
    grid = GridGeometry.euclidean_box(n, glo, ghi, Phi.grid.h)
    centers = grid.centers()

    fvals = Phi.sample_at(centers).reshape(grid.shape)
    gvals = gfac * Phi.sample_at((centers - x0) / c0).reshape(grid.shape)
    hvals = hfac * Phi.sample_at((centers - s * x0) / ch).reshape(grid.shape)
    return GridDensity(grid, fvals), GridDensity(grid, gvals), GridDensity(grid, hvals)


@dataclass
class DubucFit:
    ok: bool
    c0: float
    x0: np.ndarray
    t: float
    convexity_residual: float
    support_residual_g: float
    support_residual_h: float
    relation_residual_g: float
    relation_residual_h: float
    concavity_residual: float

    def residuals(self) -> dict:
        return {
            "convexity": self.convexity_residual,
            "support_g": self.support_residual_g,
            "support_h": self.support_residual_h,
            "relation_g": self.relation_residual_g,
            "relation_h": self.relation_residual_h,
            "concavity": self.concavity_residual,
        }


def _affine_symdiff(A: DiscreteSet, c: float, t: np.ndarray, B: DiscreteSet) -> float:
    """Relative symmetric-difference measure between c*A + t and B."""
    zs = B.grid.centers()
    w = (zs - t) / c
    idx = A.grid.cell_of(w)
    ok = A.grid.in_bounds(idx)
    strides = np.array(
        [int(np.prod(A.grid.shape[ax + 1 :], dtype=np.int64)) for ax in range(A.grid.ndim)]
    )
    transformed = np.zeros(len(zs), dtype=bool)
    transformed[ok] = A.mask.reshape(-1)[idx[ok] @ strides]
    transformed = transformed.reshape(B.grid.shape)
    mB = measure(B).value
    vols = B.grid.cell_volumes()
    return float(vols[transformed ^ B.mask].sum()) / mB


def dubuc_fit(
    f: GridDensity,
    g: GridDensity,
    h: GridDensity,
    s: float,
    p: ExponentLike,
    samples: int = 4000,
    seed: int = 0,
) -> DubucFit:
    """Recover the normal-form parameters from an (approximate) equality
    triple and report the structural residuals; a nonconvex f-support is a
    failed fit, not an exception."""
    grid = _require_shared_grid(f, g, h)
    if f.space.kind != "euclidean":
        raise DomainError("dubuc_fit is a euclidean operation")
    p = as_exponent(p)
    n = f.space.n
    hgrid = grid.h
    Af, Ag, Ah = f.support_set(), g.support_set(), h.support_set()
    conv = convexity_residual(Af)
    fit = homothety_fit(Af, Ag)
    c0, x0 = fit.scale, fit.translation
    t = s * c0 / (1.0 - s + s * c0)
    ch = 1.0 - s + s * c0
    supp_g = fit.residual
    supp_h = _affine_symdiff(Af, ch, s * x0, Ah)

    # p = 0 forces c0 = 1 in the normal form; allow the fitted c0 to be off
    # by rasterization before declaring the structure violated
    p0_bad = p.is_zero and abs(c0 - 1.0) > max(0.02, CONVEXITY_THRESHOLD_CELLS * hgrid)
    pts, fv, fw = f.support_arrays()
    if p0_bad:
        rel_g = rel_h = math.inf
    else:
        gfac, hfac = _dubuc_factors(s, p, n, 1.0 if p.is_zero else c0)
        gv = g.sample_at(c0 * pts + x0, outer=True)
        hv = h.sample_at(ch * pts + s * x0, outer=True)
        wts = fw
        rel_g = float(np.sum(wts * np.abs(gv - gfac * fv)) / np.sum(wts * gfac * fv))
        rel_h = float(np.sum(wts * np.abs(hv - hfac * fv)) / np.sum(wts * hfac * fv))

    rng = np.random.default_rng(seed)
    npts = len(pts)
    ii = rng.integers(0, npts, samples)
    jj = rng.integers(0, npts, samples)
    z = (1.0 - t) * pts[ii] + t * pts[jj]
    fz = f.sample_at(z, outer=True)
    target = pmean_array(t, p, fv[ii], fv[jj])
    violation = np.maximum(0.0, target - fz) / f.values.max()
    concavity = float(violation.max())

    ok = conv <= CONVEXITY_THRESHOLD_CELLS * hgrid
    return DubucFit(ok, c0, x0, t, conv, supp_g, supp_h, rel_g, rel_h, concavity)


# -- Brunn-Minkowski flavors ---------------------------------------------------


@dataclass(frozen=True)
class Box:
    """Axis-aligned box, the exact-path input to the quantitative BM check."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if lo.shape != hi.shape or np.any(hi <= lo):
            raise DomainError("box needs lo < hi componentwise")

    @property
    def n(self) -> int:
        return len(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))


ConvexBody = Union[Box, Polygon]


@dataclass
class QuantitativeBMReport:
    deficit: float
    bound: float
    ok: bool
    closed_form_bound: Optional[float] = None
    discretization_error: float = 0.0


def _bm_measures(A, B, s: float) -> tuple[float, float, float, int, tuple[float, float, float]]:
    """(mA, mB, mZ, n, (errZ, errA, errB)) for the supported input kinds."""
    if isinstance(A, Box) and isinstance(B, Box):
        if A.n != B.n:
            raise DomainError("boxes of different dimensions")
        mZ = float(np.prod((1 - s) * (A.hi - A.lo) + s * (B.hi - B.lo)))
        return A.volume, B.volume, mZ, A.n, (0.0, 0.0, 0.0)
    if isinstance(A, Polygon) and isinstance(B, Polygon):
        Z = polygon_minkowski_interpolation(A, B, s)
        return A.area, B.area, Z.area, 2, (0.0, 0.0, 0.0)
    if isinstance(A, DiscreteSet) and isinstance(B, DiscreteSet):
        if A.space.kind != "euclidean":
            raise DomainError("quantitative BM is a euclidean statement")
        mA, mB = measure(A), measure(B)
        snap = interpolation_snap(A, B, s)
        outer = DiscreteSet.from_mask(A.grid, dilate_mask(snap.mask, A.grid.wrap_axes))
        mZ = measure(outer).value
        errs = (
            mZ - measure(snap).value,
            (mA.outer - mA.inner) / 2,
            (mB.outer - mB.inner) / 2,
        )
        return mA.value, mB.value, mZ, A.space.n, errs
    raise DomainError("quantitative_bm expects two boxes, two polygons or two grid sets")


def quantitative_bm(A: ConvexBody | DiscreteSet, B, s: float, p: ExponentLike) -> QuantitativeBMReport:
    """Relative volume deficit of the interpolated set against the gap bound
    G(1,1,|B|,|A|); exact for boxes and convex polygons, outer-measure grid
    path otherwise."""
    p = as_exponent(p)
    mA, mB, mZ, n, (eZ, eA, eB) = _bm_measures(A, B, s)
    if mA <= 0 or mB <= 0:
        raise DomainError("quantitative BM needs positive measures")
    q = bbl_target_exponent(p, n)
    mean = pmean(s, q, mA, mB)
    delta = mZ / mean - 1.0
    bound = gap(GapInput(s, p, n, 1.0, 1.0, mB, mA))
    closed = None
    if p.is_zero:
        st = min(s, 1.0 - s)
        closed = (
            n
            * st
            * abs(mA ** (st / n) - mB ** (st / n)) ** (1.0 / st)
            / ((1.0 - s) * mA ** (1.0 / n) + s * mB ** (1.0 / n))
        )
    # the mean's log-derivative in each mass is at most 1
    disc = eZ / mean + (1.0 + abs(delta)) * (eA / mA + eB / mB)
    ok = delta >= bound - disc - 1e-12 * max(1.0, abs(delta))
    return QuantitativeBMReport(delta, bound, ok, closed, disc)


def _occupied_cell_diameter(A: DiscreteSet, B: DiscreteSet) -> float:
    """Metric diameter bound of the cells actually occupied by A and B
    (angular cells widen with the polar radius, so the grid-wide bound is
    far too coarse for sets near the origin)."""
    grid = A.grid
    space = grid.space
    if space.kind == "euclidean":
        return grid.h * math.sqrt(grid.ndim)
    rho = space.radius
    charts = np.vstack([space.to_chart(A.points()), space.to_chart(B.points())])
    if space.kind == "sphere":
        width = rho * min(1.0, float(np.sin(charts[:, 0]).max()) + grid.h)
        return grid.h * math.hypot(rho, width)
    r_eff = float(charts[:, 0].max()) + grid.h
    width = rho * math.sinh(r_eff / rho)
    return grid.h * math.hypot(1.0, width)


@dataclass
class DistortedBMReport:
    lhs: float
    rhs: float
    deficit: float
    tol: float
    theta: float
    void: bool = False

    @property
    def ok(self) -> bool:
        return self.void or self.deficit >= -self.tol


def distorted_bm(A: DiscreteSet, B: DiscreteSet, s: float) -> DistortedBMReport:
    """Distorted Brunn-Minkowski check on a model space: the 1/n-th root of
    the outer interpolation measure against the distortion-weighted root
    measures of A and B at separation theta.

    tol is the self-reported grid tolerance: dilation increment of the
    interpolation set, measure brackets of A and B, and the sensitivity of
    the distortion coefficients to one-cell errors in theta.
    """
    if A.space != B.space:
        raise DomainError("distorted BM needs both sets on one space")
    space = A.space
    n, k = space.n, space.k
    th = theta(A, B, k)
    if k > 0 and k * th * th >= math.pi**2:
        return DistortedBMReport(math.nan, math.inf, math.nan, 0.0, th, void=True)
    t1 = tau(1.0 - s, k, n, th)
    t2 = tau(s, k, n, th)
    mA, mB = measure(A), measure(B)
    snap = interpolation_snap(A, B, s)
    outer = DiscreteSet.from_mask(A.grid, dilate_mask(snap.mask, A.grid.wrap_axes))
    mZ = measure(outer).value
    mZ_snap = measure(snap).value
    lhs = mZ ** (1.0 / n)
    rhs = t1 * mA.value ** (1.0 / n) + t2 * mB.value ** (1.0 / n)
    dZ = lhs - mZ_snap ** (1.0 / n)
    dA = t1 * (mA.outer ** (1.0 / n) - mA.inner ** (1.0 / n)) / 2.0
    dB = t2 * (mB.outer ** (1.0 / n) - mB.inner ** (1.0 / n)) / 2.0
    dth = _occupied_cell_diameter(A, B)  # each theta endpoint is off by half a cell
    dT = 0.0
    if th > 0:
        for tt, mm in ((1.0 - s, mA.value), (s, mB.value)):
            hi_arg = th + dth
            lo_arg = max(th - dth, 0.0)
            hi = tau(tt, k, n, hi_arg) if (k <= 0 or k * hi_arg**2 < math.pi**2) else tau(tt, k, n, th)
            lo = tau(tt, k, n, lo_arg)
            dT += abs(hi - lo) / 2.0 * mm ** (1.0 / n)
    tol = dZ + dA + dB + dT
    return DistortedBMReport(lhs, rhs, lhs - rhs, tol, th)


def distorted_bm_densities(
    A: DiscreteSet, B: DiscreteSet, s: float
) -> tuple[GridDensity, GridDensity, GridDensity]:
    """The indicator-based triple whose deficit restates the distorted BM
    inequality: h = 1 on the interpolation set, f and g the distortion-scaled
    indicators of A and B."""
    if A.space != B.space or A.grid != B.grid:
        raise DomainError("densities need both sets on one grid")
    space = A.space
    n, k = space.n, space.k
    th = theta(A, B, k)
    if k > 0 and k * th * th >= math.pi**2:
        raise DomainError("distortion coefficient is infinite for this pair (inequality void)")
    skt = sk(k, th)
    wf = (sk(k, (1.0 - s) * th) / skt) ** (n - 1)
    wg = (sk(k, s * th) / skt) ** (n - 1)
    Z = interpolation_set(A, B, s)
    f = GridDensity(A.grid, wf * A.mask.astype(float))
    g = GridDensity(A.grid, wg * B.mask.astype(float))
    h = GridDensity(A.grid, Z.mask.astype(float))
    # runtime identity: the +inf deficit of the triple restates distorted BM
    d = deficit(f, g, h, s, Exponent.plus_inf())
    lhs = measure(Z).value ** (1.0 / n)
    rhs_n = pmean(s, 1.0 / n, wf * measure(A).value, wg * measure(B).value) ** (1.0 / n)
    if abs((1.0 + d) ** (1.0 / n) - lhs / rhs_n) > 1e-9 * max(1.0, lhs / rhs_n):
        raise AssertionError("distorted-BM identity failed at run time")
    return f, g, h


@dataclass
class CurvatureResiduals:
    ratio_residual_f: float
    ratio_residual_g: float
    mass_residual: Optional[float] = None

    @property
    def max_residual(self) -> float:
        vals = [self.ratio_residual_f, self.ratio_residual_g]
        if self.mass_residual is not None:
            vals.append(self.mass_residual)
        return max(vals)


def curvature_equality_residuals(
    f: GridDensity,
    g: GridDensity,
    h: GridDensity,
    s: float,
    p: ExponentLike,
    plan: TransportPlan,
    k: float,
) -> CurvatureResiduals:
    """Residuals of the curvature-rigidity ratio identities along couplings,
    with the comparison distortions evaluated at curvature k."""
    _require_shared_grid(f, g, h)
    _check_plan_matches(plan, f, g)
    space = f.space
    n = space.n
    p = as_exponent(p)
    mf, mg = f.mass, g.mass
    _, fv, _ = f.support_arrays()
    _, gv, _ = g.support_arrays()
    xs = plan.source.points[plan.i]
    ys = plan.target.points[plan.j]
    d = np.asarray(distance(space, xs, ys))
    skd = sk_array(k, d)
    w1 = (skd / sk_array(k, (1.0 - s) * d)) ** (n - 1)  # 1 / v_{1-s}
    w2 = (skd / sk_array(k, s * d)) ** (n - 1)  # 1 / v_s
    zs = geodesic_point(space, xs, ys, s)
    hz = h.sample_at(zs, outer=True)
    w = plan.mass / plan.mass.sum()
    fi = fv[plan.i]
    gj = gv[plan.j]

    if p.is_lower_endpoint_for(n):
        rhs = pmean_array(s, -1.0 / n, w1 * fi, w2 * gj)
        res = float(np.sum(w * np.abs(hz - rhs)) / np.sum(w * rhs))
        return CurvatureResiduals(res, res, abs(mf - mg) / max(mf, mg))

    q = bbl_target_exponent(p, n)
    e = 1.0 - n * float(q)
    K = pmean(s, q, mf, mg) ** e
    r1 = hz / K
    r2 = w1 * fi / mf**e
    r3 = w2 * gj / mg**e
    denom = float(np.sum(w * r2))
    return CurvatureResiduals(
        float(np.sum(w * np.abs(r1 - r2)) / denom),
        float(np.sum(w * np.abs(r3 - r2)) / denom),
    )


@dataclass
class HolderIntegralReport:
    lhs: float
    rhs: float
    slack: float
    quadrature_error: float
    equality: bool
    fitted_scale: float

    @property
    def ok(self) -> bool:
        return self.slack >= -self.quadrature_error - 1e-12 * max(1.0, self.rhs)


def holder_integral_check(f1: GridDensity, f2: GridDensity, s: float, n: int) -> HolderIntegralReport:
    """Quadrature check of the integral power-mean inequality
    int M_s^{1/n}(f1, f2) <= M_s^{1/n}(int f1, int f2), flagging the
    proportional equality case f2 = c f1."""
    grid = _require_shared_grid(f1, f2)
    vols = grid.cell_volumes()
    integrand = pmean_array(s, 1.0 / n, f1.values, f2.values)
    lhs = float((integrand * vols).sum())
    m1, m2 = f1.mass, f2.mass
    rhs = pmean(s, 1.0 / n, m1, m2)
    qerr = GridDensity(grid, integrand).quadrature_uncertainty()
    c = m2 / m1 if m1 > 0 else math.inf
    l1 = float((np.abs(f2.values - c * f1.values) * vols).sum())
    equality = l1 <= max(1e-9 * m2, qerr)
    return HolderIntegralReport(lhs, rhs, rhs - lhs, qerr, equality, c)
