"""Seeded fixture generators: rasterized power-concave profiles, truncated
Gaussians, indicators of random convex polygons.  These span the equality and
strict-inequality regimes of the deficit machinery."""

from __future__ import annotations

import math

import numpy as np

from .bbl import GridDensity
from .finsler import Polygon
from .modelspace import ModelSpace
from .pmeans import Exponent, ExponentLike, as_exponent
from .sets import DiscreteSet, GridGeometry


def concave_profile(grid: GridGeometry, center, radius: float, p: ExponentLike) -> GridDensity:
    """Radial profile on a euclidean ball that is p-concave on its support:
    (1 - |x - c|/R)_+^(1/p) for finite p > 0, a cone for p = 0 stand-ins is
    not needed (log-concave Gaussians cover it), (1 + |x-c|^2/R^2)^(1/p) for
    p < 0, and the plain indicator at p = +inf."""
    p = as_exponent(p)
    center = np.atleast_1d(np.asarray(center, dtype=float))
    pts = grid.centers()
    r = np.linalg.norm(pts - center, axis=-1)
    inside = r <= radius
    if p.infinite > 0:
        vals = inside.astype(float)
    else:
        pv = float(p)
        if pv > 0:
            vals = np.where(inside, np.maximum(0.0, 1.0 - r / radius) ** (1.0 / pv), 0.0)
        elif pv == 0.0:
            vals = np.where(inside, np.exp(-0.5 * (3.0 * r / radius) ** 2), 0.0)
        else:
            vals = np.where(inside, (1.0 + (r / radius) ** 2) ** (1.0 / pv), 0.0)
    return GridDensity(grid, vals.reshape(grid.shape))


def truncated_gaussian(grid: GridGeometry, center, sigma: float, radius: float) -> GridDensity:
    center = np.atleast_1d(np.asarray(center, dtype=float))
    pts = grid.centers()
    r = np.linalg.norm(pts - center, axis=-1)
    vals = np.where(r <= radius, np.exp(-0.5 * (r / sigma) ** 2), 0.0)
    return GridDensity(grid, vals.reshape(grid.shape))


def random_profile_pair_1d(
    rng: np.random.Generator, p: ExponentLike, n_cells: int = 256
) -> tuple[GridDensity, GridDensity]:
    """A seeded pair of 1-D densities on a shared grid of n_cells cells."""
    h = 1.0 / (n_cells / 4)
    grid = GridGeometry.euclidean_box(1, (-2.0,), (2.0,), 4.0 / n_cells)
    cf = rng.uniform(-0.8, -0.1)
    cg = rng.uniform(0.1, 0.8)
    rf = rng.uniform(0.3, 0.9)
    rg = rng.uniform(0.3, 0.9)
    f = concave_profile(grid, (cf,), rf, p)
    g = concave_profile(grid, (cg,), rg, p)
    return f, g


def random_profile_pair_2d(
    rng: np.random.Generator, p: ExponentLike, n_cells: int = 64, max_radius: float = 0.45
) -> tuple[GridDensity, GridDensity]:
    """A seeded pair of 2-D densities on a shared n_cells^2 grid; radii kept
    moderate so supports stay at entropic-solver scale."""
    grid = GridGeometry.euclidean_box(2, (-1.0, -1.0), (1.0, 1.0), 2.0 / n_cells)
    cf = rng.uniform(-0.45, 0.0, size=2)
    cg = rng.uniform(0.0, 0.45, size=2)
    rf = rng.uniform(0.25, max_radius)
    rg = rng.uniform(0.25, max_radius)
    f = concave_profile(grid, cf, rf, p)
    g = concave_profile(grid, cg, rg, p)
    return f, g


def random_convex_polygon(
    rng: np.random.Generator, n_points: int = 12, scale: float = 1.0, center=(0.0, 0.0)
) -> Polygon:
    """Convex hull of seeded random points (CCW)."""
    from scipy.spatial import ConvexHull

    pts = rng.uniform(-scale, scale, size=(n_points, 2)) + np.asarray(center, dtype=float)
    hull = ConvexHull(pts)
    verts = pts[hull.vertices]  # qhull emits CCW order in 2-D
    return Polygon(verts)


def rasterize_polygon(grid: GridGeometry, P: Polygon) -> DiscreteSet:
    """Cells whose centers lie in the polygon (even-odd via half-planes of a
    convex polygon)."""
    v = P.vertices
    e = np.roll(v, -1, axis=0) - v
    pts = grid.centers()
    inside = np.ones(len(pts), dtype=bool)
    for k in range(len(v)):
        rel = pts - v[k]
        inside &= e[k, 0] * rel[:, 1] - e[k, 1] * rel[:, 0] >= 0
    return DiscreteSet.from_mask(grid, inside.reshape(grid.shape))


def dubuc_profile(
    n: int, p: ExponentLike, h: float = 1.0 / 128, radius: float = 0.45
) -> GridDensity:
    """A (t,p)-concave profile on a ball, for the normal-form round trips."""
    grid = GridGeometry.euclidean_box(n, (-0.6,) * n, (0.6,) * n, h)
    return concave_profile(grid, (0.0,) * n, radius, p)
