"""Discrete optimal transport with cost d^2/2 between weighted point clouds
on a model space.

Two solvers: an exact LP route (vertex solutions, deterministic) for desk
scale instances and a log-domain entropically regularized scaler with
epsilon annealing for larger ones.  Plans are sparse (i, j, mass) triples and
know how to interpolate along geodesics.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.optimize import linprog
from scipy.special import logsumexp

from .modelspace import CutLocusError, ModelSpace, SpaceMismatchError, distance, geodesic_point
from .pmeans import DomainError
from .sets import DiscreteSet, distance_extremes

__all__ = [
    "WeightedCloud",
    "TransportPlan",
    "SinkhornReport",
    "WassersteinBounds",
    "solve_exact",
    "solve_entropic",
    "displacement_interpolate",
    "barycentric_map",
    "wasserstein_bounds_check",
    "cost_matrix",
]

EXACT_SIZE_CAP = 1_000_000
MASS_PRUNE = 1e-14  # degenerate masses below this are dropped pre-solve


@dataclass
class WeightedCloud:
    """Finitely supported probability measure: points + positive masses."""

    space: ModelSpace
    points: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        self.masses = np.asarray(self.masses, dtype=float)
        if self.points.ndim != 2 or self.points.shape[1] != self.space.embedding_dim:
            raise SpaceMismatchError("cloud points do not match the space's embedding")
        if len(self.masses) != len(self.points):
            raise DomainError("points and masses must align")
        if np.any(self.masses <= 0):
            raise DomainError("cloud masses must be strictly positive")
        if abs(self.masses.sum() - 1.0) > 1e-12:
            raise DomainError("cloud masses must sum to 1 within 1e-12")

    @staticmethod
    def normalized(space: ModelSpace, points: np.ndarray, weights: np.ndarray) -> "WeightedCloud":
        """Prune weights below the degeneracy threshold and renormalize."""
        weights = np.asarray(weights, dtype=float)
        keep = weights > MASS_PRUNE
        if not np.any(keep):
            raise DomainError("all weights below the pruning threshold")
        w = weights[keep]
        return WeightedCloud(space, np.asarray(points, float)[keep], w / w.sum())

    def __len__(self) -> int:
        return len(self.points)


def cost_matrix(mu: WeightedCloud, nu: WeightedCloud) -> np.ndarray:
    """Pairwise cost d(x_i, y_j)^2 / 2 (exact model-space distances)."""
    if mu.space != nu.space:
        raise SpaceMismatchError("cost matrix needs both clouds on one space")
    d = np.asarray(distance(mu.space, mu.points[:, None, :], nu.points[None, :, :]))
    return 0.5 * d * d


@dataclass
class TransportPlan:
    source: WeightedCloud
    target: WeightedCloud
    i: np.ndarray
    j: np.ndarray
    mass: np.ndarray
    cost: float

    def __post_init__(self):
        self.i = np.asarray(self.i, dtype=np.int64)
        self.j = np.asarray(self.j, dtype=np.int64)
        self.mass = np.asarray(self.mass, dtype=float)
        if not (len(self.i) == len(self.j) == len(self.mass)):
            raise DomainError("coupling triples must align")
        if np.any(self.mass <= 0):
            raise DomainError("coupling masses must be strictly positive")

    def row_sums(self) -> np.ndarray:
        out = np.zeros(len(self.source))
        np.add.at(out, self.i, self.mass)
        return out

    def col_sums(self) -> np.ndarray:
        out = np.zeros(len(self.target))
        np.add.at(out, self.j, self.mass)
        return out

    def marginal_violation(self) -> float:
        r = np.abs(self.row_sums() - self.source.masses).max()
        c = np.abs(self.col_sums() - self.target.masses).max()
        return float(max(r, c))

    def recompute_cost(self) -> float:
        d = np.asarray(
            distance(self.source.space, self.source.points[self.i], self.target.points[self.j])
        )
        return float(np.sum(self.mass * 0.5 * d * d))

    def validate(self, marginal_tol: float = 1e-9, cost_tol: float = 1e-12) -> None:
        if self.marginal_violation() > marginal_tol:
            raise DomainError(
                f"plan marginals violated by {self.marginal_violation():.3e} > {marginal_tol}"
            )
        rc = self.recompute_cost()
        if abs(rc - self.cost) > cost_tol * max(1.0, abs(rc)):
            raise DomainError("stored cost does not match the couplings")

    def to_json(self) -> dict:
        return {
            "schema": "bbl-lab/1",
            "space": {"kind": self.source.space.kind, "n": self.source.space.n, "k": self.source.space.k},
            "cost": self.cost,
            "couplings": [
                {"i": int(a), "j": int(b), "mass": float(m)}
                for a, b, m in zip(self.i, self.j, self.mass)
            ],
        }


def _plan_from_dense(mu: WeightedCloud, nu: WeightedCloud, X: np.ndarray, C: np.ndarray) -> TransportPlan:
    ii, jj = np.nonzero(X > 0)
    mass = X[ii, jj]
    cost = float(np.sum(mass * C[ii, jj]))
    return TransportPlan(mu, nu, ii, jj, mass, cost)


def solve_exact(mu: WeightedCloud, nu: WeightedCloud) -> TransportPlan:
    """Minimum-cost coupling for cost d^2/2, exact to LP optimality.

    Deterministic for a fixed input ordering (the LP solver is
    deterministic and returns a vertex solution, so plans are sparse with at
    most |mu| + |nu| - 1 couplings).
    """
    n, m = len(mu), len(nu)
    if n * m > EXACT_SIZE_CAP:
        raise DomainError(
            f"instance {n} x {m} exceeds the exact-solver cap {EXACT_SIZE_CAP}; "
            "use solve_entropic"
        )
    C = cost_matrix(mu, nu)
    cols = np.arange(n * m)
    A1 = sparse.csr_matrix((np.ones(n * m), (np.repeat(np.arange(n), m), cols)), shape=(n, n * m))
    A2 = sparse.csr_matrix((np.ones(n * m), (np.tile(np.arange(m), n), cols)), shape=(m, n * m))
    A = sparse.vstack([A1, A2]).tocsc()
    beq = np.concatenate([mu.masses, nu.masses])
    method = "highs-ipm" if n * m >= 20_000 else "highs-ds"
    res = linprog(
        C.ravel(),
        A_eq=A,
        b_eq=beq,
        bounds=(0, None),
        method=method,
        options={
            "primal_feasibility_tolerance": 1e-10,
            "dual_feasibility_tolerance": 1e-10,
        },
    )
    if res.status != 0:
        raise RuntimeError(f"exact OT solve failed: {res.message}")
    X = res.x.reshape(n, m)
    plan = _plan_from_dense(mu, nu, X, C)
    plan.validate(marginal_tol=1e-9)
    return plan


@dataclass(frozen=True)
class SinkhornReport:
    converged: bool
    iterations: int
    marginal_violation: float
    epsilon: float
    epsilon_schedule: tuple[float, ...] = field(default=())


def solve_entropic(
    mu: WeightedCloud,
    nu: WeightedCloud,
    epsilon: float,
    max_iter: int = 2000,
    tol: float = 1e-7,
) -> tuple[TransportPlan, SinkhornReport]:
    """Entropically regularized plan by alternating marginal scaling in the
    log domain, annealing epsilon down to the requested value.

    Non-convergence is reported (achieved marginal violation), never silent.
    """
    if epsilon <= 0:
        raise DomainError("epsilon must be positive")
    C = cost_matrix(mu, nu)
    la = np.log(mu.masses)
    lb = np.log(nu.masses)
    f = np.zeros(len(mu))
    g = np.zeros(len(nu))
    scale = max(C.max(), epsilon)
    schedule = []
    e = max(scale * 0.1, epsilon)
    while e > epsilon * 1.0001:
        schedule.append(e)
        e /= 4.0
    schedule.append(epsilon)
    total_iters = 0
    violation = math.inf
    for eps in schedule:
        last = eps == schedule[-1]
        iters = max_iter if last else max(20, max_iter // (4 * len(schedule)))
        for it in range(iters):
            f = eps * (la - logsumexp((g[None, :] - C) / eps, axis=1))
            g = eps * (lb - logsumexp((f[:, None] - C) / eps, axis=0))
            total_iters += 1
            if it % 5 == 4 or it == iters - 1:
                logP = (f[:, None] + g[None, :] - C) / eps
                P = np.exp(logP)
                violation = float(
                    max(np.abs(P.sum(1) - mu.masses).max(), np.abs(P.sum(0) - nu.masses).max())
                )
                if last and violation <= tol:
                    break
    logP = (f[:, None] + g[None, :] - C) / eps
    P = np.exp(logP)
    # final exact row scaling: rows match the source, columns keep <= violation
    rows = P.sum(axis=1)
    P *= (mu.masses / np.where(rows > 0, rows, 1.0))[:, None]
    violation = float(max(np.abs(P.sum(1) - mu.masses).max(), np.abs(P.sum(0) - nu.masses).max()))
    P[P < MASS_PRUNE * P.max()] = 0.0
    plan = _plan_from_dense(mu, nu, P, C)
    report = SinkhornReport(
        converged=violation <= tol,
        iterations=total_iters,
        marginal_violation=violation,
        epsilon=epsilon,
        epsilon_schedule=tuple(schedule),
    )
    return plan, report


def displacement_interpolate(plan: TransportPlan, s: float) -> WeightedCloud:
    """Cloud of s-intermediate points of coupled pairs, with the coupling
    masses; the discrete pushforward under the s-interpolant map."""
    if not 0.0 < s < 1.0:
        raise DomainError(f"s must lie in (0,1), got {s}")
    space = plan.source.space
    xs = plan.source.points[plan.i]
    ys = plan.target.points[plan.j]
    zs = geodesic_point(space, xs, ys, s)  # raises CutLocusError on bad pairs
    return WeightedCloud(space, zs, plan.mass / plan.mass.sum())


def barycentric_map(plan: TransportPlan) -> np.ndarray:
    """Approximate Monge map: source index -> point.

    Euclidean: mass-weighted barycenter of the coupled targets.  Curved
    spaces: requires an assignment-like plan (one target per source row).
    """
    space = plan.source.space
    n = len(plan.source)
    out = np.zeros((n, space.embedding_dim))
    if space.kind == "euclidean":
        wsum = np.zeros(n)
        np.add.at(wsum, plan.i, plan.mass)
        np.add.at(out, plan.i, plan.mass[:, None] * plan.target.points[plan.j])
        return out / wsum[:, None]
    rows, counts = np.unique(plan.i, return_counts=True)
    if np.any(counts > 1):
        raise DomainError(
            "barycentric_map on a curved space needs an assignment-like plan "
            "(mass-split rows have no intrinsic barycenter here)"
        )
    out[plan.i] = plan.target.points[plan.j]
    return out


@dataclass(frozen=True)
class WassersteinBounds:
    ok: bool
    w: float  # integral of d^2 against the plan (= 2 * cost)
    lower: float  # theta_min^2
    upper: float  # theta_max^2


def wasserstein_bounds_check(
    plan: TransportPlan, A: DiscreteSet, B: DiscreteSet, k: float = 0.0, tol: float = 1e-9
) -> WassersteinBounds:
    """Check theta_min^2 <= W <= theta_max^2 for W = 2 * plan cost (the
    squared-distance transport integral)."""
    dmin, dmax = distance_extremes(A, B)
    w = 2.0 * plan.cost
    ok = (dmin * dmin <= w + tol) and (w <= dmax * dmax + tol)
    return WassersteinBounds(ok, w, dmin * dmin, dmax * dmax)
