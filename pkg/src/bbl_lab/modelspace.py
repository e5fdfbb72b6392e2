"""Constant-curvature model geometries: Euclidean space, round spheres and
hyperbolic spaces, with distances, geodesic interpolation, curvature
comparison functions and closed-form ball volumes.

Curved points live in embedding coordinates (unit-type vectors in R^{n+1}
scaled to radius 1/sqrt(|k|)); chart coordinates (colatitude/longitude on the
sphere, polar radius/angle on the hyperbolic plane) are used by the grid
machinery for n = 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .pmeans import DomainError

__all__ = [
    "CutLocusError",
    "SpaceMismatchError",
    "ModelSpace",
    "sk",
    "sk_array",
    "tau",
    "distance",
    "geodesic_point",
    "vol_distortion",
    "ball_volume",
]

# switch to the series form of sk below this value of sqrt(|k|)*r (0/0 form)
_SK_SERIES_CUT = 1e-4
# distances this close to the sphere diameter count as cut-locus pairs
_ANTIPODAL_SLACK = 1e-9


class CutLocusError(ValueError):
    """A pair of points at or beyond the cut locus was encountered."""


class SpaceMismatchError(ValueError):
    """Points or sets passed to an operation live on different spaces."""


@dataclass(frozen=True)
class ModelSpace:
    kind: str  # "euclidean" | "sphere" | "hyperbolic"
    n: int
    k: float

    def __post_init__(self):
        if self.kind not in ("euclidean", "sphere", "hyperbolic"):
            raise DomainError(f"unknown space kind {self.kind!r}")
        if self.kind == "euclidean":
            if self.n not in (1, 2, 3):
                raise DomainError("euclidean spaces are supported for n in {1,2,3}")
            if self.k != 0:
                raise DomainError("euclidean space has k = 0")
        else:
            if self.n not in (2, 3):
                raise DomainError("curved spaces are supported for n in {2,3}")
            if self.kind == "sphere" and not self.k > 0:
                raise DomainError("sphere needs k > 0")
            if self.kind == "hyperbolic" and not self.k < 0:
                raise DomainError("hyperbolic space needs k < 0")

    @staticmethod
    def euclidean(n: int) -> "ModelSpace":
        return ModelSpace("euclidean", n, 0.0)

    @staticmethod
    def sphere(n: int = 2, k: float = 1.0) -> "ModelSpace":
        return ModelSpace("sphere", n, float(k))

    @staticmethod
    def hyperbolic(n: int = 2, k: float = -1.0) -> "ModelSpace":
        return ModelSpace("hyperbolic", n, float(k))

    @property
    def radius(self) -> float:
        """Curvature radius 1/sqrt(|k|) (undefined for euclidean)."""
        if self.kind == "euclidean":
            raise DomainError("euclidean space has no curvature radius")
        return 1.0 / math.sqrt(abs(self.k))

    @property
    def embedding_dim(self) -> int:
        return self.n if self.kind == "euclidean" else self.n + 1

    @property
    def diameter(self) -> float:
        if self.kind == "sphere":
            return math.pi * self.radius
        return math.inf

    # -- point helpers -----------------------------------------------------

    def check_points(self, x: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.embedding_dim:
            raise SpaceMismatchError(
                f"points of dimension {x.shape[-1]} on a space with embedding "
                f"dimension {self.embedding_dim}"
            )
        if self.kind == "sphere":
            r2 = np.sum(x * x, axis=-1)
            if not np.allclose(r2, 1.0 / self.k, rtol=tol, atol=tol):
                raise SpaceMismatchError("point does not satisfy |x|^2 = 1/k")
        elif self.kind == "hyperbolic":
            q = np.sum(x[..., :-1] ** 2, axis=-1) - x[..., -1] ** 2
            if not np.allclose(q, 1.0 / self.k, rtol=tol, atol=tol):
                raise SpaceMismatchError("point does not satisfy <x,x>_M = 1/k")
        return x

    def renormalize(self, x: np.ndarray) -> np.ndarray:
        """Project back onto the manifold after embedding arithmetic."""
        x = np.asarray(x, dtype=float)
        if self.kind == "euclidean":
            return x
        rho = self.radius
        if self.kind == "sphere":
            nrm = np.linalg.norm(x, axis=-1, keepdims=True)
            return x * (rho / nrm)
        q = x[..., -1:] ** 2 - np.sum(x[..., :-1] ** 2, axis=-1, keepdims=True)
        return x / np.sqrt(q / rho**2)

    def sphere_point(self, phi: float, lam: float) -> np.ndarray:
        """n=2 sphere point from colatitude phi in [0,pi] and longitude lam."""
        if self.kind != "sphere" or self.n != 2:
            raise DomainError("sphere_point is defined on the 2-sphere")
        rho = self.radius
        sp = math.sin(phi)
        return np.array([rho * sp * math.cos(lam), rho * sp * math.sin(lam), rho * math.cos(phi)])

    def hyperbolic_point(self, r: float, phi: float) -> np.ndarray:
        """n=2 hyperbolic point from polar radius r >= 0 and angle phi."""
        if self.kind != "hyperbolic" or self.n != 2:
            raise DomainError("hyperbolic_point is defined on the hyperbolic plane")
        rho = self.radius
        w = r / rho
        return np.array(
            [rho * math.sinh(w) * math.cos(phi), rho * math.sinh(w) * math.sin(phi), rho * math.cosh(w)]
        )

    def to_chart(self, x: np.ndarray) -> np.ndarray:
        """Chart coordinates for grid snapping (euclidean: identity; sphere:
        (phi, lam); hyperbolic plane: (r, phi))."""
        x = np.asarray(x, dtype=float)
        if self.kind == "euclidean":
            return x
        if self.n != 2:
            raise DomainError("chart coordinates implemented for n = 2 only")
        rho = self.radius
        if self.kind == "sphere":
            phi = np.arccos(np.clip(x[..., 2] / rho, -1.0, 1.0))
            lam = np.mod(np.arctan2(x[..., 1], x[..., 0]), 2 * np.pi)
            return np.stack([phi, lam], axis=-1)
        w = np.arccosh(np.maximum(x[..., 2] / rho, 1.0))
        phi = np.mod(np.arctan2(x[..., 1], x[..., 0]), 2 * np.pi)
        return np.stack([w * rho, phi], axis=-1)

    def from_chart(self, c: np.ndarray) -> np.ndarray:
        c = np.asarray(c, dtype=float)
        if self.kind == "euclidean":
            return c
        if self.n != 2:
            raise DomainError("chart coordinates implemented for n = 2 only")
        rho = self.radius
        if self.kind == "sphere":
            phi, lam = c[..., 0], c[..., 1]
            sp = np.sin(phi)
            return np.stack(
                [rho * sp * np.cos(lam), rho * sp * np.sin(lam), rho * np.cos(phi)], axis=-1
            )
        w = c[..., 0] / rho
        phi = c[..., 1]
        return np.stack(
            [rho * np.sinh(w) * np.cos(phi), rho * np.sinh(w) * np.sin(phi), rho * np.cosh(w)],
            axis=-1,
        )


def sk(k: float, r: float) -> float:
    """sin(sqrt(k) r)/(sqrt(k) r) for k>0, sinh(sqrt(-k) r)/(sqrt(-k) r) for
    k<0, and 1 for k=0 or r=0."""
    if r < 0:
        raise DomainError(f"r must be nonnegative, got {r}")
    if k == 0.0 or r == 0.0:
        return 1.0
    x = math.sqrt(abs(k)) * r
    if k > 0 and x >= math.pi:
        raise DomainError(f"sk undefined for sqrt(k)*r >= pi (got {x})")
    if x < _SK_SERIES_CUT:
        x2 = x * x
        return 1.0 - x2 / 6.0 + x2 * x2 / 120.0 if k > 0 else 1.0 + x2 / 6.0 + x2 * x2 / 120.0
    return math.sin(x) / x if k > 0 else math.sinh(x) / x


def sk_array(k: float, r: np.ndarray) -> np.ndarray:
    """Vectorized :func:`sk`."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("r must be nonnegative")
    if k == 0.0:
        return np.ones_like(r)
    x = math.sqrt(abs(k)) * r
    if k > 0 and np.any(x >= math.pi):
        raise DomainError("sk undefined for sqrt(k)*r >= pi")
    small = x < _SK_SERIES_CUT
    x2 = x * x
    if k > 0:
        series = 1.0 - x2 / 6.0 + x2 * x2 / 120.0
    else:
        series = 1.0 + x2 / 6.0 + x2 * x2 / 120.0
    xs = np.where(small, 1.0, x)
    direct = np.sin(xs) / xs if k > 0 else np.sinh(xs) / xs
    return np.where(small, series, direct)


def tau(s: float, k: float, n: int, theta: float) -> float:
    """Distortion coefficient tau_s^{k,n}(theta); +inf once k*theta^2 >= pi^2."""
    if not 0.0 < s < 1.0:
        raise DomainError(f"s must lie in (0,1), got {s}")
    if n < 2 or int(n) != n:
        raise DomainError(f"n must be an integer >= 2, got {n}")
    if theta < 0:
        raise DomainError(f"theta must be nonnegative, got {theta}")
    kt2 = k * theta * theta
    if kt2 == 0.0:
        return s
    e = 1.0 - 1.0 / n
    x = math.sqrt(abs(k)) * theta
    if kt2 < 0.0:
        return s ** (1.0 / n) * (math.sinh(s * x) / math.sinh(x)) ** e
    if kt2 >= math.pi**2:
        return math.inf
    return s ** (1.0 / n) * (math.sin(s * x) / math.sin(x)) ** e


def _same_space(space: ModelSpace, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = space.embedding_dim
    if x.shape[-1] != d or y.shape[-1] != d:
        raise SpaceMismatchError(
            f"points with trailing dimensions {x.shape[-1]}/{y.shape[-1]} on a "
            f"space with embedding dimension {d}"
        )
    return x, y


def distance(space: ModelSpace, x: np.ndarray, y: np.ndarray) -> np.ndarray | float:
    """Geodesic distance; broadcasts over leading axes."""
    x, y = _same_space(space, x, y)
    if space.kind == "euclidean":
        out = np.linalg.norm(x - y, axis=-1)
    elif space.kind == "sphere":
        rho = space.radius
        c = np.sum(x * y, axis=-1) / rho**2
        out = rho * np.arccos(np.clip(c, -1.0, 1.0))
    else:
        rho = space.radius
        q = np.sum(x[..., :-1] * y[..., :-1], axis=-1) - x[..., -1] * y[..., -1]
        out = rho * np.arccosh(np.maximum(-q / rho**2, 1.0))
    return float(out) if out.ndim == 0 else out


def geodesic_point(space: ModelSpace, x: np.ndarray, y: np.ndarray, s: float) -> np.ndarray:
    """The point z with d(x,z) = s*d(x,y) and d(z,y) = (1-s)*d(x,y).

    Unique along the minimizing geodesic; raises :class:`CutLocusError` for
    (near-)antipodal sphere pairs, where the midpoint set is not a singleton.
    """
    if not 0.0 <= s <= 1.0:
        raise DomainError(f"s must lie in [0,1], got {s}")
    x, y = _same_space(space, x, y)
    if space.kind == "euclidean":
        return (1.0 - s) * x + s * y
    rho = space.radius
    d = np.asarray(distance(space, x, y))
    if space.kind == "sphere" and np.any(d >= space.diameter - _ANTIPODAL_SLACK):
        raise CutLocusError("antipodal sphere pair: the s-intermediate point is not unique")
    w = d / rho
    tiny = w < 1e-12
    ws = np.where(tiny, 1.0, w)
    if space.kind == "sphere":
        c1 = np.sin((1.0 - s) * ws) / np.sin(ws)
        c2 = np.sin(s * ws) / np.sin(ws)
    else:
        c1 = np.sinh((1.0 - s) * ws) / np.sinh(ws)
        c2 = np.sinh(s * ws) / np.sinh(ws)
    c1 = np.where(tiny, 1.0 - s, c1)
    c2 = np.where(tiny, s, c2)
    z = c1[..., None] * x + c2[..., None] * y
    return space.renormalize(z)


def vol_distortion(space: ModelSpace, s: float, x: np.ndarray, y: np.ndarray) -> np.ndarray | float:
    """Volume distortion (sk(s*d)/sk(d))^(n-1); exact in constant curvature,
    identically 1 in euclidean space and at d = 0."""
    if not 0.0 < s < 1.0:
        raise DomainError(f"s must lie in (0,1), got {s}")
    x, y = _same_space(space, x, y)
    if space.kind == "euclidean":
        d = np.linalg.norm(x - y, axis=-1)
        out = np.ones_like(d)
        return float(out) if out.ndim == 0 else out
    d = np.asarray(distance(space, x, y))
    if space.kind == "sphere" and np.any(math.sqrt(space.k) * d >= math.pi):
        raise DomainError("vol_distortion undefined at or beyond the cut locus")
    out = (sk_array(space.k, s * d) / sk_array(space.k, d)) ** (space.n - 1)
    return float(out) if out.ndim == 0 else out


def ball_volume(space: ModelSpace, r: float) -> float:
    """Closed-form volume of a geodesic ball of radius r."""
    if not r > 0:
        raise DomainError(f"r must be positive, got {r}")
    kind, n, k = space.kind, space.n, space.k
    if kind == "sphere" and r >= space.diameter:
        raise DomainError("ball radius must be below the sphere diameter")
    if kind == "euclidean":
        return {1: 2.0 * r, 2: math.pi * r * r, 3: 4.0 / 3.0 * math.pi * r**3}[n]
    rho = space.radius
    w = r / rho
    if kind == "sphere":
        if n == 2:
            return (2.0 * math.pi / k) * (1.0 - math.cos(w))
        return 2.0 * math.pi * rho**3 * (w - math.sin(w) * math.cos(w))
    if n == 2:
        return (2.0 * math.pi / -k) * (math.cosh(w) - 1.0)
    return 2.0 * math.pi * rho**3 * (math.sinh(w) * math.cosh(w) - w)
