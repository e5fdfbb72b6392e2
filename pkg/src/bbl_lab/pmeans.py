"""Two-point weighted power means with extended exponents.

The mean of a, b >= 0 with weight s in (0,1) and exponent p is
((1-s)*a**p + s*b**p)**(1/p), extended by

    p = 0     -> a**(1-s) * b**s
    p = +inf  -> max(a, b)
    p = -inf  -> min(a, b)

and the convention that the mean is 0 whenever a*b == 0, for every p
(including +inf).  Exponents are carried by :class:`Exponent`, which keeps
rational values exact and knows about the lower endpoint p = -1/n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

__all__ = [
    "DomainError",
    "Exponent",
    "as_exponent",
    "pmean",
    "pmean_array",
    "bbl_target_exponent",
    "holder_combination_check",
]

# below this the direct power form loses all digits; switch to the log form
_SMALL_P = 1e-7

ExponentLike = Union["Exponent", int, float, Fraction]


class DomainError(ValueError):
    """Arguments outside an operation's documented domain."""


@dataclass(frozen=True)
class Exponent:
    """Extended-real exponent: a finite value or a signed infinity.

    ``value`` is a Fraction when constructed from integers/rationals (kept
    exact), a float otherwise, and None at the infinities.  ``infinite`` is
    -1/0/+1.  ``lower_endpoint`` marks p = -1/n exactly for the ambient
    dimension it was built with.
    """

    value: Union[Fraction, float, None]
    infinite: int = 0
    lower_endpoint: bool = False

    def __post_init__(self):
        if self.infinite not in (-1, 0, 1):
            raise DomainError("infinite must be -1, 0 or +1")
        if self.infinite != 0 and self.value is not None:
            raise DomainError("infinite exponent carries no finite value")
        if self.infinite == 0 and self.value is None:
            raise DomainError("finite exponent needs a value")
        if self.lower_endpoint and self.infinite != 0:
            raise DomainError("lower endpoint is a finite exponent")

    @staticmethod
    def of(x: ExponentLike) -> "Exponent":
        if isinstance(x, Exponent):
            return x
        if isinstance(x, (int, Fraction)):
            return Exponent(Fraction(x))
        x = float(x)
        if math.isinf(x):
            return Exponent(None, infinite=1 if x > 0 else -1)
        if math.isnan(x):
            raise DomainError("exponent cannot be NaN")
        return Exponent(x)

    @staticmethod
    def plus_inf() -> "Exponent":
        return Exponent(None, infinite=1)

    @staticmethod
    def minus_inf() -> "Exponent":
        return Exponent(None, infinite=-1)

    @staticmethod
    def lower(n: int) -> "Exponent":
        """The endpoint p = -1/n, flagged."""
        if n < 1:
            raise DomainError("dimension must be a positive integer")
        return Exponent(Fraction(-1, n), lower_endpoint=True)

    @property
    def is_finite(self) -> bool:
        return self.infinite == 0

    @property
    def is_zero(self) -> bool:
        return self.infinite == 0 and self.value == 0

    def __float__(self) -> float:
        if self.infinite > 0:
            return math.inf
        if self.infinite < 0:
            return -math.inf
        return float(self.value)

    def is_lower_endpoint_for(self, n: int) -> bool:
        """True iff this exponent is exactly -1/n."""
        if not self.is_finite:
            return False
        if self.lower_endpoint:
            return self.value == Fraction(-1, n)
        if isinstance(self.value, Fraction):
            return self.value == Fraction(-1, n)
        return self.value == -1.0 / n

    def __str__(self) -> str:
        if self.infinite > 0:
            return "+inf"
        if self.infinite < 0:
            return "-inf"
        return str(self.value)


def as_exponent(p: ExponentLike) -> Exponent:
    return Exponent.of(p)


def _check_sab(s: float, a: float, b: float) -> None:
    if not 0.0 < s < 1.0:
        raise DomainError(f"weight s must lie in (0,1), got {s}")
    if a < 0 or b < 0:
        raise DomainError(f"mean arguments must be nonnegative, got {a}, {b}")


def _pow(x: float, y: float) -> float:
    # x > 0; saturate instead of raising on overflow
    try:
        return x**y
    except OverflowError:
        return math.inf


def pmean(s: float, p: ExponentLike, a: float, b: float) -> float:
    """Weighted power mean of (a, b) with weight s and extended exponent p."""
    _check_sab(s, a, b)
    a = float(a)
    b = float(b)
    if a == 0.0 or b == 0.0:
        return 0.0
    if a == b:
        # removes the 0*inf ambiguity at p = +-inf and is exact for all p
        return a
    p = Exponent.of(p)
    if p.infinite > 0:
        return max(a, b)
    if p.infinite < 0:
        return min(a, b)
    pv = float(p)
    if pv == 0.0:
        return math.exp((1.0 - s) * math.log(a) + s * math.log(b))
    if abs(pv) < _SMALL_P:
        # second-order expansion around p=0 in log space
        u = math.log(a)
        v = math.log(b)
        return math.exp((1.0 - s) * u + s * v + 0.5 * pv * s * (1.0 - s) * (u - v) ** 2)
    # factor around the dominant argument so large |p| cannot overflow
    anchor = max(a, b) if pv > 0 else min(a, b)
    t = (1.0 - s) * _pow(a / anchor, pv) + s * _pow(b / anchor, pv)
    return anchor * _pow(t, 1.0 / pv)


def pmean_array(s: float, p: ExponentLike, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vectorized :func:`pmean` over arrays of nonnegative values."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if not 0.0 < s < 1.0:
        raise DomainError(f"weight s must lie in (0,1), got {s}")
    if np.any(a < 0) or np.any(b < 0):
        raise DomainError("mean arguments must be nonnegative")
    p = Exponent.of(p)
    zero = (a == 0) | (b == 0)
    if p.infinite > 0:
        out = np.maximum(a, b)
    elif p.infinite < 0:
        out = np.minimum(a, b)
    else:
        pv = float(p)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            la = np.where(zero, 0.0, np.log(np.where(zero, 1.0, a)))
            lb = np.where(zero, 0.0, np.log(np.where(zero, 1.0, b)))
            if abs(pv) < _SMALL_P:
                out = np.exp((1 - s) * la + s * lb + 0.5 * pv * s * (1 - s) * (la - lb) ** 2)
            else:
                anchor = np.maximum(a, b) if pv > 0 else np.minimum(a, b)
                anchor = np.where(zero, 1.0, anchor)
                t = (1 - s) * (a / anchor) ** pv + s * (b / anchor) ** pv
                out = anchor * t ** (1.0 / pv)
        out = np.where(a == b, a, out)
    return np.where(zero, 0.0, out)


def bbl_target_exponent(p: ExponentLike, n: int) -> Exponent:
    """Map p to p/(1+n*p): +inf -> 1/n, -1/n -> -inf; the exponent that the
    combined mass inequality runs at."""
    if n < 1 or int(n) != n:
        raise DomainError(f"dimension must be a positive integer, got {n}")
    n = int(n)
    p = Exponent.of(p)
    if p.infinite > 0:
        return Exponent(Fraction(1, n))
    if p.infinite < 0:
        raise DomainError("p must be >= -1/n")
    if p.is_lower_endpoint_for(n):
        return Exponent.minus_inf()
    v = p.value
    if isinstance(v, Fraction):
        if v < Fraction(-1, n):
            raise DomainError(f"p must be >= -1/n, got {v} with n={n}")
        return Exponent(v / (1 + n * v))
    if v < -1.0 / n:
        raise DomainError(f"p must be >= -1/n, got {v} with n={n}")
    return Exponent(v / (1.0 + n * v))


def _combination_exponent(p: Exponent, q: Exponent) -> Exponent:
    """eta = p*q/(p+q), with eta=0 for p=q=0 and the limit conventions at
    the infinities; requires p+q >= 0."""
    if p.infinite != 0 and q.infinite != 0:
        if p.infinite < 0 or q.infinite < 0:
            raise DomainError("p + q >= 0 fails for these infinities")
        return Exponent.plus_inf()
    if p.infinite != 0 or q.infinite != 0:
        inf, fin = (p, q) if p.infinite != 0 else (q, p)
        if inf.infinite < 0:
            raise DomainError("p + q >= 0 fails with an exponent at -inf")
        return fin  # lim p*q/(p+q) as one exponent -> +inf
    pv, qv = p.value, q.value
    if pv == 0 and qv == 0:
        return Exponent(Fraction(0))
    tot = pv + qv
    if tot < 0:
        raise DomainError(f"p + q must be >= 0, got {float(tot)}")
    if tot == 0:
        return Exponent.minus_inf()  # limit of p*q/(p+q) as p+q -> 0+
    if isinstance(pv, Fraction) and isinstance(qv, Fraction):
        return Exponent(pv * qv / tot)
    return Exponent(float(pv) * float(qv) / float(tot))


def holder_combination_check(
    s: float,
    p: ExponentLike,
    q: ExponentLike,
    a: float,
    b: float,
    c: float,
    d: float,
    abs_tol: float = 1e-12,
    rel_tol: float = 1e-10,
) -> tuple[bool, float]:
    """Check M_s^p(a,b) * M_s^q(c,d) >= M_s^eta(ac, bd) with eta = pq/(p+q).

    Returns (passed, slack) with slack = left - right.
    """
    p = Exponent.of(p)
    q = Exponent.of(q)
    eta = _combination_exponent(p, q)
    left = pmean(s, p, a, b) * pmean(s, q, c, d)
    right = pmean(s, eta, a * c, b * d)
    slack = left - right
    tol = abs_tol + rel_tol * max(abs(left), abs(right))
    return slack >= -tol, slack
