"""Quantitative Hoelder gap in four exponent regimes, plus the quantitative
Young inequality.

For s in (0,1), dimension n and p >= -1/n the product of means
M_s^p(a,b) * M_s^{-pt}(c,d), with pt = p/(pn+1), dominates
M_s^{-1/n}(ac,bd) * (1 + G) for an explicit nonnegative gap G that vanishes
exactly on an algebraic locus depending on the regime:

    finite p != 0 : a/b = (d/c)^(1/(pn+1))
    p = 0         : ac = bd
    p = +inf      : a = b
    p = -1/n      : c = d

G is computed from the argument ratios only, so it is scale invariant in
(a,b) and (c,d) as computed, not merely up to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .pmeans import DomainError, Exponent, ExponentLike, as_exponent, pmean, pmean_array

__all__ = [
    "GapInput",
    "gap",
    "gap_array",
    "quantitative_holder_check",
    "gap_zero_locus",
    "quantitative_young_check",
]

# |p| below this is dispatched to the p=0 formula; the endpoints are only
# recognized symbolically (Exponent infinities / exact -1/n)
_P_ZERO_EPS = 1e-12


@dataclass(frozen=True)
class GapInput:
    """Arguments of the gap function; a,b,c,d must be strictly positive."""

    s: float
    p: Exponent
    n: int
    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise DomainError(f"s must lie in (0,1), got {self.s}")
        if self.n < 1 or int(self.n) != self.n:
            raise DomainError(f"n must be a positive integer, got {self.n}")
        object.__setattr__(self, "p", as_exponent(self.p))
        if self.p.infinite < 0:
            raise DomainError("p must be >= -1/n")
        if self.p.is_finite and float(self.p) < -1.0 / self.n - 1e-15:
            raise DomainError(f"p must be >= -1/n, got {float(self.p)} with n={self.n}")
        for name in ("a", "b", "c", "d"):
            v = getattr(self, name)
            if not v > 0:
                raise DomainError(f"{name} must be strictly positive, got {v}")


def _pow(x: float, y: float) -> float:
    if x == 0.0:
        return 0.0
    try:
        return x**y
    except OverflowError:
        return math.inf


def _gap_positive(s: float, p: float, n: int, a: float, b: float, c: float, d: float) -> float:
    """Gap for finite p > 0; everything is expressed through the ratios a/b
    and (bd)/(ac), which makes the scale invariance exact."""
    pt = p / (p * n + 1.0)
    mp = max(p * n, 1.0)  # tie pn == 1 lands on the pn >= 1 branch (formulas agree)
    e_mean = p * pt * n / mp
    e_ref = pt / mp
    e_out = mp / (pt * n)
    rab = a / b
    q = (b * d) / (a * c)
    t1 = _pow(pmean(s, -p, 1.0, rab), e_mean) - _pow(pmean(s, -1.0 / n, 1.0, q), e_ref)
    t2 = _pow(pmean(s, -p, 1.0 / rab, 1.0), e_mean) - _pow(pmean(s, -1.0 / n, 1.0 / q, 1.0), e_ref)
    return (n / mp) * ((1.0 - s) * _pow(abs(t1), e_out) + s * _pow(abs(t2), e_out))


def _gap_zero(s: float, n: int, a: float, b: float, c: float, d: float) -> float:
    """Gap for p = 0; normalized by ac so only q = (bd)/(ac) enters."""
    st = min(s, 1.0 - s)
    q = (b * d) / (a * c)
    m = pmean(s, 1.0 / n, q, 1.0)
    return n * st * _pow(m, -1.0 / n) * _pow(abs(_pow(q, st / n) - 1.0), 1.0 / st)


def _gap_inf(s: float, n: int, a: float, b: float, c: float, d: float) -> float:
    """Gap for p = +inf; normalized so only beta = b/a and delta = d/c enter."""
    st = min(s, 1.0 - s)
    beta = b / a
    delta = d / c
    bn = _pow(beta, 1.0 / n)
    num = abs(1.0 - bn)
    if num == 0.0:
        return 0.0
    den = bn * _pow(pmean(s, math.inf, 1.0, delta), 1.0 / n)
    return n * st * (num / den) * _pow(pmean(s, -1.0 / n, 1.0, beta * delta), 1.0 / n)


def gap(gi: GapInput) -> float:
    """G_s^{p,n}(a,b,c,d) >= 0, dispatched over the four exponent regimes."""
    s, n, a, b, c, d = gi.s, gi.n, gi.a, gi.b, gi.c, gi.d
    p = gi.p
    if p.infinite > 0:
        return _gap_inf(s, n, a, b, c, d)
    if p.is_lower_endpoint_for(n):
        # p = -1/n reflects to the +inf formula with the pairs swapped
        return _gap_inf(s, n, c, d, a, b)
    pv = float(p)
    if abs(pv) < _P_ZERO_EPS:
        return _gap_zero(s, n, a, b, c, d)
    if pv > 0:
        return _gap_positive(s, pv, n, a, b, c, d)
    # p in (-1/n, 0): reflect through -pt = -p/(pn+1) > 0 with pairs swapped
    mpt = -pv / (pv * n + 1.0)
    return _gap_positive(s, mpt, n, c, d, a, b)


def _gap_positive_arr(s, p, n, a, b, c, d):
    pt = p / (p * n + 1.0)
    mp = max(p * n, 1.0)
    e_mean = p * pt * n / mp
    e_ref = pt / mp
    e_out = mp / (pt * n)
    rab = a / b
    q = (b * d) / (a * c)
    one = np.ones_like(rab)
    with np.errstate(over="ignore"):
        t1 = pmean_array(s, -p, one, rab) ** e_mean - pmean_array(s, -1.0 / n, one, q) ** e_ref
        t2 = (
            pmean_array(s, -p, 1.0 / rab, one) ** e_mean
            - pmean_array(s, -1.0 / n, 1.0 / q, one) ** e_ref
        )
        return (n / mp) * ((1.0 - s) * np.abs(t1) ** e_out + s * np.abs(t2) ** e_out)


def _gap_zero_arr(s, n, a, b, c, d):
    st = min(s, 1.0 - s)
    q = (b * d) / (a * c)
    m = pmean_array(s, 1.0 / n, q, np.ones_like(q))
    return n * st * m ** (-1.0 / n) * np.abs(q ** (st / n) - 1.0) ** (1.0 / st)


def _gap_inf_arr(s, n, a, b, c, d):
    st = min(s, 1.0 - s)
    beta = b / a
    delta = d / c
    one = np.ones_like(beta)
    bn = beta ** (1.0 / n)
    num = np.abs(1.0 - bn)
    den = bn * pmean_array(s, math.inf, one, delta) ** (1.0 / n)
    return n * st * (num / den) * pmean_array(s, -1.0 / n, one, beta * delta) ** (1.0 / n)


def gap_array(s: float, p: ExponentLike, n: int, a, b, c, d) -> np.ndarray:
    """Vectorized :func:`gap` for one exponent over arrays of positive
    arguments (same regime dispatch as the scalar path)."""
    a, b, c, d = (np.asarray(v, dtype=float) for v in (a, b, c, d))
    if min(a.min(), b.min(), c.min(), d.min()) <= 0:
        raise DomainError("gap arguments must be strictly positive")
    p = as_exponent(p)
    if p.infinite > 0:
        return _gap_inf_arr(s, n, a, b, c, d)
    if p.is_lower_endpoint_for(n):
        return _gap_inf_arr(s, n, c, d, a, b)
    pv = float(p)
    if pv < -1.0 / n - 1e-15:
        raise DomainError("p must be >= -1/n")
    if abs(pv) < _P_ZERO_EPS:
        return _gap_zero_arr(s, n, a, b, c, d)
    if pv > 0:
        return _gap_positive_arr(s, pv, n, a, b, c, d)
    mpt = -pv / (pv * n + 1.0)
    return _gap_positive_arr(s, mpt, n, c, d, a, b)


def quantitative_holder_check(
    gi: GapInput,
    abs_tol: float = 1e-12,
    rel_tol: float = 1e-10,
) -> tuple[bool, float]:
    """Check M_s^p(a,b)*M_s^{-pt}(c,d) >= M_s^{-1/n}(ac,bd)*(1 + gap).

    Returns (passed, slack) with slack = left - right; slack can legitimately
    be zero on the locus, hence the mixed absolute/relative tolerance.
    """
    from .pmeans import bbl_target_exponent

    pt = bbl_target_exponent(gi.p, gi.n)
    minus_pt: ExponentLike
    if pt.infinite > 0:
        minus_pt = Exponent.minus_inf()
    elif pt.infinite < 0:
        minus_pt = Exponent.plus_inf()
    else:
        minus_pt = Exponent(-pt.value)
    left = pmean(gi.s, gi.p, gi.a, gi.b) * pmean(gi.s, minus_pt, gi.c, gi.d)
    right = pmean(gi.s, -1.0 / gi.n, gi.a * gi.c, gi.b * gi.d) * (1.0 + gap(gi))
    slack = left - right
    tol = abs_tol + rel_tol * max(abs(left), abs(right))
    return slack >= -tol, slack


def gap_zero_locus(gi: GapInput, tol: float) -> bool:
    """Whether the regime's algebraic zero condition holds within relative
    tolerance tol."""
    if tol <= 0:
        raise DomainError("tol must be positive")
    p = gi.p
    if p.infinite > 0:
        return abs(gi.a - gi.b) <= tol * max(gi.a, gi.b)
    if p.is_lower_endpoint_for(gi.n):
        return abs(gi.c - gi.d) <= tol * max(gi.c, gi.d)
    pv = float(p)
    if abs(pv) < _P_ZERO_EPS:
        ac, bd = gi.a * gi.c, gi.b * gi.d
        return abs(ac - bd) <= tol * max(ac, bd)
    lhs = gi.a / gi.b
    rhs = _pow(gi.d / gi.c, 1.0 / (pv * gi.n + 1.0))
    return abs(lhs - rhs) <= tol * max(lhs, rhs)


@dataclass(frozen=True)
class YoungCheck:
    passed: bool
    slack: float
    correction: float = field(default=0.0)


def quantitative_young_check(
    u: float, v: float, r: float, tol: float = 1e-12
) -> tuple[bool, float]:
    """Check u*v <= u^r/r + v^r'/r' - (1/r)*|u - v^(1/(r-1))|^r for r >= 2.

    Returns (passed, slack) with slack = right - left >= 0 when it holds.
    """
    if u < 0 or v < 0:
        raise DomainError("u and v must be nonnegative")
    if r < 2:
        raise DomainError(f"r must be >= 2, got {r}")
    rp = r / (r - 1.0)
    correction = (1.0 / r) * _pow(abs(u - _pow(v, 1.0 / (r - 1.0))), r)
    right = _pow(u, r) / r + _pow(v, rp) / rp - correction
    slack = right - u * v
    scale = max(u * v, abs(right), 1.0)
    return slack >= -tol * scale, slack
