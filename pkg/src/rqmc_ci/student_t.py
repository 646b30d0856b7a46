"""Student's t distribution via the regularized incomplete beta function."""

from __future__ import annotations

import math

_TINY = 1e-300
_EPS = 1e-16


def _betacf(a: float, b: float, x: float, max_iter: int = 10_000) -> float:
    """Continued fraction for I_x(a, b), modified Lentz evaluation."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) for a, b > 0 and 0 <= x <= 1."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_cdf(t: float, dof: float) -> float:
    """P(T <= t) for T ~ t_dof."""
    if dof <= 0:
        raise ValueError("degrees of freedom must be positive")
    if t == 0.0:
        return 0.5
    tail = 0.5 * betainc(0.5 * dof, 0.5, dof / (dof + t * t))
    return 1.0 - tail if t > 0 else tail


def t_quantile(p: float, dof: int, tol: float = 1e-10) -> float:
    """Inverse of :func:`t_cdf` by safeguarded secant on a bracketing interval.

    The returned value satisfies ``|t_cdf(q, dof) - p| <= tol``.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly between 0 and 1")
    if dof < 1:
        raise ValueError("degrees of freedom must be at least 1")
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return -t_quantile(1.0 - p, dof, tol)

    # tail-relative stopping keeps extreme quantiles accurate as well
    stop = 0.5 * tol * min(1.0, 2.0 * (1.0 - p))
    lo, flo = 0.0, 0.5 - p
    hi = 1.0
    fhi = t_cdf(hi, dof) - p
    while fhi < 0.0:
        lo, flo = hi, fhi
        hi *= 2.0
        fhi = t_cdf(hi, dof) - p

    # each pass: one secant step, then one bisection so the bracket always halves
    for _ in range(200):
        for x in (hi - fhi * (hi - lo) / (fhi - flo), 0.5 * (lo + hi)):
            if not lo < x < hi:
                continue
            fx = t_cdf(x, dof) - p
            if abs(fx) <= stop:
                return x
            if fx < 0.0:
                lo, flo = x, fx
            else:
                hi, fhi = x, fx
        if hi - lo <= 4 * _EPS * hi:
            break
    return lo if -flo < fhi else hi
