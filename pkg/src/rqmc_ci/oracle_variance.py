"""Exact variances of one-dimensional scrambled-net averages.

In one dimension a scrambled net of ``n = 2**k`` points puts one point
uniformly in each interval ``[(l-1)/n, l/n)``, so

    var(mean) = n**-2 * sum_l var(f(x_l)),   x_l ~ U[(l-1)/n, l/n].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate


def _require_pow2(n: int) -> None:
    if not (isinstance(n, (int, np.integer)) and n >= 1 and n & (n - 1) == 0):
        raise ValueError(f"n must be a power of 2, got {n!r}")


def indicator_third(x):
    """f(x) = 1{x < 1/3} on the first coordinate."""
    x = np.asarray(x, dtype=np.float64)
    return (x[..., 0] if x.ndim > 1 else x) < 1.0 / 3.0


def smooth_1d(x):
    """f(x) = x exp(x - 1) on the first coordinate."""
    x = np.asarray(x, dtype=np.float64)
    x = x[..., 0] if x.ndim > 1 else x
    return x * np.exp(x - 1.0)


def var_indicator_third(n: int) -> float:
    """2 / (9 n^2) for f = 1{x < 1/3}."""
    _require_pow2(n)
    return 2.0 / (9.0 * n * n)


# antiderivatives of f(x) = x e^{x-1} and f(x)^2
def smooth_antiderivative(x):
    return (x - 1.0) * np.exp(x - 1.0)


def smooth_sq_antiderivative(x):
    return np.exp(2.0 * x - 2.0) * (0.5 * x * x - 0.5 * x + 0.25)


def _stratum_moments(n: int) -> tuple[np.ndarray, np.ndarray]:
    """n * integral of f and of f^2 over each stratum, from the antiderivatives.

    Differences are factored through expm1 so that each one keeps full
    relative precision even when the stratum is narrow.
    """
    h = 1.0 / n
    a = np.arange(n) * h
    b = a + h
    ea = np.exp(a - 1.0)
    # F(b) - F(a) = e^{a-1} [ (e^h - 1)(b - 1) + h ]
    dF = ea * (np.expm1(h) * (b - 1.0) + h)
    # G(b) - G(a) = e^{2a-2} [ (e^{2h} - 1) q(b) + q(b) - q(a) ],  q(x) = x^2/2 - x/2 + 1/4
    qb = 0.5 * b * b - 0.5 * b + 0.25
    dG = ea * ea * (np.expm1(2.0 * h) * qb + 0.5 * h * (a + b - 1.0))
    return n * dF, n * dG


def var_smooth_exact(n: int) -> float:
    """Exact variance of the n-point scrambled-net mean of x e^{x-1}."""
    _require_pow2(n)
    m1, m2 = _stratum_moments(n)
    per_stratum = np.maximum(m2 - m1 * m1, 0.0)
    return float(per_stratum.sum()) / (n * n)


SMOOTH_ASYMPTOTIC = (5.0 - math.exp(-2.0)) / 48.0


@dataclass(frozen=True)
class StratifiedVariance:
    n: int
    per_stratum: np.ndarray

    @property
    def total(self) -> float:
        return float(self.per_stratum.sum()) / (self.n * self.n)


class QuadratureError(RuntimeError):
    pass


def var_stratified_numeric(
    f: Callable[[float], float],
    n: int,
    tol: float = 1e-13,
    breakpoints: Sequence[float] = (),
    limit: int = 200,
) -> StratifiedVariance:
    """Per-stratum variances of a 1-d integrand by adaptive Gauss-Kronrod.

    Each stratum is split at any ``breakpoints`` inside it. The variance is
    integrated in centered form, n * int (f - mean)^2, to avoid cancellation.
    """
    _require_pow2(n)
    out = np.empty(n)
    for ell in range(n):
        a, b = ell / n, (ell + 1) / n
        cuts = [a] + sorted(p for p in breakpoints if a < p < b) + [b]

        def piecewise(g):
            total = 0.0
            for lo, hi in zip(cuts[:-1], cuts[1:]):
                val, _, *info = integrate.quad(g, lo, hi, epsabs=tol / n, epsrel=0.0,
                                               limit=limit, full_output=1)
                if len(info) > 1:  # quad appends a message only on trouble
                    raise QuadratureError(f"quadrature on [{lo}, {hi}]: {info[1]}")
                total += val
            return total

        mean = n * piecewise(lambda x: float(f(x)))
        out[ell] = n * piecewise(lambda x: (float(f(x)) - mean) ** 2)
    return StratifiedVariance(n, out)


KNOWN_VARIANCE = {
    "indicator_third": var_indicator_third,
    "smooth_1d": var_smooth_exact,
}

INTEGRANDS_1D = {
    "indicator_third": indicator_third,
    "smooth_1d": smooth_1d,
}

TRUE_MEANS_1D = {
    "indicator_third": 1.0 / 3.0,
    "smooth_1d": math.exp(-1.0),
}
