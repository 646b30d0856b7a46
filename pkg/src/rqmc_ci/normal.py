"""Standard normal CDF and quantile, vectorized over numpy arrays."""

from __future__ import annotations

import numpy as np
from scipy.special import erfc

_SQRT2 = np.sqrt(2.0)
_SQRT2PI = np.sqrt(2.0 * np.pi)

# Acklam's rational approximation (relative error ~1.15e-9 before polishing)
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def phi(z):
    """N(0,1) cumulative distribution function."""
    out = 0.5 * erfc(-np.asarray(z, dtype=np.float64) / _SQRT2)
    return out if np.ndim(out) else float(out)


def _horner(coef, x):
    acc = np.zeros_like(x) + coef[0]
    for c in coef[1:]:
        acc = acc * x + c
    return acc


def phi_inv(p):
    """N(0,1) quantile function on the open interval (0, 1).

    Acklam's rational approximation followed by one Halley step against
    :func:`phi`. Inputs equal to 0 or 1 (or outside) raise ``ValueError``.
    """
    p = np.asarray(p, dtype=np.float64)
    if np.any(~((p > 0.0) & (p < 1.0))):
        raise ValueError("phi_inv requires 0 < p < 1")
    x = np.empty_like(p)

    lower = p < _P_LOW
    upper = p > 1.0 - _P_LOW
    mid = ~(lower | upper)

    q = p[mid] - 0.5
    r = q * q
    x[mid] = _horner(_A, r) * q / (_horner(_B, r) * r + 1.0)
    if np.any(lower):
        q = np.sqrt(-2.0 * np.log(p[lower]))
        x[lower] = _horner(_C, q) / (_horner(_D, q) * q + 1.0)
    if np.any(upper):
        q = np.sqrt(-2.0 * np.log1p(-p[upper]))
        x[upper] = -_horner(_C, q) / (_horner(_D, q) * q + 1.0)

    # Halley refinement; the upper tail uses the complement to keep digits
    tail = 0.5 * erfc(np.where(upper, x, -x) / _SQRT2)
    e = np.where(upper, (1.0 - p) - tail, tail - p)
    u = e * _SQRT2PI * np.exp(0.5 * x * x)
    x = x - u / (1.0 + 0.5 * x * u)
    return x if x.ndim else float(x)
