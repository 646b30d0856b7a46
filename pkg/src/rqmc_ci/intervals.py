"""Confidence intervals for the mean of [0, 1]-valued replicate averages.

All intervals are intersected with [0, 1] before they are returned; the
unclipped half width is kept on the :class:`Interval` for diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rqmc import ReplicateSample
from .student_t import t_quantile

SNAP_TOL = 1e-12


@dataclass
class Interval:
    lo: float
    hi: float
    method: str
    alpha: float
    R: int | None = None
    n: int | None = None
    center: float = float("nan")
    half_width_preclip: float = float("nan")
    diagnostics: dict = field(default_factory=dict, repr=False)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, m: float) -> bool:
        return bool(self.lo <= m <= self.hi)

    def to_record(self) -> dict:
        return {
            "method": self.method,
            "alpha": self.alpha,
            "lo": self.lo,
            "hi": self.hi,
            "half_width_preclip": self.half_width_preclip,
            "n": self.n,
            "R": self.R,
        }


@dataclass(frozen=True)
class BetParams:
    """Tuning for the betting intervals.

    ``c`` truncates bet sizes, ``theta_hedge`` weights the upward bettor in
    the hedged capital and ``R`` is the target sample size (``None`` means
    use every value supplied).
    """

    alpha: float = 0.05
    c: float = 0.5
    theta_hedge: float = 0.5
    R: int | None = None

    def __post_init__(self):
        _check_alpha(self.alpha)
        if not 0.0 < self.c < 1.0:
            raise ValueError(f"truncation c must lie in (0, 1), got {self.c}")
        if not 0.0 <= self.theta_hedge <= 1.0:
            raise ValueError(f"theta_hedge must lie in [0, 1], got {self.theta_hedge}")
        if self.R is not None and self.R < 1:
            raise ValueError("target R must be at least 1")


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


def _values(Y) -> tuple[np.ndarray, int | None]:
    if isinstance(Y, ReplicateSample):
        return Y.values, Y.n
    y = np.asarray(Y, dtype=np.float64).ravel()
    if y.size == 0:
        raise ValueError("empty sample")
    if np.any(~((y >= 0.0) & (y <= 1.0))):
        raise ValueError("sample values must lie in [0, 1]")
    return y, None


def _clipped(center, hw, method, alpha, R, n, **diag) -> Interval:
    lo = float(min(1.0, max(0.0, center - hw)))
    hi = float(max(0.0, min(1.0, center + hw)))
    return Interval(lo, hi, method, alpha, R=R, n=n, center=float(center),
                    half_width_preclip=float(hw), diagnostics=diag)


# --------------------------------------------------------------------------
# Closed-form intervals
# --------------------------------------------------------------------------

def hoeffding_ci(Y, alpha: float = 0.05) -> Interval:
    """Mean +/- sqrt(log(2/alpha) / (2R))."""
    _check_alpha(alpha)
    y, n = _values(Y)
    hw = math.sqrt(math.log(2.0 / alpha) / (2.0 * y.size))
    return _clipped(y.mean(), hw, "hoeffding", alpha, y.size, n)


def bennett_half_width(sigma2: float, R: float, alpha: float) -> float:
    """Bennett half width for R observations of known variance ``sigma2``."""
    if sigma2 < 0:
        raise ValueError("variance must be non-negative")
    L = math.log(2.0 / alpha)
    return math.sqrt(2.0 * sigma2 * L / R) + L / (3.0 * R)


def bennett_ci(ybar: float, sigma2: float, R: int, alpha: float = 0.05, n: int | None = None) -> Interval:
    """Oracle interval that is told the true variance of each replicate."""
    _check_alpha(alpha)
    if R < 1:
        raise ValueError("R must be positive")
    hw = bennett_half_width(sigma2, R, alpha)
    return _clipped(ybar, hw, "bennett", alpha, R, n)


def maurer_pontil_ci(Y, alpha: float = 0.05) -> Interval:
    """Empirical Bernstein interval with the unbiased sample variance."""
    _check_alpha(alpha)
    y, n = _values(Y)
    R = y.size
    if R < 2:
        raise ValueError("Maurer-Pontil interval needs R >= 2")
    s2 = y.var(ddof=1)
    L = math.log(4.0 / alpha)
    hw = math.sqrt(2.0 * s2 * L / R) + 7.0 * L / (3.0 * (R - 1))
    return _clipped(y.mean(), hw, "maurer_pontil", alpha, R, n, s2=s2)


def clt_ci(Y, alpha: float = 0.05) -> Interval:
    """Student-t interval on R - 1 degrees of freedom (asymptotic only)."""
    _check_alpha(alpha)
    y, n = _values(Y)
    R = y.size
    if R < 2:
        raise ValueError("CLT interval needs R >= 2")
    S = y.std(ddof=1)
    q = t_quantile(1.0 - alpha / 2.0, R - 1)
    return _clipped(y.mean(), S * q / math.sqrt(R), "clt", alpha, R, n, t_quantile=q)


# --------------------------------------------------------------------------
# Betting intervals
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RunningMoments:
    """Running mean and variance shrunk towards 1/2 and 1/4.

    ``mean[t]`` and ``var[t]`` use the first ``t`` observations, so index 0
    holds the priors 1/2 and 1/4.
    """

    mean: np.ndarray
    var: np.ndarray

    @classmethod
    def from_values(cls, y) -> "RunningMoments":
        y = np.asarray(y, dtype=np.float64)
        t = np.arange(1, y.size + 1)
        mean = np.concatenate(([0.5], (0.5 + np.cumsum(y)) / (t + 1)))
        dev2 = (y - mean[1:]) ** 2
        var = np.concatenate(([0.25], (0.25 + np.cumsum(dev2)) / (t + 1)))
        return cls(mean, var)

    @property
    def t(self) -> int:
        return self.mean.size - 1


def psi_e(lam):
    """(-log(1 - lam) - lam) / 4, with a series branch for tiny lam."""
    lam = np.asarray(lam, dtype=np.float64)
    small = lam < 1e-4
    ls = np.where(small, lam, 0.0)
    series = ls * ls * (0.5 + ls * (1.0 / 3.0 + ls * (0.25 + ls / 5.0)))
    with np.errstate(invalid="ignore"):
        direct = -np.log1p(-np.where(small, 0.0, lam)) - np.where(small, 0.0, lam)
    return np.where(small, series, direct) / 4.0


def _target(y: np.ndarray, R: int | None) -> np.ndarray:
    if R is None:
        return y
    if y.size < R:
        raise ValueError(f"target R={R} but only {y.size} values supplied")
    return y[:R]


def bet_sizes(y: np.ndarray, alpha: float, R: int) -> np.ndarray:
    """Untruncated bets sqrt(2 log(2/alpha) / (R var_{i-1})) for i = 1..R."""
    var_prev = RunningMoments.from_values(y).var[:-1]
    return np.sqrt(2.0 * math.log(2.0 / alpha) / (R * var_prev))


def prpl_eb_ci(Y, params: BetParams = BetParams()) -> Interval:
    """Predictable plug-in empirical Bernstein interval for a fixed target R.

    Returns the running intersection over t = 1..R of the per-step intervals,
    clipped to [0, 1]. Only the first ``params.R`` values are read.
    """
    y, n = _values(Y)
    y = _target(y, params.R)
    R = y.size
    L = math.log(2.0 / params.alpha)
    mom = RunningMoments.from_values(y)
    lam = np.minimum(np.sqrt(2.0 * L / (R * mom.var[:-1])), params.c)
    nu = 4.0 * (y - mom.mean[:-1]) ** 2
    slam = np.cumsum(lam)
    centers = np.cumsum(lam * y) / slam
    hws = (L + np.cumsum(nu * psi_e(lam))) / slam
    lo = float(np.max(centers - hws))
    hi = float(np.min(centers + hws))
    diag = {"lambda": lam, "nu": nu, "mean": mom.mean[1:], "var": mom.var[1:],
            "empty_intersection": False}
    if lo > hi:
        if lo - hi >= SNAP_TOL:
            # the running intersection can be empty on adversarial data;
            # report a flagged point at the crossing instead of failing
            diag["empty_intersection"] = True
        lo = hi = 0.5 * (lo + hi)
    center = 0.5 * (lo + hi)
    out = _clipped(center, 0.5 * (hi - lo), "ebci", params.alpha, R, n, **diag)
    out.center = float(centers[-1])
    out.half_width_preclip = float(hws[-1])
    return out


@dataclass(frozen=True)
class CapitalTrace:
    """Log capitals of the upward, downward and hedged bettors for t = 1..R."""

    m: float
    log_plus: np.ndarray
    log_minus: np.ndarray
    theta_hedge: float

    @property
    def log_hedged(self) -> np.ndarray:
        return np.maximum(_log_or_neg_inf(self.theta_hedge) + self.log_plus,
                          _log_or_neg_inf(1.0 - self.theta_hedge) + self.log_minus)

    @property
    def plus(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_plus)

    @property
    def minus(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_minus)

    @property
    def hedged(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_hedged)

    @property
    def log_running_max(self) -> np.ndarray:
        return np.maximum.accumulate(self.log_hedged)

    @property
    def running_max(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_running_max)


def _log_or_neg_inf(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def _truncations(m: np.ndarray, c: float) -> tuple[np.ndarray, np.ndarray]:
    # c/0 is +inf: at the endpoints only the untruncated bet binds
    with np.errstate(divide="ignore", over="ignore"):
        return c / m, c / (1.0 - m)


def hedged_capital(Y, m: float, params: BetParams = BetParams()) -> CapitalTrace:
    """Capital paths of the two bettors against mean ``m`` and their hedge."""
    if not 0.0 <= m <= 1.0:
        raise ValueError("candidate mean must lie in [0, 1]")
    y, _ = _values(Y)
    y = _target(y, params.R)
    lam = bet_sizes(y, params.alpha, y.size)
    cap_p, cap_m = _truncations(np.float64(m), params.c)
    d = y - m
    log_plus = np.cumsum(np.log1p(np.minimum(lam, cap_p) * d))
    log_minus = np.cumsum(np.log1p(-np.minimum(lam, cap_m) * d))
    return CapitalTrace(float(m), log_plus, log_minus, params.theta_hedge)


def max_log_capital(y, lam, m, c: float, theta_hedge: float, log_stop: float | None = None,
                    budget: int = 1 << 21) -> np.ndarray:
    """max_t log K_t^+-(m) for each candidate in ``m``.

    With ``log_stop`` set, a candidate is dropped as soon as its hedged
    capital exceeds it; the value returned for such a candidate is only known
    to be above ``log_stop``. Work proceeds in time blocks that grow as
    candidates are eliminated, with at most ``budget`` terms per block.
    """
    y = np.asarray(y, dtype=np.float64)
    m = np.atleast_1d(np.asarray(m, dtype=np.float64))
    R = y.size
    a_plus = _log_or_neg_inf(theta_hedge)
    a_minus = _log_or_neg_inf(1.0 - theta_hedge)
    cap_p, cap_m = _truncations(m, c)

    s_plus = np.zeros(m.size)
    s_minus = np.zeros(m.size)
    mx_plus = np.full(m.size, -np.inf)
    mx_minus = np.full(m.size, -np.inf)
    live = np.arange(m.size)
    t0 = 0
    step = 32
    while t0 < R and live.size:
        t1 = min(R, t0 + step)
        lam_b = lam[None, t0:t1]
        free = np.minimum(cap_p[live], cap_m[live]) >= lam[t0:t1].max()
        for idx, bound in ((live[free], False), (live[~free], True)):
            if not idx.size:
                continue
            d = y[None, t0:t1] - m[idx, None]
            if bound:
                cp = np.log1p(np.minimum(lam_b, cap_p[idx, None]) * d)
                cm = np.log1p(-np.minimum(lam_b, cap_m[idx, None]) * d)
            else:
                # no truncation binds for these candidates in this block
                d *= lam_b
                cp = np.log1p(d)
                cm = np.log1p(np.negative(d, out=d))
            np.cumsum(cp, axis=1, out=cp)
            cp += s_plus[idx, None]
            np.cumsum(cm, axis=1, out=cm)
            cm += s_minus[idx, None]
            s_plus[idx] = cp[:, -1]
            s_minus[idx] = cm[:, -1]
            mx_plus[idx] = np.maximum(mx_plus[idx], cp.max(axis=1))
            mx_minus[idx] = np.maximum(mx_minus[idx], cm.max(axis=1))
        t0 = t1
        if log_stop is not None:
            h = np.maximum(a_plus + mx_plus[live], a_minus + mx_minus[live])
            live = live[h <= log_stop]
        step = max(32, min(4 * step, budget // max(1, live.size)))
    return np.maximum(a_plus + mx_plus, a_minus + mx_minus)


def hbci(Y, params: BetParams = BetParams(), grid_size: int = 4097, tol: float = 1e-6) -> Interval:
    """Hedged betting interval: hull of {m : max_t K_t^+-(m) <= 1/alpha}.

    The accepted set is located on an equispaced grid over [0, 1] (plus the
    sample mean) and each end of its hull is refined by bisection to ``tol``.
    """
    y, n = _values(Y)
    y = _target(y, params.R)
    R = y.size
    lam = bet_sizes(y, params.alpha, R)
    log_thr = math.log(1.0 / params.alpha)
    ybar = float(y.mean())

    grid = np.union1d(np.linspace(0.0, 1.0, grid_size), [ybar])

    def accepted(ms):
        return max_log_capital(y, lam, ms, params.c, params.theta_hedge, log_stop=log_thr) <= log_thr

    ok = accepted(grid)
    diag = {"grid_size": grid.size, "non_contiguous": False, "empty": False, "bisections": 0}
    if not ok.any():
        full = max_log_capital(y, lam, grid, params.c, params.theta_hedge)
        m0 = float(grid[np.argmin(full)])
        diag["empty"] = True
        return Interval(m0, m0, "hbci", params.alpha, R=R, n=n, center=m0,
                        half_width_preclip=0.0, diagnostics=diag)

    idx = np.flatnonzero(ok)
    i_lo, i_hi = int(idx[0]), int(idx[-1])
    diag["non_contiguous"] = bool(idx.size != i_hi - i_lo + 1)

    def refine(inside: float, outside: float) -> float:
        while abs(inside - outside) > tol:
            mid = 0.5 * (inside + outside)
            diag["bisections"] += 1
            if accepted(np.array([mid]))[0]:
                inside = mid
            else:
                outside = mid
        return inside

    lo = 0.0 if i_lo == 0 else refine(float(grid[i_lo]), float(grid[i_lo - 1]))
    hi = 1.0 if i_hi == grid.size - 1 else refine(float(grid[i_hi]), float(grid[i_hi + 1]))
    return Interval(lo, hi, "hbci", params.alpha, R=R, n=n, center=0.5 * (lo + hi),
                    half_width_preclip=0.5 * (hi - lo), diagnostics=diag)


METHODS = ("hoeffding", "maurer_pontil", "clt", "ebci", "hbci")


def compute_interval(method: str, Y, params: BetParams = BetParams()) -> Interval:
    """Dispatch by method name; the betting methods use ``params`` in full."""
    if method == "hoeffding":
        return hoeffding_ci(Y, params.alpha)
    if method == "maurer_pontil":
        return maurer_pontil_ci(Y, params.alpha)
    if method == "clt":
        return clt_ci(Y, params.alpha)
    if method == "ebci":
        return prpl_eb_ci(Y, params)
    if method == "hbci":
        return hbci(Y, params)
    raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
