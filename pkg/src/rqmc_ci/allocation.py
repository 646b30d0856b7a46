"""Splitting a budget of N evaluations into R replicates of n RQMC points.

Under the working model ``var(Y_i) = sigma0^2 * n**-theta`` the Bennett
half width with ``R = N/n`` is

    H(n) = sigma0 n^((1-theta)/2) N^(-1/2) sqrt(2 log(2/alpha)) + log(2/alpha) n / (3N)

and everything here is built on that expression.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

from .intervals import bennett_half_width


@dataclass(frozen=True)
class VarianceModel:
    sigma0_sq: float
    theta: float

    def __post_init__(self):
        if self.sigma0_sq < 0:
            raise ValueError("sigma0^2 must be non-negative")
        if self.theta < 1:
            raise ValueError("theta must be at least 1")

    def variance(self, n: float) -> float:
        return self.sigma0_sq * n ** (-self.theta)


@dataclass(frozen=True)
class AllocationResult:
    N: int
    alpha: float
    n_continuous: float | None
    n: int
    R: float
    half_width: float
    effective_budget: float
    candidates: tuple[int, ...] = ()

    @property
    def width(self) -> float:
        return 2.0 * self.half_width


def effective_budget(N: float, alpha: float) -> float:
    """N / log(2/alpha): the only way N and alpha enter the oracle width."""
    return N / math.log(2.0 / alpha)


def bennett_half_width_of_n(n: float, N: float, model: VarianceModel, alpha: float) -> float:
    if n <= 0:
        raise ValueError("n must be positive")
    if n > N:
        raise ValueError(f"n={n} exceeds the budget N={N}")
    L = math.log(2.0 / alpha)
    return (math.sqrt(model.sigma0_sq) * n ** ((1.0 - model.theta) / 2.0) * math.sqrt(2.0 * L / N)
            + L * n / (3.0 * N))


def n_star(N: float, model: VarianceModel, alpha: float) -> float:
    """Unclamped stationary point of H(n); requires theta > 1."""
    if model.theta <= 1:
        raise ValueError("the stationary point exists only for theta > 1")
    L = math.log(2.0 / alpha)
    t = model.theta
    return (9.0 * (t - 1.0) ** 2 * model.sigma0_sq * N / (2.0 * L)) ** (1.0 / (t + 1.0))


def optimal_n_continuous(N: float, model: VarianceModel, alpha: float) -> float:
    """Minimizer of H over n in [1, N]."""
    if model.theta == 1 or model.sigma0_sq == 0:
        return 1.0
    return min(float(N), max(1.0, n_star(N, model, alpha)))


def powers_of_two(N: int) -> list[int]:
    return [1 << k for k in range(int(N).bit_length()) if (1 << k) <= N]


def optimal_n_discrete(
    N: int,
    variance_fn: Callable[[int], float],
    alpha: float,
    candidates: Iterable[int] | None = None,
) -> AllocationResult:
    """Minimize the Bennett half width over candidate n (powers of 2 by default).

    Candidates are scanned in increasing order and the scan stops once the
    term ``log(2/alpha) n / (3N)``, a lower bound on H, reaches the best value
    so far; ties go to the smaller n.
    """
    cands = sorted(set(powers_of_two(N) if candidates is None else candidates))
    cands = [c for c in cands if 1 <= c <= N]
    if not cands:
        raise ValueError("no admissible candidate n")
    L = math.log(2.0 / alpha)
    best_n, best_h = None, math.inf
    for n in cands:
        if L * n / (3.0 * N) >= best_h:
            break
        h = bennett_half_width(variance_fn(n), N / n, alpha)
        if h < best_h:
            best_n, best_h = n, h
    return AllocationResult(N=N, alpha=alpha, n_continuous=None, n=best_n, R=N / best_n,
                            half_width=best_h, effective_budget=effective_budget(N, alpha),
                            candidates=tuple(cands))


def allocate(N: int, model: VarianceModel, alpha: float, pow2: bool = True) -> AllocationResult:
    """Continuous optimum plus the best admissible integer n.

    With ``pow2`` the search is over powers of 2; otherwise over the floor and
    ceiling of the continuous optimum (H is convex for theta > 1).
    """
    ns = optimal_n_continuous(N, model, alpha)
    if pow2:
        cands = powers_of_two(N)
    else:
        cands = sorted({max(1, math.floor(ns)), min(int(N), math.ceil(ns))})
    res = optimal_n_discrete(N, model.variance, alpha, cands)
    return AllocationResult(N=N, alpha=alpha, n_continuous=ns, n=res.n, R=N / res.n,
                            half_width=bennett_half_width_of_n(res.n, N, model, alpha),
                            effective_budget=res.effective_budget, candidates=res.candidates)


def guidance_bound(N: float, theta: float, alpha: float) -> float:
    """Upper bound on the oracle's n using sigma0^2 <= 1/4."""
    if theta < 1:
        raise ValueError("theta must be at least 1")
    if theta == 1:
        return 1.0
    L = math.log(2.0 / alpha)
    return (9.0 * (theta - 1.0) ** 2 * N / (8.0 * L)) ** (1.0 / (theta + 1.0))


def width_ratio(N: float, model: VarianceModel, alpha: float) -> float:
    """H(n_star) / H(1) in closed form."""
    t = model.theta
    if t <= 1:
        raise ValueError("width ratio needs theta > 1")
    if model.sigma0_sq <= 0:
        raise ValueError("width ratio needs sigma0 > 0")
    Na = effective_budget(N, alpha)
    s2 = model.sigma0_sq
    return ((t + 1.0) / (math.sqrt(2.0 * s2 * Na) + 1.0 / 3.0)
            * (0.5 * (3.0 * (t - 1.0)) ** (1.0 - t) * Na * s2) ** (1.0 / (t + 1.0)))
