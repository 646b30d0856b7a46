"""Ridge-function integrands and the width experiments built on them."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from itertools import product
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import integrate

from .allocation import optimal_n_discrete
from .intervals import BetParams, bennett_half_width, compute_interval, hbci
from .normal import phi, phi_inv
from .oracle_variance import INTEGRANDS_1D, KNOWN_VARIANCE, TRUE_MEANS_1D
from .rqmc import replicate_estimates

RIDGE_VARIANTS = ("jump", "kink", "smooth", "finance")


def g_jump(v):
    return (np.asarray(v) >= 1.0).astype(np.float64)


def g_kink(v):
    return (np.clip(v, -2.0, 1.0) + 2.0) / 3.0


def g_smooth(v):
    return phi(np.asarray(v, dtype=np.float64) + 1.0)


def g_finance(v):
    return np.minimum(1.0, np.sqrt(np.maximum(np.asarray(v, dtype=np.float64) + 2.0, 0.0)) / 2.0)


_G = {"jump": g_jump, "kink": g_kink, "smooth": g_smooth, "finance": g_finance}


@dataclass(frozen=True)
class RidgeFunction:
    """f(x) = g(sum_j Phi^{-1}(x_j) / sqrt(d)) for one of the four profiles."""

    variant: str
    d: int

    def __post_init__(self):
        if self.variant not in _G:
            raise ValueError(f"unknown ridge variant {self.variant!r}")
        if self.d < 1:
            raise ValueError("dimension must be positive")

    def __call__(self, x) -> np.ndarray:
        return eval_ridge(self, x)


def eval_ridge(rf: RidgeFunction, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[-1] != rf.d:
        raise ValueError(f"expected points in dimension {rf.d}, got {x.shape[-1]}")
    v = phi_inv(x).sum(axis=-1) / math.sqrt(rf.d)
    return _G[rf.variant](v)


def _normal_expectation(g: Callable, breaks: Sequence[float]) -> float:
    dens = lambda z: float(g(z)) * math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    edges = [-math.inf, *breaks, math.inf]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(dens, lo, hi, epsabs=1e-14, epsrel=1e-13, limit=200)
        total += val
    return total


def true_mean(rf: RidgeFunction | str) -> float:
    """E[g(Z)] for Z ~ N(0, 1); it does not depend on the dimension."""
    variant = rf.variant if isinstance(rf, RidgeFunction) else rf
    if variant in TRUE_MEANS_1D:
        return TRUE_MEANS_1D[variant]
    if variant == "jump":
        return 1.0 - phi(1.0)
    if variant == "smooth":
        return phi(1.0 / math.sqrt(2.0))
    if variant == "kink":
        return _normal_expectation(g_kink, (-2.0, 1.0))
    if variant == "finance":
        return _normal_expectation(g_finance, (-2.0, 2.0))
    raise ValueError(f"unknown integrand {variant!r}")


def make_integrand(name: str, d: int) -> Callable[[np.ndarray], np.ndarray]:
    if name in _G:
        return RidgeFunction(name, d)
    if name in INTEGRANDS_1D:
        if d != 1:
            raise ValueError(f"{name} is one-dimensional")
        return lambda x: INTEGRANDS_1D[name](x).astype(np.float64)
    raise ValueError(f"unknown integrand {name!r}")


# --------------------------------------------------------------------------
# Experiment grid
# --------------------------------------------------------------------------

def _pow2(v: int) -> bool:
    return v >= 1 and v & (v - 1) == 0


@dataclass(frozen=True)
class ExperimentConfig:
    integrands: tuple[str, ...] = RIDGE_VARIANTS
    dims: tuple[int, ...] = (1, 2, 4, 16)
    budgets: tuple[int, ...] = tuple(2**K for K in (8, 10, 12, 14, 16))
    sizes: tuple[int, ...] = tuple(2**k for k in range(7))
    methods: tuple[str, ...] = ("hbci", "ebci", "clt")
    reps: int = 20
    seed: int = 20250101
    alpha: float = 0.05
    c: float = 0.5
    theta_hedge: float = 0.5

    def __post_init__(self):
        for name in ("integrands", "dims", "budgets", "sizes", "methods"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if not all(_pow2(int(N)) for N in self.budgets):
            raise ValueError("every budget N must be a power of 2")
        if not all(_pow2(int(n)) for n in self.sizes):
            raise ValueError("every size n must be a power of 2")
        if max(self.sizes) > min(self.budgets):
            raise ValueError("every n must divide every N")
        if self.reps < 1:
            raise ValueError("reps must be positive")
        BetParams(self.alpha, self.c, self.theta_hedge)

    @property
    def params(self) -> BetParams:
        return BetParams(self.alpha, self.c, self.theta_hedge)

    def cells(self):
        return list(product(self.integrands, self.dims, self.budgets, self.sizes))


@dataclass
class ExperimentRecord:
    integrand: str
    d: int
    N: int
    n: int
    R: int
    method: str
    rep: int
    width: float
    covered: bool | None
    seed: int
    width_preclip: float = float("nan")
    error: str = ""


CSV_FIELDS = ("integrand", "d", "N", "n", "R", "method", "rep", "width", "covered", "seed")


def cell_seed(base: int, integrand: str, d: int, N: int, n: int, rep: int) -> int:
    """Stable 63-bit seed for one replication of one cell."""
    key = f"{base}|{integrand}|{d}|{N}|{n}|{rep}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little") >> 1


def _run_cell(cfg: ExperimentConfig, cell) -> list[ExperimentRecord]:
    integrand, d, N, n = cell
    R = N // n
    mu = true_mean(integrand)
    out = []
    for rep in range(cfg.reps):
        seed = cell_seed(cfg.seed, integrand, d, N, n, rep)
        try:
            sample = replicate_estimates(make_integrand(integrand, d), d, n, R, seed, integrand)
        except Exception as exc:  # noqa: BLE001 - recorded, not dropped
            for method in cfg.methods:
                out.append(ExperimentRecord(integrand, d, N, n, R, method, rep, float("nan"), None,
                                            seed, error=f"{type(exc).__name__}: {exc}"))
            continue
        for method in cfg.methods:
            try:
                iv = compute_interval(method, sample, cfg.params)
                out.append(ExperimentRecord(integrand, d, N, n, R, method, rep, iv.width,
                                            iv.contains(mu), seed, 2.0 * iv.half_width_preclip))
            except Exception as exc:  # noqa: BLE001
                out.append(ExperimentRecord(integrand, d, N, n, R, method, rep, float("nan"), None,
                                            seed, error=f"{type(exc).__name__}: {exc}"))
    return out


def _sort_key(rec: ExperimentRecord):
    return (rec.integrand, rec.d, rec.N, rec.n, rec.rep, rec.method)


def run_experiment(cfg: ExperimentConfig, jobs: int = 1, progress: Callable[[int, int], None] | None = None
                   ) -> list[ExperimentRecord]:
    """Every cell and replication of ``cfg``; output order is independent of ``jobs``."""
    cells = cfg.cells()
    records: list[ExperimentRecord] = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for i, recs in enumerate(pool.map(_run_cell, [cfg] * len(cells), cells)):
                records.extend(recs)
                if progress:
                    progress(i + 1, len(cells))
    else:
        for i, cell in enumerate(cells):
            records.extend(_run_cell(cfg, cell))
            if progress:
                progress(i + 1, len(cells))
    records.sort(key=_sort_key)
    return records


# --------------------------------------------------------------------------
# Persistence
# --------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)) or v is None:
        return "" if v is None else str(bool(v)).lower()
    if isinstance(v, float):
        return format(v, ".9g")
    return str(v)


def write_records_csv(records: Iterable[ExperimentRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_FIELDS)
        for r in records:
            w.writerow([_fmt(getattr(r, k)) for k in CSV_FIELDS])


def write_records_jsonl(records: Iterable[ExperimentRecord], path) -> None:
    with open(path, "w") as fh:
        for r in records:
            row = {k: (float(format(v, ".9g")) if isinstance(v, float) and math.isfinite(v) else v)
                   for k, v in asdict(r).items()}
            for k, v in row.items():
                if isinstance(v, float) and not math.isfinite(v):
                    row[k] = None
            fh.write(json.dumps(row) + "\n")


def read_records_csv(path) -> list[ExperimentRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            cov = {"true": True, "false": False}.get(row["covered"].lower())
            out.append(ExperimentRecord(row["integrand"], int(row["d"]), int(row["N"]), int(row["n"]),
                                        int(row["R"]), row["method"], int(row["rep"]),
                                        float(row["width"]) if row["width"] else float("nan"),
                                        cov, int(row["seed"])))
    return out


# --------------------------------------------------------------------------
# Summaries
# --------------------------------------------------------------------------

@dataclass
class SummaryRow:
    integrand: str
    N: int
    n: int
    method: str
    mean_width: float
    count: int
    is_min: bool = False


def summarize(records: Sequence[ExperimentRecord]) -> list[SummaryRow]:
    """Mean width per (integrand, N, n, method), pooling dimensions and reps.

    Within each (integrand, N, method) the row with the smallest mean width is
    flagged.
    """
    if not records:
        raise ValueError("no records to summarize")
    acc: dict[tuple, list[float]] = {}
    for r in records:
        if r.error or not math.isfinite(r.width):
            continue
        acc.setdefault((r.integrand, r.N, r.n, r.method), []).append(r.width)
    rows = [SummaryRow(k[0], k[1], k[2], k[3], float(np.mean(v)), len(v)) for k, v in sorted(acc.items())]
    best: dict[tuple, SummaryRow] = {}
    for row in rows:
        key = (row.integrand, row.N, row.method)
        if key not in best or row.mean_width < best[key].mean_width:
            best[key] = row
    for row in best.values():
        row.is_min = True
    return rows


def argmin_n(rows: Sequence[SummaryRow], method: str = "hbci") -> dict[tuple[str, int], int]:
    """{(integrand, N): n with the smallest mean width} for one method."""
    return {(r.integrand, r.N): r.n for r in rows if r.is_min and r.method == method}


def write_summary_csv(rows: Iterable[SummaryRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["integrand", "N", "n", "method", "mean_width", "count", "is_min"])
        for r in rows:
            w.writerow([r.integrand, r.N, r.n, r.method, _fmt(r.mean_width), r.count, _fmt(r.is_min)])


def win_rate(records: Sequence[ExperimentRecord], narrower: str, wider: str,
             where: Callable[[ExperimentRecord], bool] | None = None) -> float:
    """Fraction of replications in which ``narrower`` is strictly narrower than ``wider``."""
    by_key: dict[tuple, dict[str, float]] = {}
    for r in records:
        if r.error or (where is not None and not where(r)):
            continue
        by_key.setdefault((r.integrand, r.d, r.N, r.n, r.rep), {})[r.method] = r.width
    pairs = [(v[narrower], v[wider]) for v in by_key.values() if narrower in v and wider in v]
    if not pairs:
        raise ValueError("no comparable records")
    return sum(a < b for a, b in pairs) / len(pairs)


def additive_r2(records: Sequence[ExperimentRecord], factors: Sequence[str], method: str = "hbci") -> float:
    """R^2 of a main-effects model for log width with categorical ``factors``."""
    rows = [r for r in records if r.method == method and not r.error and r.width > 0]
    y = np.log([r.width for r in rows])
    cols = [np.ones(len(rows))]
    for f in factors:
        levels = sorted({getattr(r, f) for r in rows})
        for lev in levels[1:]:
            cols.append(np.array([getattr(r, f) == lev for r in rows], dtype=np.float64))
    X = np.column_stack(cols)
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    return 1.0 - float(resid @ resid) / float(((y - y.mean()) ** 2).sum())


# --------------------------------------------------------------------------
# HBCI versus the variance-knowing Bennett interval
# --------------------------------------------------------------------------

@dataclass
class RatioRecord:
    integrand: str
    N: int
    n: int
    R: int
    reps: int
    mean_hbci_width: float
    bennett_width: float

    @property
    def ratio(self) -> float:
        return self.mean_hbci_width / self.bennett_width


def width_ratio_study(integrand: str, budgets: Sequence[int], sizes: Sequence[int], reps: int = 20,
                      alpha: float = 0.05, seed: int = 20250101, c: float = 0.5,
                      theta_hedge: float = 0.5) -> list[RatioRecord]:
    """Mean HBCI width over ``reps`` divided by the oracle Bennett full width."""
    if integrand not in KNOWN_VARIANCE:
        raise ValueError(f"no variance oracle for {integrand!r}")
    var = KNOWN_VARIANCE[integrand]
    f = make_integrand(integrand, 1)
    params = BetParams(alpha, c, theta_hedge)
    out = []
    for N in budgets:
        for n in sizes:
            if n > N:
                continue
            R = N // n
            widths = [hbci(replicate_estimates(f, 1, n, R, cell_seed(seed, integrand, 1, N, n, rep)),
                           params).width
                      for rep in range(reps)]
            out.append(RatioRecord(integrand, N, n, R, reps, float(np.mean(widths)),
                                   2.0 * bennett_half_width(var(n), R, alpha)))
    return out


def bennett_opt_n(integrand: str, N: int, alpha: float = 0.05) -> int:
    """Power-of-2 n minimizing the oracle Bennett width."""
    return optimal_n_discrete(N, KNOWN_VARIANCE[integrand], alpha).n
