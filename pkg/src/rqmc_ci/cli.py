"""Command line front end.

Exit codes: 0 success, 1 I/O failure, 2 invalid input or configuration.
Data goes to standard output (or ``--out``); progress goes to standard error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict
from fractions import Fraction

from . import allocation, benchmarks, oracle_variance
from .intervals import METHODS, BetParams, compute_interval

EXIT_OK, EXIT_IO, EXIT_INVALID = 0, 1, 2


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INVALID):
        super().__init__(message)
        self.code = code


def _num(v):
    if isinstance(v, float):
        return float(format(v, ".9g")) if math.isfinite(v) else None
    return v


def _emit(rows: list[dict], fmt: str, out) -> None:
    """Write rows as JSON lines or CSV to ``out`` (a path, or None for stdout)."""
    buf = io.StringIO()
    if fmt == "json":
        for row in rows:
            buf.write(json.dumps({k: _num(v) for k, v in row.items()}) + "\n")
    else:
        if rows:
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(rows[0].keys())
            for row in rows:
                w.writerow(["" if v is None else (format(v, ".9g") if isinstance(v, float) else v)
                            for v in row.values()])
    text = buf.getvalue()
    if out is None:
        sys.stdout.write(text)
    else:
        try:
            with open(out, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise CliError(f"cannot write {out}: {exc}", EXIT_IO) from exc


def _params(args) -> BetParams:
    try:
        return BetParams(alpha=args.alpha, c=args.c, theta_hedge=args.theta_hedge)
    except ValueError as exc:
        raise CliError(str(exc)) from exc


# --------------------------------------------------------------------------
# ci
# --------------------------------------------------------------------------

def read_values(path: str) -> list[float]:
    """One value per line; blank lines and a leading header line are skipped."""
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from exc
    values = []
    for lineno, raw in enumerate(lines, start=1):
        text = raw.split(",")[0].strip()
        if not text:
            continue
        try:
            v = float(text)
        except ValueError:
            if not values and lineno == 1:
                continue
            raise CliError(f"line {lineno}: not a number: {raw!r}") from None
        if not 0.0 <= v <= 1.0:
            raise CliError(f"line {lineno}: value {v} outside [0, 1]")
        values.append(v)
    if not values:
        raise CliError(f"{path}: no values")
    return values


def cmd_ci(args) -> int:
    values = read_values(args.input)
    params = _params(args)
    methods = _split(args.method) if args.method else list(METHODS)
    rows = []
    for m in methods:
        if m not in METHODS:
            raise CliError(f"unknown method {m!r}")
        try:
            rows.append(compute_interval(m, values, params).to_record())
        except ValueError as exc:
            raise CliError(f"{m}: {exc}") from exc
    _emit(rows, args.format, args.out)
    return EXIT_OK


# --------------------------------------------------------------------------
# allocate
# --------------------------------------------------------------------------

def cmd_allocate(args) -> int:
    try:
        model = allocation.VarianceModel(args.sigma0_sq, args.theta)
        res = allocation.allocate(args.N, model, args.alpha, pow2=args.pow2)
        bound = allocation.guidance_bound(args.N, args.theta, args.alpha)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    row = {
        "N": args.N, "alpha": args.alpha, "theta": args.theta, "sigma0_sq": args.sigma0_sq,
        "n_continuous": res.n_continuous, "n": res.n, "R": res.R,
        "half_width": res.half_width, "width": res.width,
        "guidance_bound": bound, "effective_budget": res.effective_budget,
    }
    _emit([row], args.format, args.out)
    return EXIT_OK


# --------------------------------------------------------------------------
# oracle-table
# --------------------------------------------------------------------------

ORACLE_RATES = {"indicator_third": 2.0, "smooth_1d": 3.0}


def oracle_table(integrand: str, kmin: int = 0, kmax: int = 28, alpha: float = 0.05,
                 all_rows: bool = False) -> list[dict]:
    """Bennett-optimal power-of-2 n for N = 2^kmin..2^kmax.

    Only rows where the optimal n changes are kept unless ``all_rows``.
    """
    var = oracle_variance.KNOWN_VARIANCE[integrand]
    theta = ORACLE_RATES[integrand]
    expo = theta / (theta + 1.0)
    rows, prev = [], None
    for K in range(kmin, kmax + 1):
        N = 1 << K
        res = allocation.optimal_n_discrete(N, var, alpha)
        if all_rows or res.n != prev:
            rows.append({"log2N": K, "N": N, "n": res.n, "W": res.width, "scaled_W": N**expo * res.width})
        prev = res.n
    return rows


def cmd_oracle_table(args) -> int:
    if not 0 <= args.kmin <= args.kmax <= 28:
        raise CliError("K range must satisfy 0 <= kmin <= kmax <= 28")
    _emit(oracle_table(args.integrand, args.kmin, args.kmax, args.alpha, args.all_rows),
          args.format, args.out)
    return EXIT_OK


# --------------------------------------------------------------------------
# experiment
# --------------------------------------------------------------------------

CONFIG_KEYS = {
    "integrands": str, "dims": int, "budgets": int, "sizes": int, "methods": str,
    "reps": int, "seed": int, "alpha": float, "c": float, "theta_hedge": float,
}
_LIST_KEYS = {"integrands", "dims", "budgets", "sizes", "methods"}


def _split(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _int(text: str) -> int:
    text = text.strip()
    if text.startswith("2^"):
        return 1 << int(text[2:])
    return int(text)


def _real(text: str) -> float:
    # accepts fractions such as 2/9
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def parse_config(text: str) -> dict:
    """Flat ``key = value`` lines; lists are comma separated; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise CliError(f"unknown config key {key!r}")
        conv = _int if CONFIG_KEYS[key] is int else CONFIG_KEYS[key]
        try:
            out[key] = tuple(conv(v) for v in _split(value)) if key in _LIST_KEYS else conv(value)
        except ValueError:
            raise CliError(f"config key {key!r}: bad value {value!r}") from None
    return out


def _progress(done: int, total: int) -> None:
    print(f"\r{done}/{total} cells", end="\n" if done == total else "", file=sys.stderr, flush=True)


def cmd_experiment(args) -> int:
    settings = {}
    if args.config:
        try:
            with open(args.config) as fh:
                settings = parse_config(fh.read())
        except OSError as exc:
            raise CliError(f"cannot read {args.config}: {exc}", EXIT_IO) from exc
    for key in ("reps", "seed", "alpha", "c", "theta_hedge"):
        v = getattr(args, key, None)
        if v is not None:
            settings[key] = v
    try:
        cfg = benchmarks.ExperimentConfig(**settings)
        for name in cfg.integrands:
            for d in cfg.dims:
                benchmarks.make_integrand(name, d)
    except ValueError as exc:
        raise CliError(str(exc)) from exc

    try:
        os.makedirs(args.out, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create {args.out}: {exc}", EXIT_IO) from exc
    records = benchmarks.run_experiment(cfg, jobs=args.jobs, progress=_progress)
    try:
        if args.format == "json":
            benchmarks.write_records_jsonl(records, os.path.join(args.out, "records.jsonl"))
        else:
            benchmarks.write_records_csv(records, os.path.join(args.out, "records.csv"))
        benchmarks.write_summary_csv(benchmarks.summarize(records), os.path.join(args.out, "summary.csv"))
    except OSError as exc:
        raise CliError(f"cannot write results: {exc}", EXIT_IO) from exc
    print(f"{len(records)} records written to {args.out}", file=sys.stderr)
    return EXIT_OK


# --------------------------------------------------------------------------
# ratio-study
# --------------------------------------------------------------------------

def cmd_ratio_study(args) -> int:
    try:
        budgets = [_int(v) for v in _split(args.budgets)]
        sizes = [_int(v) for v in _split(args.sizes)]
    except ValueError as exc:
        raise CliError(f"bad list: {exc}") from exc
    _params(args)
    recs = benchmarks.width_ratio_study(args.integrand, budgets, sizes, reps=args.reps,
                                        alpha=args.alpha, seed=args.seed, c=args.c,
                                        theta_hedge=args.theta_hedge)
    rows = [dict(asdict(r), ratio=r.ratio) for r in recs]
    _emit(rows, args.format, args.out)
    return EXIT_OK


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rqmc-ci", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt="json"):
        sp.add_argument("--alpha", type=float, default=0.05)
        sp.add_argument("--format", choices=("csv", "json"), default=fmt)
        sp.add_argument("--out", default=None)

    def betting(sp):
        sp.add_argument("--c", type=float, default=0.5, help="bet truncation")
        sp.add_argument("--theta-hedge", dest="theta_hedge", type=float, default=0.5)

    sp = sub.add_parser("ci", help="confidence intervals for values in a file")
    sp.add_argument("input")
    sp.add_argument("--method", help=f"comma separated subset of {','.join(METHODS)}")
    common(sp)
    betting(sp)
    sp.set_defaults(func=cmd_ci)

    sp = sub.add_parser("allocate", help="oracle choice of n for a variance model")
    sp.add_argument("--N", type=_int, required=True)
    sp.add_argument("--theta", type=float, required=True)
    sp.add_argument("--sigma0-sq", dest="sigma0_sq", type=_real, required=True)
    sp.add_argument("--pow2", action="store_true", help="restrict n to powers of 2")
    common(sp)
    sp.set_defaults(func=cmd_allocate)

    sp = sub.add_parser("oracle-table", help="Bennett-optimal n for the known-variance integrands")
    sp.add_argument("--integrand", choices=sorted(ORACLE_RATES), default="indicator_third")
    sp.add_argument("--kmin", type=int, default=0)
    sp.add_argument("--kmax", type=int, default=28)
    sp.add_argument("--all-rows", action="store_true")
    common(sp, fmt="csv")
    sp.set_defaults(func=cmd_oracle_table)

    sp = sub.add_parser("experiment", help="ridge-function width experiment")
    sp.add_argument("config", nargs="?")
    sp.add_argument("--reps", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--c", type=float)
    sp.add_argument("--theta-hedge", dest="theta_hedge", type=float)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--out", default="results")
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("ratio-study", help="mean HBCI width over the oracle Bennett width")
    sp.add_argument("--integrand", choices=sorted(ORACLE_RATES), default="indicator_third")
    sp.add_argument("--budgets", default="2^8,2^10,2^12,2^14,2^16")
    sp.add_argument("--sizes", default="1,2,4,8,16,32,64")
    sp.add_argument("--reps", type=int, default=20)
    sp.add_argument("--seed", type=int, default=20250101)
    common(sp, fmt="csv")
    betting(sp)
    sp.set_defaults(func=cmd_ratio_study)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "alpha", None) is not None and not 0.0 < args.alpha < 1.0:
        print("error: alpha must lie in (0, 1)", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
