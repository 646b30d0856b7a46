"""Scrambled Sobol' points and replicated RQMC averages.

Points are held as 32-bit unsigned integers whose bits are the base-2 digits
of each coordinate (most significant bit first). A coordinate value is
``bits / 2**32``.

Randomization is Matousek's linear matrix scramble followed by a digital
shift: each coordinate's digit vector ``x`` becomes ``L_j x + e_j`` over GF(2)
with ``L_j`` random lower-triangular with unit diagonal. Because the scramble
is linear it is applied to the generating-matrix columns once per replicate,
after which points are formed by XOR as in the unscrambled construction.

Random bits come from SplitMix64 run in counter mode, keyed by
``(seed, replicate)``. Replicate ``i`` is therefore reproducible on its own,
independently of how many replicates are generated alongside it or in what
order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._joe_kuo import JOE_KUO, MAX_DIM

BITS = 32
_SCALE = 2.0**-BITS
_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_WORDS_PER_DIM = BITS // 2 + 1  # 64-bit words: two matrix rows each, then the shift
RANGE_TOL = 1e-12


class RangeError(ValueError):
    """An integrand value fell outside [0, 1] by more than the tolerance."""


def _is_pow2(n: int) -> bool:
    return isinstance(n, (int, np.integer)) and n >= 1 and (n & (n - 1)) == 0


def _log2(n: int) -> int:
    if not _is_pow2(n):
        raise ValueError(f"n must be a power of 2, got {n!r}")
    return int(n).bit_length() - 1


# --------------------------------------------------------------------------
# Counter-based random bits
# --------------------------------------------------------------------------

def _mix64(z: np.ndarray) -> np.ndarray:
    """SplitMix64 output function (a bijection on uint64)."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def stream_words(seed: int, replicates, count: int, index=None) -> np.ndarray:
    """Return ``count`` random 64-bit words for each replicate stream.

    Word ``k`` of stream ``(seed, i)`` is ``mix(key(seed, i) + (k + 1) * gamma)``;
    it depends on nothing but those three integers. ``index`` picks a subset
    of word positions instead of ``0..count-1``.
    """
    reps = np.atleast_1d(np.asarray(replicates, dtype=np.uint64))
    s = np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)
    k = np.arange(count, dtype=np.uint64) if index is None else np.asarray(index, dtype=np.uint64)
    with np.errstate(over="ignore"):
        key = _mix64(_mix64(s) ^ _mix64(reps * _GOLDEN + np.uint64(0x632BE59BD9B4E019)))
        ctr = (k + np.uint64(1)) * _GOLDEN
        return _mix64(key[:, None] + ctr[None, :])


# --------------------------------------------------------------------------
# Generating matrices
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SobolGenerator:
    """Generating matrices of the first ``d`` Sobol' dimensions.

    ``columns[j, k]`` is column ``k`` of ``C_j`` packed into a 32-bit integer,
    row 0 in the most significant bit.
    """

    d: int
    columns: np.ndarray = field(repr=False)

    @classmethod
    def create(cls, d: int) -> "SobolGenerator":
        if not isinstance(d, (int, np.integer)) or d < 1:
            raise ValueError(f"dimension must be a positive integer, got {d!r}")
        if d > MAX_DIM:
            raise ValueError(f"dimension {d} exceeds the embedded table ({MAX_DIM})")
        cols = np.zeros((d, BITS), dtype=np.uint32)
        for j in range(d):
            m = _direction_ints(j)
            for k in range(BITS):
                cols[j, k] = m[k] << (BITS - 1 - k)
        cols.setflags(write=False)
        return cls(int(d), cols)

    def matrix(self, j: int) -> np.ndarray:
        """``C_j`` as a 32x32 0/1 array."""
        c = self.columns[j].astype(np.uint64)
        rows = np.arange(BITS, dtype=np.uint64)
        return ((c[None, :] >> (np.uint64(BITS - 1) - rows[:, None])) & np.uint64(1)).astype(np.uint8)


def _direction_ints(j: int) -> list[int]:
    """m_1..m_32 for zero-based dimension ``j``."""
    if j == 0:
        return [1] * BITS
    s, a, init = JOE_KUO[j - 1]
    m = list(init)
    for k in range(s, BITS):
        new = m[k - s] ^ (m[k - s] << s)
        for i in range(1, s):
            if (a >> (s - 1 - i)) & 1:
                new ^= m[k - i] << i
        m.append(new)
    return m[:BITS]


# --------------------------------------------------------------------------
# Scrambles
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ScrambleState:
    """Linear matrix scramble plus digital shift for each dimension.

    ``rows[j, r]`` packs row ``r`` of ``L_j`` (bit ``31 - c`` holds column
    ``c``); ``shift[j]`` packs ``e_j``.
    """

    rows: np.ndarray = field(repr=False)
    shift: np.ndarray = field(repr=False)
    seed: int | None = None
    replicate: int | None = None

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.uint32)
        diag = np.uint32(1) << (np.uint32(BITS - 1) - np.arange(BITS, dtype=np.uint32))
        if rows.ndim != 2 or rows.shape[1] != BITS:
            raise ValueError("rows must have shape (d, 32)")
        if np.any((rows & diag) == 0):
            raise ValueError("scramble matrices must have a unit diagonal")
        # strictly lower triangular plus diagonal: no bits below the diagonal position
        below = diag - np.uint32(1)
        if np.any(rows & below):
            raise ValueError("scramble matrices must be lower triangular")

    @property
    def d(self) -> int:
        return self.rows.shape[0]

    @classmethod
    def identity(cls, d: int, shift=None) -> "ScrambleState":
        diag = np.uint32(1) << (np.uint32(BITS - 1) - np.arange(BITS, dtype=np.uint32))
        rows = np.tile(diag, (d, 1))
        sh = np.zeros(d, dtype=np.uint32) if shift is None else np.asarray(shift, dtype=np.uint32)
        return cls(rows, sh)

    @classmethod
    def random(cls, d: int, seed: int, replicate: int = 0) -> "ScrambleState":
        rows, shift = _random_scrambles(d, seed, np.array([replicate]))
        return cls(rows[0], shift[0], seed=int(seed), replicate=int(replicate))

    def matrix(self, j: int) -> np.ndarray:
        """``L_j`` as a 32x32 0/1 array."""
        r = self.rows[j].astype(np.uint64)
        cols = np.arange(BITS, dtype=np.uint64)
        return ((r[:, None] >> (np.uint64(BITS - 1) - cols[None, :])) & np.uint64(1)).astype(np.uint8)


def _lower_columns(d: int, seed: int, replicates: np.ndarray, k: int = BITS) -> np.ndarray:
    """First ``k`` columns of each random ``L_j``, packed, shape ``(R, d, k)``.

    Column ``c`` uses half ``c % 2`` of word ``c // 2`` of its dimension's
    block, so the leading columns never depend on ``k``.
    """
    nw = (k + 1) // 2
    idx = (np.arange(d)[:, None] * _WORDS_PER_DIM + np.arange(nw)[None, :]).ravel()
    words = stream_words(seed, replicates, idx.size, index=idx).reshape(len(replicates), d, nw)
    draws = np.empty((len(replicates), d, 2 * nw), dtype=np.uint32)
    draws[..., 0::2] = words >> np.uint64(32)
    draws[..., 1::2] = words & np.uint64(0xFFFFFFFF)
    diag = np.uint32(1) << (np.uint32(BITS - 1) - np.arange(k, dtype=np.uint32))
    # column c keeps only rows r > c, i.e. bits below its diagonal position
    return (draws[..., :k] & (diag - np.uint32(1))) | diag


def _random_shifts(d: int, seed: int, replicates: np.ndarray) -> np.ndarray:
    """Digital shifts ``(R, d)``: the high half of the last word of each block."""
    idx = np.arange(d) * _WORDS_PER_DIM + _WORDS_PER_DIM - 1
    return (stream_words(seed, replicates, d, index=idx) >> np.uint64(32)).astype(np.uint32)


def _columns_to_rows(cols: np.ndarray) -> np.ndarray:
    """Transpose packed 32x32 bit matrices stored by column into rows."""
    sh = np.uint32(BITS - 1) - np.arange(BITS, dtype=np.uint32)
    bits = (cols[..., None, :] >> sh[:, None]) & np.uint32(1)  # [..., r, c]
    return np.bitwise_or.reduce(bits << sh[None, :], axis=-1)


def _random_scrambles(d: int, seed: int, replicates: np.ndarray):
    """Row masks ``(R, d, 32)`` and shifts ``(R, d)`` for each replicate."""
    rows = _columns_to_rows(_lower_columns(d, seed, replicates))
    return rows, _random_shifts(d, seed, replicates)


def _scramble_leading(lcols: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """``L @ c`` for packed vectors ``c`` whose bits sit in the top ``k`` rows.

    ``lcols`` (..., k) holds the first ``k`` columns of ``L``; ``cols`` has
    shape (..., m). The product is the XOR of the columns of ``L`` selected
    by the bits of ``c``.
    """
    k = lcols.shape[-1]
    if k < BITS:
        low = (np.uint32(1) << np.uint32(BITS - k)) - np.uint32(1)
        if np.any(cols & low):
            raise ValueError("vector has bits beyond the supplied columns")
    out = np.zeros(np.broadcast_shapes(lcols.shape[:-1] + (1,), cols.shape), dtype=np.uint32)
    for c in range(k):
        bit = (cols >> np.uint32(BITS - 1 - c)) & np.uint32(1)
        out ^= lcols[..., c:c + 1] * bit
    return out


def _apply_rows(rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Matrix-vector products over GF(2) for packed rows and packed vectors.

    ``rows`` has shape (..., 32); ``cols`` has shape (..., m). Returns the
    packed products with shape (..., m).
    """
    prod = rows[..., :, None] & cols[..., None, :]
    parity = (np.bitwise_count(prod) & 1).astype(np.uint32)
    weights = np.uint32(1) << (np.uint32(BITS - 1) - np.arange(BITS, dtype=np.uint32))
    return np.bitwise_or.reduce(parity * weights[:, None], axis=-2)


def _net_from_columns(cols: np.ndarray, m: int) -> np.ndarray:
    """XOR-combine packed columns into 2**m points in natural order.

    ``cols`` has shape (..., m); the result has shape (..., 2**m).
    """
    out = np.zeros(cols.shape[:-1] + (1 << m,), dtype=np.uint32)
    for k in range(m):
        half = 1 << k
        out[..., half:2 * half] = out[..., :half] ^ cols[..., k:k + 1]
    return out


# --------------------------------------------------------------------------
# Point sets
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PointSet:
    """``n`` points in [0,1)^d stored as packed 32-bit digits."""

    bits: np.ndarray = field(repr=False)  # (n, d) uint32
    scrambled: bool = False
    seed: int | None = None
    replicate: int | None = None

    @property
    def n(self) -> int:
        return self.bits.shape[0]

    @property
    def d(self) -> int:
        return self.bits.shape[1]

    @property
    def values(self) -> np.ndarray:
        return self.bits.astype(np.float64) * _SCALE

    def to_csv(self, path) -> None:
        """Dump one row per point, full double precision."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{j + 1}" for j in range(self.d)])
            for row in self.values:
                w.writerow([repr(float(v)) for v in row])


def generate_sobol(d: int, n: int) -> PointSet:
    """First ``n`` unscrambled Sobol' points in natural index order."""
    m = _log2(n)
    gen = SobolGenerator.create(d)
    pts = _net_from_columns(np.asarray(gen.columns[:, :m]), m)  # (d, n)
    return PointSet(np.ascontiguousarray(pts.T))


def scramble(ps: PointSet, state: ScrambleState) -> PointSet:
    """Apply ``y = L_j x + e_j`` to every coordinate of ``ps``."""
    if ps.scrambled:
        raise ValueError("point set is already scrambled")
    if state.d != ps.d:
        raise ValueError(f"scramble has {state.d} dimensions, point set has {ps.d}")
    y = _apply_rows(np.asarray(state.rows), np.ascontiguousarray(ps.bits.T))  # (d, n)
    y ^= np.asarray(state.shift, dtype=np.uint32)[:, None]
    return PointSet(np.ascontiguousarray(y.T), scrambled=True,
                    seed=state.seed, replicate=state.replicate)


def scrambled_sobol(d: int, n: int, seed: int, replicate: int = 0) -> PointSet:
    """One scrambled net; identical to the matching slice of :func:`scrambled_nets`."""
    bits = scrambled_nets(d, n, seed, [replicate])[0]
    return PointSet(bits, scrambled=True, seed=int(seed), replicate=int(replicate))


def scrambled_nets(d: int, n: int, seed: int, replicates) -> np.ndarray:
    """Packed digits of independently scrambled nets, shape ``(R, n, d)``.

    The scramble is pushed through the generating matrices, so only the
    first ``log2(n)`` columns of each ``C_j`` are ever multiplied.
    """
    m = _log2(n)
    reps = np.atleast_1d(np.asarray(replicates, dtype=np.int64))
    gen = SobolGenerator.create(d)
    if m:
        # the first m columns of C_j live in its top m rows, so only the
        # first m columns of L_j are needed
        lcols = _lower_columns(d, seed, reps, m)
        cols = _scramble_leading(lcols, gen.columns[None, :, :m])
        pts = _net_from_columns(cols, m)  # (R, d, n)
    else:
        # a one-point net is the origin, so only the shift matters
        pts = np.zeros((len(reps), d, 1), dtype=np.uint32)
    pts ^= _random_shifts(d, seed, reps)[:, :, None]
    return np.ascontiguousarray(pts.transpose(0, 2, 1))


# --------------------------------------------------------------------------
# Replicate averages
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ReplicateSample:
    """RQMC averages ``Y_1..Y_R`` of one integrand, each from ``n`` points."""

    values: np.ndarray
    n: int
    d: int
    integrand: str = ""
    seed: int | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size < 1:
            raise ValueError("a replicate sample needs at least one value")
        if np.any(v < 0.0) or np.any(v > 1.0):
            raise ValueError("replicate values must lie in [0, 1]")
        object.__setattr__(self, "values", v)

    @property
    def R(self) -> int:
        return self.values.size

    @property
    def N(self) -> int:
        return self.n * self.R


def check_range(y: np.ndarray, tol: float = RANGE_TOL) -> np.ndarray:
    """Clamp values within ``tol`` of [0, 1]; raise on anything further out."""
    y = np.asarray(y, dtype=np.float64)
    bad = ~((y >= -tol) & (y <= 1.0 + tol))
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise RangeError(f"integrand value {y.flat[i]!r} outside [0, 1]")
    return np.clip(y, 0.0, 1.0)


def replicate_estimates(
    f: Callable[[np.ndarray], np.ndarray],
    d: int,
    n: int,
    R: int,
    seed: int,
    integrand: str = "",
    chunk_points: int = 1 << 18,
) -> ReplicateSample:
    """Average ``f`` over each of ``R`` independently scrambled nets.

    ``f`` takes an ``(m, d)`` array of points and returns ``m`` values in [0, 1].
    Replicates are processed in blocks to bound memory; since each replicate
    has its own random stream the result does not depend on the block size.
    """
    _log2(n)
    if R < 1:
        raise ValueError("R must be at least 1")
    block = max(1, chunk_points // n)
    out = np.empty(R)
    for start in range(0, R, block):
        reps = np.arange(start, min(R, start + block))
        x = scrambled_nets(d, n, seed, reps).astype(np.float64) * _SCALE
        fx = np.asarray(f(x.reshape(-1, d)), dtype=np.float64)
        fx = check_range(fx).reshape(len(reps), n)
        out[start:start + len(reps)] = fx.mean(axis=1)
    return ReplicateSample(np.clip(out, 0.0, 1.0), n=n, d=d, integrand=integrand, seed=seed)
