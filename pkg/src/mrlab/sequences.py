"""Multiplier sequences and the ratio recurrence that generates them.

A ratio sequence (c_m) with values in (0, 1/2) determines a unique strictly
increasing multiplier sequence through

    (gamma_m - gamma_{m-1}) / (2 (gamma_m + gamma_{m-1})) = c_m,  gamma_1 = 1,

equivalently gamma_m = gamma_{m-1} (1 + 2 c_m) / (1 - 2 c_m).  The values
grow geometrically and overflow float64 quickly, so a sequence stores
base-2 logarithms as the primary representation together with the exact
per-step offsets t_m = rho_m - 1 = 4 c_m / (1 - 2 c_m); everything that
only needs ratios works on those.  The twisted lacunary sequence
2^{m+1} (m odd), 2^{m-1} (m even) keeps integer exponents, so adjacent
ratios are exact powers of two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, SequenceOverflowError

__all__ = [
    "RatioSeq",
    "MultiplierSeq",
    "ratio_family",
    "constant_ratios",
    "custom_ratios",
    "seq_from_ratios",
    "twisted_lacunary",
    "custom_seq",
    "resolvent_gap_max",
    "block_qsup_partials",
    "alpha_for_right_endpoint",
    "holder_conjugate",
]

_LOG2_MAX = math.log2(np.finfo(np.float64).max)  # ~1024
_LN2 = math.log(2.0)

POWER = "power"
POWERLOG = "powerlog"
CONSTANT = "constant"
GEOMETRIC = "geometric"
CUSTOM = "custom"
_FAMILIES = (POWER, POWERLOG, CONSTANT, GEOMETRIC, CUSTOM)


def _triangular_block_of(m):
    m = np.asarray(m, dtype=np.int64)
    k = ((np.sqrt(8.0 * m + 1.0) - 1.0) / 2.0).astype(np.int64)
    k = np.where(k * (k + 1) // 2 >= m, k, k + 1)
    k = np.where((k - 1) * k // 2 >= m, k - 1, k)
    return k


@dataclass(frozen=True)
class RatioSeq:
    """A ratio sequence, block-constant for the named families.

    ``bound`` is the open upper constraint: every value lies strictly in
    (0, bound).  Indexing is 1-based; the recurrence consumes values from
    index 2 on.
    """

    family: str
    bound: float
    n_blocks: int
    block_values: np.ndarray | None = field(default=None, repr=False)
    dense_values: np.ndarray | None = field(default=None, repr=False)
    alpha: float | None = None
    scale: float | None = None

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ParameterError(f"unknown ratio family {self.family!r}")
        vals = self.block_values if self.dense_values is None else self.dense_values
        if vals is None or len(vals) == 0:
            raise ParameterError("ratio sequence has no values")
        vals = np.asarray(vals, dtype=np.float64)
        if np.any(vals <= 0.0) or np.any(vals >= self.bound):
            bad = int(np.flatnonzero((vals <= 0.0) | (vals >= self.bound))[0]) + 1
            raise ParameterError(
                f"ratio value at position {bad} is outside (0, {self.bound})"
            )

    @property
    def is_block_constant(self) -> bool:
        return self.dense_values is None

    @property
    def max_index(self) -> int:
        if self.is_block_constant:
            return self.n_blocks * (self.n_blocks + 1) // 2
        return int(self.dense_values.size)

    def block_value(self, k):
        """Value on triangular block k (block-constant families only)."""
        if not self.is_block_constant:
            raise ParameterError("dense ratio sequences are not block-constant")
        k = np.asarray(k, dtype=np.int64)
        if np.any(k < 1) or np.any(k > self.n_blocks):
            raise ParameterError(f"block out of range 1..{self.n_blocks}")
        out = self.block_values[k - 1]
        return out if out.ndim else float(out)

    def value_at(self, m):
        """c_m for 1-based indices m (scalar or array)."""
        m = np.asarray(m, dtype=np.int64)
        if np.any(m < 1) or np.any(m > self.max_index):
            raise ParameterError(f"index out of range 1..{self.max_index}")
        if self.is_block_constant:
            out = self.block_values[_triangular_block_of(m) - 1]
        else:
            out = self.dense_values[m - 1]
        return out if out.ndim else float(out)

    def values_upto(self, n: int) -> np.ndarray:
        return np.asarray(self.value_at(np.arange(1, n + 1)))

    @property
    def decreasing_from(self) -> int:
        """First block index from which the block values never increase."""
        if not self.is_block_constant:
            raise ParameterError("onset is tracked for block-constant families only")
        v = self.block_values
        rising = np.flatnonzero(np.diff(v) > 0.0)
        return 1 if rising.size == 0 else int(rising[-1]) + 2


def _raw_block_values(kind, alpha, ks):
    if kind == POWER:
        return np.power(ks, -alpha)
    if kind == POWERLOG:
        # log k vanishes at k = 1; log(k+1) keeps the value positive and
        # leaves the growth order untouched
        return np.power(ks, -alpha) * np.log(ks + 1.0)
    raise ParameterError(f"family {kind!r} has no power-type raw values")


def _global_raw_max(kind, alpha):
    if kind == POWER:
        return 1.0
    horizon = max(16, int(4.0 * math.exp(1.0 / alpha)))
    ks = np.arange(1, horizon + 1, dtype=np.float64)
    return float(_raw_block_values(kind, alpha, ks).max())


def ratio_family(kind: str, alpha: float, n_blocks: int, bound: float = 0.125) -> RatioSeq:
    """Power or power-log ratio family, scaled into (0, bound).

    The scale puts the global maximum (over all blocks, not just the
    truncated ones) at bound/2, so truncations of different lengths agree
    on shared blocks.
    """
    if not 0.0 < alpha < 0.5:
        raise ParameterError("alpha must lie in (0, 1/2)")
    if kind not in (POWER, POWERLOG):
        raise ParameterError("kind must be 'power' or 'powerlog'")
    if bound not in (0.125, 0.5):
        raise ParameterError("bound must be 1/8 or 1/2")
    ks = np.arange(1, n_blocks + 1, dtype=np.float64)
    raw = _raw_block_values(kind, alpha, ks)
    scale = (bound / 2.0) / _global_raw_max(kind, alpha)
    return RatioSeq(family=kind, bound=bound, n_blocks=n_blocks,
                    block_values=scale * raw, alpha=alpha, scale=scale)


def constant_ratios(value: float, n_blocks: int, bound: float = 0.125) -> RatioSeq:
    return RatioSeq(family=CONSTANT, bound=bound, n_blocks=n_blocks,
                    block_values=np.full(n_blocks, float(value)), scale=float(value))


def geometric_ratios(n_blocks: int, bound: float = 0.125) -> RatioSeq:
    """Super-fast decay 2^{-k} per block; inside every block-q-sup space."""
    scale = bound / 2.0
    vals = scale * np.exp2(-np.arange(1, n_blocks + 1, dtype=np.float64))
    return RatioSeq(family=GEOMETRIC, bound=bound, n_blocks=n_blocks,
                    block_values=vals, scale=scale)


def custom_ratios(values, bound: float = 0.5) -> RatioSeq:
    values = np.asarray(values, dtype=np.float64)
    n_blocks = int(_triangular_block_of(values.size))
    return RatioSeq(family=CUSTOM, bound=bound, n_blocks=n_blocks,
                    dense_values=values)


@dataclass(frozen=True)
class MultiplierSeq:
    """Positive multiplier sequence stored as (log2 values, step offsets)."""

    origin: str
    log2: np.ndarray = field(repr=False)
    step_offsets: np.ndarray | None = field(default=None, repr=False)  # t_m at [m-2]
    ratios_src: RatioSeq | None = None

    @property
    def length(self) -> int:
        return int(self.log2.size)

    @property
    def first_overflow_index(self):
        """1-based index of the first value beyond float64, or None."""
        over = np.flatnonzero(self.log2 >= _LOG2_MAX)
        return int(over[0]) + 1 if over.size else None

    def values_upto(self, n: int, allow_inf: bool = False) -> np.ndarray:
        if n > self.length:
            raise ParameterError(f"sequence has length {self.length}, asked for {n}")
        head = self.log2[:n]
        if not allow_inf:
            over = np.flatnonzero(head >= _LOG2_MAX)
            if over.size:
                raise SequenceOverflowError(int(over[0]) + 1)
        with np.errstate(over="ignore"):
            return np.exp2(head)

    def value_at(self, m: int) -> float:
        return float(self.values_upto(m)[m - 1])

    def log2_at(self, m):
        m = np.asarray(m, dtype=np.int64)
        if np.any(m < 1) or np.any(m > self.length):
            raise ParameterError(f"index out of range 1..{self.length}")
        out = self.log2[m - 1]
        return out if out.ndim else float(out)

    def ln_at(self, m):
        return self.log2_at(m) * _LN2

    def ratio(self, i, j):
        """gamma_i / gamma_j through exponent differences (overflow-safe)."""
        return np.exp2(self.log2_at(i) - self.log2_at(j))

    def ln_pair_gap(self, even_m):
        """ln(gamma_{m} / gamma_{m-1}) for even m, stable for tiny steps."""
        even_m = np.asarray(even_m, dtype=np.int64)
        if np.any(even_m % 2):
            raise ParameterError("pair gaps are indexed by even positions")
        if self.origin == "recurrence":
            return np.log1p(self.step_offsets[even_m - 2])
        return (self.log2_at(even_m) - self.log2_at(even_m - 1)) * _LN2

    def recovered_ratios(self, n: int | None = None) -> np.ndarray:
        """The ratio sequence read back off the stored steps, index 2..n.

        For recurrence sequences this inverts t = 4c/(1-2c) exactly:
        c = t / (2 (2 + t)).  Otherwise it falls back to exponent
        differences, which lose accuracy once log2 values are large.
        """
        n = self.length if n is None else n
        if self.origin == "recurrence":
            t = self.step_offsets[: n - 1]
            return t / (2.0 * (2.0 + t))
        rho = np.exp2(np.diff(self.log2[:n]))
        return 0.5 * (rho - 1.0) / (rho + 1.0)


def seq_from_ratios(ratios, length: int | None = None) -> MultiplierSeq:
    """Solve the ratio recurrence; gamma_1 = 1 and gamma is strictly increasing."""
    if isinstance(ratios, RatioSeq):
        src = ratios
        n = src.max_index if length is None else length
        c = src.values_upto(n)[1:]
    else:
        arr = np.asarray(ratios, dtype=np.float64)
        n = arr.size + 1 if length is None else length
        c = arr[: n - 1]
        src = None
    if np.any(~np.isfinite(c)) or np.any(c <= 0.0) or np.any(c >= 0.5):
        bad = int(np.flatnonzero(~np.isfinite(c) | (c <= 0.0) | (c >= 0.5))[0]) + 2
        raise ParameterError(f"ratio at index {bad} is outside (0, 1/2)")
    t = 4.0 * c / (1.0 - 2.0 * c)
    log2 = np.concatenate(([0.0], np.cumsum(np.log1p(t)) / _LN2))
    return MultiplierSeq(origin="recurrence", log2=log2, step_offsets=t, ratios_src=src)


def twisted_lacunary(n: int) -> MultiplierSeq:
    """2^{m+1} at odd m, 2^{m-1} at even m; adjacent pairs decrease."""
    if n < 2:
        raise ParameterError("need at least two terms")
    m = np.arange(1, n + 1, dtype=np.float64)
    log2 = np.where(np.arange(1, n + 1) % 2 == 1, m + 1.0, m - 1.0)
    return MultiplierSeq(origin="twisted-lacunary", log2=log2)


def custom_seq(values) -> MultiplierSeq:
    values = np.asarray(values, dtype=np.float64)
    if np.any(values <= 0.0) or np.any(~np.isfinite(values)):
        raise ParameterError("custom multiplier values must be positive and finite")
    return MultiplierSeq(origin="custom", log2=np.log2(values))


def resolvent_gap_max(g_prev: float, g_cur: float):
    """Maximize d(t) = t [(t + g_prev)^{-1} - (t + g_cur)^{-1}] over t > 0.

    Returns (t_star, d_star) with t_star = sqrt(g_prev g_cur); the maximum
    exceeds half the normalized gap (g_cur - g_prev) / (g_cur + g_prev).
    """
    if not (0.0 < g_prev < g_cur):
        raise ParameterError("need 0 < g_prev < g_cur")
    t_star = math.sqrt(g_prev) * math.sqrt(g_cur)
    d_star = t_star * (g_cur - g_prev) / ((t_star + g_prev) * (t_star + g_cur))
    return t_star, d_star


def block_qsup_partials(ratios: RatioSeq, q: float, n_blocks: int | None = None) -> np.ndarray:
    """Running sup over k of the block ell_q norms of the ratio sequence."""
    q = float(q)
    if not (2.0 < q < math.inf):
        raise ParameterError("q must be finite and > 2")
    n_blocks = ratios.n_blocks if n_blocks is None else n_blocks
    if ratios.is_block_constant:
        if n_blocks > ratios.n_blocks:
            raise ParameterError("ratio sequence is shorter than requested")
        ks = np.arange(1, n_blocks + 1, dtype=np.float64)
        per_block = np.power(ks, 1.0 / q) * ratios.block_values[:n_blocks]
    else:
        dim = n_blocks * (n_blocks + 1) // 2
        vals = np.abs(ratios.values_upto(dim))
        starts = np.concatenate(([0], np.cumsum(np.arange(1, n_blocks))))
        per_block = np.power(np.add.reduceat(np.power(vals, q), starts), 1.0 / q)
    return np.maximum.accumulate(per_block)


def alpha_for_right_endpoint(p0: float) -> float:
    """Exponent alpha with boundedness threshold exactly at p0 (> 2)."""
    p0 = float(p0)
    if not p0 > 2.0:
        raise ParameterError("the right endpoint must exceed 2")
    return (p0 - 2.0) / (2.0 * p0)


def holder_conjugate(p: float) -> float:
    """q with 1/2 = 1/p + 1/q for p > 2."""
    p = float(p)
    if not p > 2.0:
        raise ParameterError("the splitting 1/2 = 1/p + 1/q needs p > 2")
    return 2.0 * p / (p - 2.0)
