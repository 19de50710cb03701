"""Rademacher averages, the resolvent-family operator on them, and the
R-bound blow-up experiments.

A finite Rademacher sum sum_k r_k x_k is stored as a stack of term
vectors.  Its L_2 norm is the root mean square of |sum_k eps_k x_k| over
sign patterns: enumerated exactly for up to 14 terms, estimated by Monte
Carlo beyond that, and read off a single plain sum when the term supports
are pairwise disjoint (flipping signs of disjointly supported vectors
never changes the norm of the sum).  Mirrored sign patterns give the same
norm, so the sampler pins the first sign and each draw accounts for its
mirror image.

The blow-up experiments drive the family {q R(q, A) : q < 0} with input
sums supported on the reserved even coordinates (one per block, so the
input norm is an exact ell_p norm), concentrate the profile on one target
block with the Holder-extremal weights, and track the coupled-coordinate
output mass block by block.  Those block values have closed forms, which
is what makes truncations of 10^4 blocks affordable; materialized small
truncations cross-check them in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .blockspace import BlockLayout, mixed_norm
from .errors import ParameterError, StructuralError
from .multiplier import TwistedMultiplier
from .sequences import (
    MultiplierSeq,
    holder_conjugate,
    ratio_family,
    seq_from_ratios,
    twisted_lacunary,
)
from .twistbasis import EVEN_TWIST, TwistPermutation, first_even_in_shifted_block

__all__ = [
    "RadSum",
    "SampledNorm",
    "rad_norm",
    "Log2Negatives",
    "NegatedSeqEntries",
    "associated_operator",
    "pair_resolvent_coeffs",
    "RBoundReport",
    "rbound_lower",
    "evaluate_rbound_witness",
    "BlowupSeries",
    "blowup_series",
    "blowup_witness",
]

EXACT_TERM_LIMIT = 14


@dataclass(frozen=True)
class RadSum:
    """Finite Rademacher sum: row k of ``terms`` multiplies the k-th sign."""

    terms: np.ndarray
    layout: BlockLayout
    p: float

    def __post_init__(self):
        t = np.atleast_2d(np.asarray(self.terms, dtype=np.complex128))
        if t.shape[1] != self.layout.dim:
            raise StructuralError("term length does not match the layout")
        object.__setattr__(self, "terms", t)

    @classmethod
    def from_vectors(cls, vectors, p) -> "RadSum":
        vecs = list(vectors)
        if not vecs:
            raise ParameterError("a Rademacher sum needs at least one term")
        layout = vecs[0].layout
        return cls(np.stack([v.coeffs for v in vecs]), layout, p)

    @property
    def n_terms(self) -> int:
        return int(self.terms.shape[0])

    def supports_disjoint(self) -> bool:
        return bool(((np.abs(self.terms) > 0.0).sum(axis=0) <= 1).all())


@dataclass(frozen=True)
class SampledNorm:
    value: float
    stderr: float
    samples: int


def _sign_matrix(k):
    rows = np.arange(2 ** k, dtype=np.uint64)
    return (((rows[:, None] >> np.arange(k, dtype=np.uint64)) & 1) * 2.0 - 1.0)


def rad_norm(s: RadSum, mode: str = "exact", seed: int = 0, samples: int = 100_000):
    """L_2([0,1]; X) norm of the Rademacher sum.

    exact     sqrt(mean over all sign patterns of |sum eps_k x_k|^2)
    disjoint  |sum x_k| for pairwise disjoint supports
    sampled   Monte Carlo estimate, returned as SampledNorm(value, stderr)
    """
    if mode == "exact":
        if s.n_terms > EXACT_TERM_LIMIT:
            raise ParameterError(
                f"exact mode enumerates 2^k patterns; {s.n_terms} terms exceed "
                f"the limit {EXACT_TERM_LIMIT}"
            )
        signs = _sign_matrix(s.n_terms)
        norms = mixed_norm(signs.astype(np.complex128) @ s.terms, s.p, s.layout)
        return float(np.sqrt(np.mean(norms ** 2)))
    if mode == "disjoint":
        if not s.supports_disjoint():
            raise StructuralError("terms overlap; disjoint mode needs disjoint supports")
        return float(mixed_norm(s.terms.sum(axis=0), s.p, s.layout))
    if mode == "sampled":
        rng = np.random.default_rng(seed)
        signs = rng.choice([-1.0, 1.0], size=(samples, s.n_terms))
        signs[:, 0] = 1.0
        norms = mixed_norm(signs.astype(np.complex128) @ s.terms, s.p, s.layout)
        sq = norms ** 2
        mean = float(np.mean(sq))
        se_mean = float(np.std(sq, ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
        value = math.sqrt(mean)
        stderr = se_mean / (2.0 * value) if value > 0.0 else se_mean
        return SampledNorm(value=value, stderr=stderr, samples=samples)
    raise ParameterError("mode must be 'exact', 'disjoint' or 'sampled'")


# -- the q R(q, A) family ----------------------------------------------------


@dataclass(frozen=True)
class Log2Negatives:
    """Negative reals q_k = -2^(log2_magnitudes[k]), exponent form."""

    log2_magnitudes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "log2_magnitudes",
                           np.asarray(self.log2_magnitudes, dtype=np.float64))

    def __len__(self):
        return int(self.log2_magnitudes.size)

    def log2_abs(self, k):
        return float(self.log2_magnitudes[k])


@dataclass(frozen=True)
class NegatedSeqEntries:
    """q_k = -gamma_{indices[k]}, taken from the sequence itself."""

    seq: MultiplierSeq
    indices: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        if np.any(idx < 1) or np.any(idx > self.seq.length):
            raise ParameterError("negated entries outside the sequence range")
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return int(self.indices.size)

    def log2_abs(self, k):
        return float(self.seq.log2[self.indices[k] - 1])


def _as_log2_negatives(qs, n_terms):
    if isinstance(qs, (Log2Negatives, NegatedSeqEntries)):
        if len(qs) != n_terms:
            raise ParameterError("need one q per term")
        return qs
    arr = np.asarray(qs, dtype=np.float64)
    if arr.size != n_terms:
        raise ParameterError("need one q per term")
    if np.any(arr >= 0.0):
        raise ParameterError("the resolvent family takes negative parameters")
    return Log2Negatives(np.log2(-arr))


def scaled_resolvent_symbols(op: TwistedMultiplier, log2_q: float):
    """Diagonal and coupling entries of q R(q, A) for q = -2^log2_q.

    Written in ratio form 1 / (1 + gamma/|q|), so arbitrarily large
    exponents on either side stay finite.
    """
    st = op.structure
    with np.errstate(over="ignore"):
        r = np.exp2(op.seq.log2[: st.needed] - log2_q)
    g = 1.0 / (1.0 + r)
    diag = g[st.diag_src - 1]
    off = g[st.off_hi - 1] - g[st.off_lo - 1]
    return diag, off


def associated_operator(op: TwistedMultiplier, qs, s: RadSum) -> RadSum:
    """Map sum r_k x_k to sum r_k q_k R(q_k, A) x_k, term by term."""
    if s.layout.dim != op.layout.dim:
        raise ParameterError("sum layout does not match the operator")
    qlog = _as_log2_negatives(qs, s.n_terms)
    out = np.empty_like(s.terms)
    for k in range(s.n_terms):
        diag, off = scaled_resolvent_symbols(op, qlog.log2_abs(k))
        out[k] = op._apply_structured(s.terms[k], diag, off)
    return RadSum(out, s.layout, s.p)


def pair_resolvent_coeffs(seq: MultiplierSeq, log2_q, even_indices):
    """Coefficients produced by q R(q, A) on a reserved even coordinate.

    For a term supported at the coordinate coupled to the even position m,
    the output keeps the coordinate with weight q/(q - gamma_m) and leaks
    onto the odd neighbour with weight q [(q - gamma_m)^{-1} -
    (q - gamma_{m-1})^{-1}]; both are returned (kept, leaked).
    """
    m = np.asarray(even_indices, dtype=np.int64)
    if np.any(m % 2):
        raise ParameterError("pair coefficients are indexed by even positions")
    lq = np.asarray(log2_q, dtype=np.float64)
    with np.errstate(over="ignore"):
        r_hi = np.exp2(seq.log2_at(m) - lq)
        r_lo = np.exp2(seq.log2_at(m - 1) - lq)
    kept = 1.0 / (1.0 + r_hi)
    leaked = kept - 1.0 / (1.0 + r_lo)
    return kept, leaked


# -- R-bound lower estimation -------------------------------------------------


@dataclass(frozen=True)
class RBoundReport:
    lower_bound: float
    op_indices: tuple
    witness: RadSum = field(repr=False)
    method: str
    p: float
    seed: int = 0
    angle_context: float | None = None


def _family_ratio(ops, idx, s: RadSum, seed):
    mapped = np.stack([np.asarray(ops[i](s.terms[k]), dtype=np.complex128)
                       for k, i in enumerate(idx)])
    out = RadSum(mapped, s.layout, s.p)
    if s.n_terms <= 12:
        denom = rad_norm(s, "exact")
        numer = rad_norm(out, "exact")
    elif s.supports_disjoint() and out.supports_disjoint():
        denom = rad_norm(s, "disjoint")
        numer = rad_norm(out, "disjoint")
    else:
        denom = rad_norm(s, "sampled", seed=seed, samples=4096).value
        numer = rad_norm(out, "sampled", seed=seed, samples=4096).value
    return (numer / denom if denom > 0.0 else 0.0), denom


def rbound_lower(ops, layout: BlockLayout, p, trials: int = 20, seed: int = 0,
                 max_terms: int = 8, candidates=None) -> RBoundReport:
    """Certified lower bound for the R-bound of a finite operator family.

    Random subsets with random term vectors, improved by coordinate
    perturbations, plus any caller-provided candidate sums (each paired
    with explicit operator indices).  The reported witness re-evaluates to
    the bound.
    """
    if not ops:
        raise ParameterError("the operator family is empty")
    rng = np.random.default_rng(seed)
    best = None

    def consider(idx, s, tag):
        nonlocal best
        ratio, denom = _family_ratio(ops, idx, s, seed)
        if denom == 0.0:
            return 0.0
        if best is None or ratio > best[0]:
            best = (ratio, tuple(idx), s, tag)
        return ratio

    if candidates:
        for idx, s in candidates:
            consider(list(idx), s, "candidate")

    for trial in range(trials):
        k = int(rng.integers(1, min(max_terms, 12) + 1))
        idx = list(rng.integers(0, len(ops), size=k))
        terms = rng.standard_normal((k, layout.dim)) + 1j * rng.standard_normal((k, layout.dim))
        s = RadSum(terms, layout, p)
        base = consider(idx, s, "sampled")
        # a few coordinate bumps on the best term stack found in this trial
        for _ in range(4):
            t2 = s.terms.copy()
            kk = int(rng.integers(0, k))
            jj = int(rng.integers(0, layout.dim))
            t2[kk, jj] *= rng.choice([-1.0, 0.5, 2.0])
            s2 = RadSum(t2, layout, p)
            if consider(idx, s2, "ascent") > base:
                s = s2
    ratio, idx, s, tag = best
    return RBoundReport(lower_bound=float(ratio), op_indices=idx, witness=s,
                        method=tag, p=p, seed=seed)


def evaluate_rbound_witness(ops, report: RBoundReport) -> float:
    ratio, _ = _family_ratio(ops, list(report.op_indices), report.witness,
                             seed=report.seed)
    return float(ratio)


# -- blow-up experiments -------------------------------------------------------

CONSTRUCTIONS = ("lacunary", "power", "powerlog")


def _eligible_targets(k):
    """Odd coordinates 4m+1 (m >= 1) inside triangular block k."""
    lo = (k - 1) * k // 2 + 1
    hi = k * (k + 1) // 2
    first = lo + ((1 - lo) % 4)
    if first < 5:
        first += ((5 - first + 3) // 4) * 4
    if first > hi:
        return np.zeros(0, dtype=np.int64)
    return np.arange(first, hi + 1, 4, dtype=np.int64)


def _block_leak_qnorm(construction, ratios, k, q):
    """ell_q norm of the leaked coefficients on the targets of block k."""
    targets = _eligible_targets(k)
    if targets.size == 0:
        return 0.0, 0
    if construction == "lacunary":
        # q_m = -gamma_{4m+2} leaks exactly 1/6 on every pair
        return (targets.size ** (1.0 / q)) / 6.0, int(targets.size)
    cvals = ratios.value_at(targets + 1)
    return float(np.power(np.power(np.abs(cvals), q).sum(), 1.0 / q)), int(targets.size)


@dataclass(frozen=True)
class BlowupSeries:
    construction: str
    p: float
    alpha: float | None
    ks: np.ndarray
    lower: np.ndarray          # running max of the leaked block values
    slope: float               # log-log fit over the reported points
    first_block: int = 7


def blowup_series(construction: str, p, alpha=None, block_counts=(100, 1000, 10000),
                  bound: float = 0.125) -> BlowupSeries:
    """Leaked-mass lower bounds L_k over nested block truncations.

    Divergence of L_k is the finite-truncation reading of the failure of
    uniform R-boundedness; bounded L_k with vanishing increments is the
    reading of the positive case.  Blocks below 7 are skipped: there the
    reserved even coordinate of a pair can land inside the target block.
    """
    if construction not in CONSTRUCTIONS:
        raise ParameterError(f"construction must be one of {CONSTRUCTIONS}")
    p = float(p)
    if p <= 2.0:
        raise ParameterError("the blow-up experiments live at p > 2")
    ks = np.asarray(sorted(set(int(k) for k in block_counts)), dtype=np.int64)
    if np.any(ks < 7):
        raise ParameterError("block counts start at 7")
    q = holder_conjugate(p)
    kmax = int(ks.max())
    ratios = None
    if construction in ("power", "powerlog"):
        if alpha is None:
            raise ParameterError("power families need alpha")
        ratios = ratio_family(construction, alpha, kmax + 1, bound=bound)
    per_block = np.zeros(kmax + 1)
    for k in range(7, kmax + 1):
        per_block[k], _ = _block_leak_qnorm(construction, ratios, k, q)
    running = np.maximum.accumulate(per_block)
    lower = running[ks]
    logs = np.log(lower[lower > 0.0])
    logk = np.log(ks[lower > 0.0].astype(float))
    slope = float(np.polyfit(logk, logs, 1)[0]) if logs.size >= 2 else float("nan")
    return BlowupSeries(construction=construction, p=p, alpha=alpha, ks=ks,
                        lower=lower, slope=slope)


def blowup_witness(construction: str, k: int, p, alpha=None, bound: float = 0.125):
    """Materialize the extremal witness for target block k.

    Returns (rsum, qs, op, expected) where expected is the closed-form
    norm of the mapped sum (the leaked block value combined with the kept
    halves).  Small k only; the layout must hold the reserved coordinates.
    """
    if construction not in CONSTRUCTIONS:
        raise ParameterError(f"construction must be one of {CONSTRUCTIONS}")
    p = float(p)
    if p <= 2.0:
        raise ParameterError("the blow-up experiments live at p > 2")
    if k < 7:
        raise ParameterError("target blocks start at 7")
    q = holder_conjugate(p)
    targets = _eligible_targets(k)
    if targets.size == 0:
        raise ParameterError(f"block {k} has no eligible coordinates")
    ms = (targets - 1) // 4
    reserved = np.array([first_even_in_shifted_block(int(m)) for m in ms])
    dim_needed = max(int(reserved.max()), k * (k + 1) // 2)
    layout = BlockLayout.triangular_covering(dim_needed)
    perm = TwistPermutation.covering(2 * layout.dim + 8)

    if construction == "lacunary":
        seq = twisted_lacunary(max(int(4 * ms.max() + 2), 2 * layout.dim + 8))
        leak = np.full(targets.size, 1.0 / 6.0)
        profile = np.full(targets.size, targets.size ** (-1.0 / p))
    else:
        ratios = ratio_family(construction, alpha, k + 2, bound=bound)
        cvals = np.asarray(ratios.value_at(targets + 1), dtype=np.float64)
        seq_ratios = ratio_family(construction, alpha,
                                  max(k + 2, _blocks_covering(2 * layout.dim + 8)))
        seq = seq_from_ratios(seq_ratios, length=max(int(4 * ms.max() + 2),
                                                     2 * layout.dim + 8))
        leak = cvals
        profile = np.power(cvals, q / p)
        profile /= np.power(np.power(profile, p).sum(), 1.0 / p)
    op = TwistedMultiplier(seq=seq, perm=perm, variant=EVEN_TWIST, layout=layout)
    terms = np.zeros((targets.size, layout.dim), dtype=np.complex128)
    terms[np.arange(targets.size), reserved - 1] = profile
    rsum = RadSum(terms, layout, p)
    qs = NegatedSeqEntries(seq, 4 * ms + 2)
    leak_norm = float(np.power(np.power(np.abs(profile * leak), 2).sum(), 0.5))
    expected = (leak_norm ** p + (0.5 ** p) * np.power(np.abs(profile), p).sum()) ** (1.0 / p)
    return rsum, qs, op, expected


def _blocks_covering(dim):
    n = int(math.ceil((math.sqrt(8.0 * dim + 1.0) - 1.0) / 2.0))
    while n * (n + 1) // 2 < dim:
        n += 1
    return n
