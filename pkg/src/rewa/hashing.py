"""Seeded families of 4-wise independent hash functions [m] -> [n].

Each function is a degree-3 Carter-Wegman polynomial over the Mersenne
prime p = 2^61 - 1, reduced mod n.  A degree-3 polynomial with uniform
coefficients (leading coefficient nonzero) is exactly 4-wise independent
over the field; the final mod-n step adds a bias of at most n/p ~ 2^-40
for any practical n, which is far below the resolution of every
statistical test in this package.

Coefficients are expanded deterministically from a 64-bit seed with a
splitmix64 counter stream, so a family is fully reproducible from
(seed, K, m, n) alone and never needs to be serialized.

Not a cryptographic hash: an adversary who knows the seed can construct
worst-case collisions.  See the README for this (documented) limitation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

P = (1 << 61) - 1  # Mersenne prime field modulus
_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# attempts per coefficient slot; rejection probability is ~2^-61 so more
# than one attempt essentially never happens
_ATTEMPT_SPACE = 1 << 20


class DomainTooLargeError(ValueError):
    """Witness-index universe does not fit in the hash field."""


def mix64(z: int) -> int:
    """splitmix64 finalizer; the sole mixing primitive used for seeding."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(base: int, index: int) -> int:
    """Deterministic per-trial seed stream: independent 64-bit seeds from a base."""
    return mix64((base + (index + 1) * _GOLDEN) & _MASK64)


def _draw_coeff(seed: int, stream: int, forbid_zero: bool) -> int:
    """Draw one field element from the (seed, stream) counter substream."""
    for attempt in range(_ATTEMPT_SPACE):
        t = stream * _ATTEMPT_SPACE + attempt
        v = mix64((seed + (t + 1) * _GOLDEN) & _MASK64) & P  # 61 low bits
        if v < P and not (forbid_zero and v == 0):
            return v
    raise RuntimeError("coefficient rejection loop exhausted")  # pragma: no cover


@dataclass(frozen=True)
class HashFamily:
    """K seeded hash functions [m] -> [n], exactly 4-wise independent mod p.

    Immutable after construction; evaluation is pure, so instances can be
    shared freely across threads.
    """

    seed: int
    K: int
    m: int
    n: int
    coeffs: tuple[tuple[int, int, int, int], ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not (0 <= self.seed <= _MASK64):
            raise ValueError("seed must fit in 64 bits")
        if self.m >= P:
            raise DomainTooLargeError(f"m = {self.m} must be < 2^61 - 1")
        table = []
        for k in range(self.K):
            # slots 0..2 are a0..a2; slot 3 is the (nonzero) leading a3.
            # Each (k, slot) pair owns a disjoint counter substream.
            a = tuple(
                _draw_coeff(self.seed, 4 * k + s, forbid_zero=(s == 3))
                for s in range(4)
            )
            table.append(a)
        object.__setattr__(self, "coeffs", tuple(table))

    def eval(self, k: int, i: int) -> int:
        """Bucket of witness index i under function k (exact integer path)."""
        if not 0 <= k < self.K:
            raise ValueError(f"function index {k} out of range [0, {self.K})")
        if not 0 <= i < self.m:
            raise ValueError(f"witness index {i} out of range [0, {self.m})")
        i = int(i)  # numpy scalars would wrap at 2^64 below
        a0, a1, a2, a3 = self.coeffs[k]
        acc = a3
        acc = (acc * i + a2) % P
        acc = (acc * i + a1) % P
        acc = (acc * i + a0) % P
        return acc % self.n

    def residue_block(self, k: int, idx: np.ndarray) -> np.ndarray:
        """Polynomial residues mod p for a uint64 array of witness indices.

        The residue does not depend on the bucket count, so a scan over
        many n can evaluate it once per seed and reduce with ``% n``.
        """
        if not 0 <= k < self.K:
            raise ValueError(f"function index {k} out of range [0, {self.K})")
        idx = np.asarray(idx, dtype=np.uint64)
        if idx.size and (int(idx.max()) >= self.m):
            raise ValueError("witness index out of range")
        a0, a1, a2, a3 = (np.uint64(c) for c in self.coeffs[k])
        acc = np.full(idx.shape, a3, dtype=np.uint64)
        acc = _addmod_p61(_mulmod_p61(acc, idx), a2)
        acc = _addmod_p61(_mulmod_p61(acc, idx), a1)
        acc = _addmod_p61(_mulmod_p61(acc, idx), a0)
        return acc

    def eval_block(self, k: int, idx: np.ndarray) -> np.ndarray:
        """Vectorized eval: bucket array for a uint64 array of witness indices.

        Bit-identical to :meth:`eval` (property-tested); used on hot paths.
        """
        return self.residue_block(k, idx) % np.uint64(self.n)

    @cached_property
    def bucket_table(self) -> np.ndarray:
        """(K, m) uint64 table of every bucket; memoized, read-only."""
        idx = np.arange(self.m, dtype=np.uint64)
        table = np.stack([self.eval_block(k, idx) for k in range(self.K)])
        table.setflags(write=False)
        return table

    def buckets_of(self, i: int) -> tuple[int, ...]:
        """Sorted distinct buckets {h_k(i)} for one witness index."""
        return tuple(sorted({self.eval(k, i) for k in range(self.K)}))


def pairwise_only_family(seed: int, K: int, m: int, n: int) -> HashFamily:
    """Degraded family with a2 = a3 = 0: only pairwise independent.

    Negative control for the 4-wise moment test; four arithmetically
    related inputs expose strong joint structure that the full degree-3
    family does not have.
    """
    fam = HashFamily(seed, K, m, n)
    degraded = tuple((a0, a1, 0, 0) for (a0, a1, _a2, _a3) in fam.coeffs)
    object.__setattr__(fam, "coeffs", degraded)
    if "bucket_table" in fam.__dict__:  # drop any memoized table
        del fam.__dict__["bucket_table"]
    return fam


# ---------------------------------------------------------------------------
# Vectorized arithmetic mod p = 2^61 - 1 (uint64 lanes, no 128-bit ints)

_LOW31 = np.uint64((1 << 31) - 1)
_LOW30 = np.uint64((1 << 30) - 1)
_P64 = np.uint64(P)


def _mulmod_p61(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(a * b) mod p for uint64 arrays with values < p.

    Schoolbook split at 31 bits; all intermediates stay below 2^63.
    """
    a_hi = a >> np.uint64(31)
    a_lo = a & _LOW31
    b_hi = b >> np.uint64(31)
    b_lo = b & _LOW31
    hi = a_hi * b_hi                      # < 2^60
    mid = a_hi * b_lo + a_lo * b_hi       # < 2^62
    lo = a_lo * b_lo                      # < 2^62
    # a*b = hi*2^62 + mid*2^31 + lo;  2^61 === 1 (mod p)
    m_hi = mid >> np.uint64(30)
    m_lo = mid & _LOW30
    t = (
        (hi << np.uint64(1))
        + m_hi
        + (m_lo << np.uint64(31))
        + (lo >> np.uint64(61))
        + (lo & _P64)
    )
    t = (t >> np.uint64(61)) + (t & _P64)
    return np.where(t >= _P64, t - _P64, t)


def _addmod_p61(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    t = a + b  # both < p < 2^61, no overflow
    t = (t >> np.uint64(61)) + (t & _P64)
    return np.where(t >= _P64, t - _P64, t)


def _mix64_vec(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def coeffs_for_seeds(seeds: np.ndarray, K: int) -> np.ndarray:
    """(len(seeds), K, 4) coefficient tables, bit-identical to HashFamily.

    Vectorizes the seed-expansion of many families at once for the
    Monte Carlo hash tests.  The per-slot rejection rule (value == p, or a
    zero leading coefficient) is replayed exactly.
    """
    seeds = np.asarray(seeds, dtype=np.uint64)
    out = np.empty((seeds.size, K, 4), dtype=np.uint64)
    golden = np.uint64(_GOLDEN)
    for k in range(K):
        for s in range(4):
            stream = np.uint64((4 * k + s) * _ATTEMPT_SPACE)
            attempt = np.uint64(0)
            with np.errstate(over="ignore"):
                v = _mix64_vec(seeds + (stream + attempt + np.uint64(1)) * golden) & _P64
            bad = (v >= _P64) | ((v == 0) if s == 3 else np.zeros_like(v, dtype=bool))
            while bad.any():  # pragma: no cover - probability ~2^-61 per draw
                attempt += np.uint64(1)
                with np.errstate(over="ignore"):
                    redraw = _mix64_vec(
                        seeds[bad] + (stream + attempt + np.uint64(1)) * golden
                    ) & _P64
                v[bad] = redraw
                bad = (v >= _P64) | ((v == 0) if s == 3 else np.zeros_like(v, dtype=bool))
            out[:, k, s] = v
    return out


def buckets_for_seeds(coeffs: np.ndarray, k: int, i: int, n: int) -> np.ndarray:
    """Bucket of input i under function k for every coefficient table."""
    x = np.uint64(i)
    a0 = coeffs[:, k, 0]
    a1 = coeffs[:, k, 1]
    a2 = coeffs[:, k, 2]
    a3 = coeffs[:, k, 3]
    xv = np.full(a0.shape, x, dtype=np.uint64)
    acc = a3
    acc = _addmod_p61(_mulmod_p61(acc, xv), a2)
    acc = _addmod_p61(_mulmod_p61(acc, xv), a1)
    acc = _addmod_p61(_mulmod_p61(acc, xv), a0)
    return acc % np.uint64(n)


# ---------------------------------------------------------------------------
# Statistical self-tests


@dataclass(frozen=True)
class MomentTestReport:
    """Joint-frequency statistics of a 4-input Monte Carlo moment test."""

    trials: int
    n: int
    max_abs_deviation: float   # max |freq - 1/n^4| over joint cells
    max_se_units: float        # same deviation in binomial standard errors
    failed_cells: int          # cells deviating by more than 4 SE
    passed: bool


def fourwise_moment_test(
    family_factory: Callable[[int], HashFamily],
    inputs: Sequence[int],
    trials: int,
    *,
    k: int = 0,
    base_seed: int = 0,
) -> MomentTestReport:
    """Empirical check of the 4-wise product condition over random seeds.

    Draws `trials` fresh families, evaluates function `k` on the four
    given inputs, and compares every joint output cell against the
    product-uniform frequency 1/n^4.  A cell off by more than 4 binomial
    standard errors flags failure.  The degree-3 family passes; a
    pairwise-only family on arithmetically related inputs fails wildly.
    """
    if len(inputs) != 4 or len(set(inputs)) != 4:
        raise ValueError("exactly 4 distinct inputs required")
    if trials < 10**5:
        raise ValueError(f"trials must be >= 1e5 for a conclusive test, got {trials}")

    probe = family_factory(base_seed)
    n = probe.n
    K = probe.K
    for i in inputs:
        if not 0 <= i < probe.m:
            raise ValueError(f"input {i} out of range [0, {probe.m})")

    # matches derive_seed(base_seed, t) element-wise, so distinct bases
    # give decorrelated seed streams rather than shifted windows
    with np.errstate(over="ignore"):
        seeds = _mix64_vec(
            np.uint64(base_seed)
            + (np.arange(trials, dtype=np.uint64) + np.uint64(1)) * np.uint64(_GOLDEN)
        )
    # Replicate the factory's coefficient tables vectorized when it matches
    # the standard constructor (or its a2=a3=0 degraded variant); otherwise
    # fall back to per-trial construction.
    sample = np.array(family_factory(int(seeds[0])).coeffs, dtype=np.uint64)
    head = coeffs_for_seeds(seeds[:1], K)[0]
    if np.array_equal(sample, head):
        vec_coeffs = coeffs_for_seeds(seeds, K)
    elif np.array_equal(sample[:, :2], head[:, :2]) and not sample[:, 2:].any():
        vec_coeffs = coeffs_for_seeds(seeds, K)
        vec_coeffs[:, :, 2:] = 0
    else:
        vec_coeffs = None

    if vec_coeffs is None:
        bucket_cols = np.empty((4, trials), dtype=np.uint64)
        for t in range(trials):
            fam = family_factory(int(seeds[t]))
            for pos, i in enumerate(inputs):
                bucket_cols[pos, t] = fam.eval(k, i)
    else:
        bucket_cols = np.stack(
            [buckets_for_seeds(vec_coeffs, k, i, n) for i in inputs]
        )

    cell = bucket_cols[0]
    for pos in range(1, 4):
        cell = cell * np.uint64(n) + bucket_cols[pos]
    counts = np.bincount(cell.astype(np.int64), minlength=n**4)

    q = 1.0 / n**4
    se = np.sqrt(trials * q * (1.0 - q))
    dev = np.abs(counts - trials * q)
    max_dev = float(dev.max())
    failed = int((dev > 4.0 * se).sum())
    return MomentTestReport(
        trials=trials,
        n=n,
        max_abs_deviation=max_dev / trials,
        max_se_units=max_dev / se,
        failed_cells=failed,
        passed=failed == 0,
    )
