"""Equivalence of the bucket encoding with four classic sketches.

Each check pairs the encoder against an independently written reference
(textbook Bloom filter, exact Jaccard, exact counts, exact Gaussian
kernel) sharing nothing but the hash family where bit-equality demands
it.
"""

from __future__ import annotations

import math

import numpy as np

from ..datagen import zipf_counts
from ..encoder import encode
from ..hashing import HashFamily, derive_seed, mix64
from ..monoids import (
    MonoidKind,
    boolean_monoid,
    natural_monoid,
    real_monoid,
    tropical_monoid,
)
from ..similarity import rewa_similarity
from ..witnesses import BooleanSetSpace, CountSpace, FourierFeatureSpace, WitnessSpace
from .config import ExperimentConfig
from .reports import config_dict

# fixed reference parameters for the equivalence suite; seeds come from
# the config, everything else is part of what "equivalence" means here
_BLOOM_KEYS = 1000
_BLOOM_K = 5
_BLOOM_N = 8192
_BLOOM_UNIVERSE = 200_000
_BLOOM_PROBES = 100_000
_BLOOM_SETS = 50

_MINHASH_TRIALS = 10_000
_MINHASH_UNIVERSE = 128

_CM_KEYS = 10_000
_CM_VOCAB = 50_000
_CM_K = 5
_CM_N = 4096

_RFF_D = 8
_RFF_M = 4096
_RFF_N = 1 << 17
_RFF_PAIRS = 100


class BloomFilter:
    """Plain K-probe bit-array filter; deliberately written without the
    encoder so agreement with it is evidence, not tautology."""

    def __init__(self, family: HashFamily):
        self.family = family
        self.bits = np.zeros(family.n, dtype=bool)

    def add(self, key: int) -> None:
        for k in range(self.family.K):
            self.bits[self.family.eval(k, key)] = True

    def contains(self, key: int) -> bool:
        return all(self.bits[self.family.eval(k, key)] for k in range(self.family.K))


def _run_bloom(cfg: ExperimentConfig) -> dict:
    rng = np.random.default_rng(derive_seed(cfg.seed, 31))
    family = HashFamily(derive_seed(cfg.seed, 32), _BLOOM_K, _BLOOM_UNIVERSE, _BLOOM_N)
    space = BooleanSetSpace(_BLOOM_UNIVERSE)
    spec = boolean_monoid()

    # bit-equality on many random sets under the shared family
    equal_sets = 0
    for _ in range(_BLOOM_SETS):
        size = int(rng.integers(1, 200))
        ids = np.sort(rng.choice(_BLOOM_UNIVERSE, size=size, replace=False))
        enc = encode(space, family, spec, tuple(int(i) for i in ids))
        filt = BloomFilter(family)
        for i in ids:
            filt.add(int(i))
        equal_sets += bool(np.array_equal(enc.buckets, filt.bits))

    # false-positive rate on one filter of _BLOOM_KEYS keys
    keys = rng.choice(_BLOOM_UNIVERSE, size=_BLOOM_KEYS, replace=False)
    filter_enc = encode(space, family, spec, tuple(sorted(int(i) for i in keys)))
    inserted = np.zeros(_BLOOM_UNIVERSE, dtype=bool)
    inserted[keys] = True
    absent = np.flatnonzero(~inserted)
    probes = rng.choice(absent, size=_BLOOM_PROBES, replace=False).astype(np.uint64)

    hit = np.ones(_BLOOM_PROBES, dtype=bool)
    for k in range(_BLOOM_K):
        hit &= filter_enc.buckets[family.eval_block(k, probes).astype(np.int64)]
    fp_rate = float(hit.mean())
    expected = (1.0 - math.exp(-_BLOOM_K * _BLOOM_KEYS / _BLOOM_N)) ** _BLOOM_K

    # membership through actual singleton-set encodings, cross-checked
    # against the textbook filter
    textbook = BloomFilter(family)
    for i in keys:
        textbook.add(int(i))
    sample = [int(i) for i in keys[:100]] + [int(i) for i in probes[:100]]
    agree = 0
    for key in sample:
        single = encode(space, family, spec, (key,))
        via_encoding = bool(np.all(filter_enc.buckets[single.buckets]))
        agree += via_encoding == textbook.contains(key)

    return {
        "method": "bloom",
        "params": {
            "keys": _BLOOM_KEYS,
            "K": _BLOOM_K,
            "n": _BLOOM_N,
            "probes": _BLOOM_PROBES,
        },
        "bit_equal_sets": equal_sets,
        "sets_checked": _BLOOM_SETS,
        "fp_rate": fp_rate,
        "fp_expected": expected,
        "fp_abs_error": abs(fp_rate - expected),
        "membership_agreement": agree,
        "membership_checked": len(sample),
        "passed": equal_sets == _BLOOM_SETS
        and abs(fp_rate - expected) <= 0.01
        and agree == len(sample),
    }


class PrioritySpace(WitnessSpace):
    """One uniform priority per universe element; an item's witness is
    the priority where the item has the element, +inf elsewhere.  The
    min-fold of these is the classic minimum-permutation sketch.
    """

    kind = MonoidKind.TROPICAL
    sparse = True

    def __init__(self, universe: int, seed: int):
        if universe < 1:
            raise ValueError("universe must be positive")
        self.m = universe
        self.bound = 1.0
        self.seed = seed
        self.priorities = np.random.default_rng(seed).random(universe)
        self.priorities.setflags(write=False)

    def evaluate(self, i: int, x):
        self._check_index(i)
        return float(self.priorities[i]) if i in x else math.inf

    def witness_values(self, x):
        for i in sorted(x):
            self._check_index(i)
            yield i, float(self.priorities[i])

    def fingerprint(self) -> int:
        return mix64(self.m * 0x9E3779B97F4A7C15 ^ self.seed)


def _jaccard_pair(rng, universe: int, shared: int, extra_a: int, extra_b: int):
    ids = rng.choice(universe, size=shared + extra_a + extra_b, replace=False)
    a = frozenset(int(i) for i in ids[: shared + extra_a])
    b = frozenset(int(i) for i in np.concatenate([ids[:shared], ids[shared + extra_a :]]))
    return a, b


def _run_minhash(cfg: ExperimentConfig) -> dict:
    rng = np.random.default_rng(derive_seed(cfg.seed, 41))
    layouts = [(5, 22, 23), (20, 10, 10), (45, 2, 3)]  # Jaccard 0.1, 0.5, 0.9
    pairs = [_jaccard_pair(rng, _MINHASH_UNIVERSE, *lay) for lay in layouts]
    exact = [len(a & b) / len(a | b) for a, b in pairs]

    spec = tropical_monoid(1.0)
    agree = np.zeros(len(pairs))
    for t in range(_MINHASH_TRIALS):
        trial_seed = derive_seed(cfg.seed, 42_000 + t)
        space = PrioritySpace(_MINHASH_UNIVERSE, trial_seed)
        family = HashFamily(derive_seed(trial_seed, 1), 1, _MINHASH_UNIVERSE, 1)
        for p, (a, b) in enumerate(pairs):
            ea = encode(space, family, spec, a)
            eb = encode(space, family, spec, b)
            agree[p] += float(ea.buckets[0]) == float(eb.buckets[0])
    estimates = agree / _MINHASH_TRIALS

    per_pair = [
        {
            "jaccard_exact": float(j),
            "estimate": float(est),
            "bias": float(est - j),
        }
        for j, est in zip(exact, estimates)
    ]
    max_bias = max(abs(e["bias"]) for e in per_pair)
    return {
        "method": "minhash",
        "params": {"trials": _MINHASH_TRIALS, "universe": _MINHASH_UNIVERSE},
        "pairs": per_pair,
        "max_abs_bias": max_bias,
        "passed": max_bias <= 0.02,
    }


def _run_countmin(cfg: ExperimentConfig) -> dict:
    counts = zipf_counts(_CM_KEYS, _CM_VOCAB, derive_seed(cfg.seed, 51))
    space = CountSpace(_CM_VOCAB)
    spec = natural_monoid()
    family = HashFamily(derive_seed(cfg.seed, 52), _CM_K, _CM_VOCAB, _CM_N)
    sketch = encode(space, family, spec, counts)

    keys = np.fromiter(counts.keys(), dtype=np.uint64, count=len(counts))
    true = np.fromiter(counts.values(), dtype=np.int64, count=len(counts))
    estimates = np.full(len(counts), np.iinfo(np.uint64).max, dtype=np.uint64)
    for k in range(_CM_K):
        hit = sketch.buckets[family.eval_block(k, keys).astype(np.int64)]
        estimates = np.minimum(estimates, hit)
    over = estimates.astype(np.int64) - true
    violations = int((over < 0).sum())

    # heavy-hitter taming: clipping and log-compression cap magnitudes
    clip = cfg.count_clip
    clip_space = CountSpace(_CM_VOCAB, clip=clip)
    log_space = CountSpace(_CM_VOCAB, clip=clip, log_compress=True)
    max_clip = max(v for _i, v in clip_space.witness_values(counts))
    max_log = max(v for _i, v in log_space.witness_values(counts))

    quantiles = {
        str(q): float(np.quantile(over, q)) for q in (0.5, 0.9, 0.99, 1.0)
    }
    return {
        "method": "countmin",
        "params": {"keys": _CM_KEYS, "K": _CM_K, "n": _CM_N},
        "underestimates": violations,
        "overestimate_quantiles": quantiles,
        "clip_bound": float(clip),
        "max_clipped_magnitude": float(max_clip),
        "log_bound": float(math.log1p(clip)),
        "max_log_magnitude": float(max_log),
        "passed": violations == 0
        and max_clip <= clip
        and max_log <= math.log1p(clip),
    }


def _run_rff(cfg: ExperimentConfig) -> dict:
    rng = np.random.default_rng(derive_seed(cfg.seed, 61))
    space = FourierFeatureSpace(
        _RFF_D, _RFF_M, cfg.bandwidth, seed=derive_seed(cfg.seed, 62)
    )
    spec = real_monoid()
    family = HashFamily(derive_seed(cfg.seed, 63), 1, _RFF_M, _RFF_N)

    errors = []
    for _ in range(_RFF_PAIRS):
        x = rng.standard_normal(_RFF_D)
        y = rng.standard_normal(_RFF_D)
        x /= np.linalg.norm(x)
        y /= np.linalg.norm(y)
        ex = encode(space, family, spec, x)
        ey = encode(space, family, spec, y)
        s = rewa_similarity(ex, ey)
        kernel = math.exp(-(cfg.bandwidth**2) * float(np.sum((x - y) ** 2)) / 2.0)
        errors.append(abs(s - kernel))
    max_err = float(max(errors))
    return {
        "method": "rff",
        "params": {"d": _RFF_D, "m": _RFF_M, "n": _RFF_N, "pairs": _RFF_PAIRS},
        "max_abs_error": max_err,
        "mean_abs_error": float(np.mean(errors)),
        "passed": max_err <= 0.05,
    }


def run_equivalence(cfg: ExperimentConfig):
    """Dispatch on cfg.method; returns (report, csv_rows)."""
    runner = {
        "bloom": _run_bloom,
        "minhash": _run_minhash,
        "countmin": _run_countmin,
        "rff": _run_rff,
    }[cfg.method]
    body = runner(cfg)
    report = {"experiment": "equivalence", "config": config_dict(cfg), **body}
    return report, []
