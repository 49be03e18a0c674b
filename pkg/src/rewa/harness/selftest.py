"""Fast end-to-end sanity checks behind the `selftest` subcommand:
monoid laws on random triples, the 4-wise hash moment test with its
degraded negative control, and serialization round-trips for every
carrier including infinity sentinels.
"""

from __future__ import annotations

import math

import numpy as np

from ..encoder import FormatError, deserialize, encode, serialize
from ..hashing import HashFamily, derive_seed, fourwise_moment_test, pairwise_only_family
from ..monoids import (
    MonoidKind,
    MonoidSpec,
    boolean_monoid,
    combine,
    identity,
    natural_monoid,
    product_monoid,
    real_monoid,
    tropical_monoid,
)
from ..witnesses import BooleanSetSpace, FourierFeatureSpace, PairedWitnessSpace
from .config import ExperimentConfig
from .equivalence import PrioritySpace
from .reports import config_dict

_TRIPLES = 1000
_MOMENT_TRIALS = 200_000

_U64_MAX = (1 << 64) - 1


def _sample(spec: MonoidSpec, rng: np.random.Generator):
    if spec.kind is MonoidKind.BOOLEAN:
        return int(rng.integers(0, 2))
    if spec.kind is MonoidKind.NATURAL:
        # mix ordinary counts with near-saturation values
        if rng.random() < 0.1:
            return _U64_MAX - int(rng.integers(0, 10))
        return int(rng.integers(0, 1000))
    if spec.kind is MonoidKind.REAL:
        return float(rng.uniform(-100.0, 100.0))
    if spec.kind is MonoidKind.TROPICAL:
        if rng.random() < 0.2:
            return math.inf
        return float(rng.uniform(0.0, spec.diameter))
    return (
        _sample(spec.children[0], rng),
        _sample(spec.children[1], rng),
    )


def _close(spec: MonoidSpec, a, b) -> bool:
    if spec.kind is MonoidKind.REAL:
        return math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-12)
    if spec.kind is MonoidKind.PRODUCT:
        return _close(spec.children[0], a[0], b[0]) and _close(
            spec.children[1], a[1], b[1]
        )
    return a == b


def check_monoid_laws(spec: MonoidSpec, triples: int, seed: int) -> bool:
    """Associativity, commutativity, and identity on random triples."""
    rng = np.random.default_rng(seed)
    e = identity(spec)
    for _ in range(triples):
        a, b, c = (_sample(spec, rng) for _ in range(3))
        if not _close(spec, combine(spec, combine(spec, a, b), c),
                      combine(spec, a, combine(spec, b, c))):
            return False
        if not _close(spec, combine(spec, a, b), combine(spec, b, a)):
            return False
        if not _close(spec, combine(spec, e, a), a) or not _close(
            spec, combine(spec, a, e), a
        ):
            return False
    return True


def _roundtrip_cases(seed: int):
    bool_space = BooleanSetSpace(64)
    rff = FourierFeatureSpace(d=3, m=64, bandwidth=1.0, seed=derive_seed(seed, 1))
    prio = PrioritySpace(64, derive_seed(seed, 2))
    paired = PairedWitnessSpace(bool_space, rff)
    vec = np.arange(3, dtype=np.float64) / math.sqrt(5.0)
    counts = {3: 2, 17: 5, 40: 1}

    from ..witnesses import CountSpace

    yield bool_space, boolean_monoid(), (1, 5, 9, 33)
    yield CountSpace(64, clip=8), natural_monoid(clip=8), counts
    yield rff, real_monoid(), vec
    # sparse tropical leaves +inf sentinels in untouched buckets
    yield prio, tropical_monoid(1.0), frozenset({2, 11, 50})
    yield paired, product_monoid(boolean_monoid(), real_monoid(), 0.4, 0.6), (
        (1, 5, 9),
        vec,
    )


def check_serialization(seed: int) -> tuple[bool, bool]:
    """(round_trips_ok, truncation_rejected_with_offset)."""
    family = HashFamily(derive_seed(seed, 3), K=2, m=64, n=32)
    ok = True
    blob = b""
    for space, spec, item in _roundtrip_cases(seed):
        enc = encode(space, family, spec, item)
        blob = serialize(enc)
        back = deserialize(blob)
        if back.header != enc.header:
            ok = False
        if spec.kind is MonoidKind.PRODUCT:
            same = np.array_equal(back.buckets[0], enc.buckets[0]) and np.array_equal(
                back.buckets[1], enc.buckets[1]
            )
        else:
            same = np.array_equal(back.buckets, enc.buckets)
        ok = ok and bool(same)

    truncated_ok = False
    try:
        deserialize(blob[: len(blob) - 5])
    except FormatError as exc:
        truncated_ok = isinstance(exc.offset, int) and exc.offset <= len(blob) - 5
    return ok, truncated_ok


def run_selftest(cfg: ExperimentConfig):
    laws = {}
    specs = {
        "boolean": boolean_monoid(),
        "natural": natural_monoid(),
        "real": real_monoid(),
        "tropical": tropical_monoid(32.0),
        "product": product_monoid(boolean_monoid(), real_monoid(), 1.0, 2.0),
    }
    for name, spec in specs.items():
        laws[name] = check_monoid_laws(spec, _TRIPLES, derive_seed(cfg.seed, 5))

    def good_factory(seed: int) -> HashFamily:
        return HashFamily(seed, 1, 16, 4)

    def degraded_factory(seed: int) -> HashFamily:
        return pairwise_only_family(seed, 1, 16, 4)

    good = fourwise_moment_test(
        good_factory, (0, 1, 2, 3), _MOMENT_TRIALS, base_seed=derive_seed(cfg.seed, 6)
    )
    bad = fourwise_moment_test(
        degraded_factory,
        (0, 1, 2, 3),
        _MOMENT_TRIALS,
        base_seed=derive_seed(cfg.seed, 6),
    )
    roundtrips, truncation = check_serialization(cfg.seed)

    passed = (
        all(laws.values()) and good.passed and not bad.passed and roundtrips and truncation
    )
    report = {
        "experiment": "selftest",
        "config": config_dict(cfg),
        "monoid_laws": laws,
        "hash_moment_passed": good.passed,
        "hash_moment_max_se_units": good.max_se_units,
        "degraded_detected": not bad.passed,
        "degraded_max_se_units": bad.max_se_units,
        "serialization_roundtrips": roundtrips,
        "truncation_rejected": truncation,
        "passed": passed,
    }
    return report, []
