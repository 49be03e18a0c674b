"""Acceptance gate: the fourteen claims this package is built around,
one test per claim, each at its stated tolerance and runtime budget.

Every test emits exactly one `[NN] name: PASS/FAIL (detail)` line; run
with `-s` (or read captured output on failure) to see them.  These are
end-to-end checks on top of the per-module unit suites, so they favor
the public entry points over internals.
"""

import math
import time

import numpy as np

from rewa.datagen import random_graph
from rewa.encoder import FormatError, deserialize, encode, serialize
from rewa.harness.config import ExperimentConfig
from rewa.harness.equivalence import run_equivalence
from rewa.harness.failure import run_failure_modes
from rewa.harness.hybrid import run_hybrid
from rewa.harness.ranking import run_calibration, run_gap_sweep, run_scaling
from rewa.harness.selftest import check_monoid_laws
from rewa.hashing import HashFamily, fourwise_moment_test, pairwise_only_family
from rewa.monoids import (
    MonoidKind,
    boolean_monoid,
    natural_monoid,
    product_monoid,
    real_monoid,
    tropical_monoid,
)
from rewa.similarity import softmax
from rewa.witnesses import (
    BooleanSetSpace,
    CountSpace,
    FourierFeatureSpace,
    Graph,
    LandmarkDistanceSpace,
    PairedWitnessSpace,
)


def _verdict(num: int, name: str, ok: bool, detail: str) -> None:
    line = f"[{num:02d}] {name}: {'PASS' if ok else 'FAIL'} ({detail})"
    print(line, flush=True)
    assert ok, line


def _instantiations():
    """One (space, spec, item) per carrier, m=48 everywhere."""
    graph = random_graph(V=48, E=96, weight_range=(0.5, 2.0), seed=4)
    count_item = {i: (i % 11) + 1 for i in range(0, 48, 2)}
    return {
        "boolean": (BooleanSetSpace(48), boolean_monoid(), tuple(range(0, 48, 3))),
        "natural": (CountSpace(48, clip=9), natural_monoid(clip=9), count_item),
        "real": (
            FourierFeatureSpace(d=6, m=48, bandwidth=1.0, seed=3),
            real_monoid(),
            np.array([0.3, -0.5, 0.1, 0.7, -0.2, 0.4]) / math.sqrt(1.04),
        ),
        "tropical": (
            LandmarkDistanceSpace(graph, landmarks=list(range(48)), diameter=8.0),
            tropical_monoid(diameter=8.0),
            7,
        ),
        "product": (
            PairedWitnessSpace(BooleanSetSpace(48), CountSpace(48, clip=9)),
            product_monoid(boolean_monoid(), natural_monoid(clip=9), 0.6, 0.4),
            (tuple(range(0, 48, 3)), count_item),
        ),
    }


def test_01_monoid_laws():
    t0 = time.monotonic()
    specs = {
        "boolean": boolean_monoid(),
        "natural": natural_monoid(),
        "real": real_monoid(),
        "tropical": tropical_monoid(32.0),
        "product": product_monoid(boolean_monoid(), real_monoid(), 1.0, 2.0),
    }
    results = {name: check_monoid_laws(s, 10_000, 17) for name, s in specs.items()}
    elapsed = time.monotonic() - t0
    ok = all(results.values()) and elapsed < 1.0
    _verdict(1, "monoid laws, 1e4 triples each", ok, f"{results}; {elapsed:.2f}s < 1s")


def test_02_order_independence():
    t0 = time.monotonic()
    rng = np.random.Generator(np.random.PCG64(40))
    worst = {}
    for name, (space, spec, item) in _instantiations().items():
        family = HashFamily(seed=23, K=2, m=space.m, n=24)
        base = encode(space, family, spec, item, witness_order=list(range(space.m)))
        dev = 0.0
        for _ in range(100):
            order = rng.permutation(space.m).tolist()
            other = encode(space, family, spec, item, witness_order=order)
            if spec.kind is MonoidKind.REAL:
                dev = max(dev, float(np.max(np.abs(other.buckets - base.buckets))))
            elif spec.kind is MonoidKind.PRODUCT:
                if not np.array_equal(other.buckets[0], base.buckets[0]):
                    dev = math.inf
                dev = max(dev, float(np.max(np.abs(other.buckets[1] - base.buckets[1]))))
            elif not np.array_equal(other.buckets, base.buckets):
                dev = math.inf
        worst[name] = dev
    elapsed = time.monotonic() - t0
    ok = all(v <= 1e-9 for v in worst.values()) and elapsed < 10.0
    _verdict(
        2,
        "order independence, 100 permutations x 5 instantiations",
        ok,
        f"max dev {max(worst.values()):.2e}; {elapsed:.1f}s < 10s",
    )


def test_03_bloom_equivalence():
    t0 = time.monotonic()
    report, _ = run_equivalence(ExperimentConfig(method="bloom"))
    elapsed = time.monotonic() - t0
    ok = (
        report["bit_equal_sets"] == report["sets_checked"] == 50
        and report["params"] == {"keys": 1000, "K": 5, "n": 8192, "probes": 100_000}
        and report["fp_abs_error"] <= 0.01
        and report["membership_agreement"] == report["membership_checked"]
        and elapsed < 30.0
    )
    _verdict(
        3,
        "Bloom bit-equality and FP rate",
        ok,
        f"50/50 bit-equal, |fp err| {report['fp_abs_error']:.4f} <= 0.01; {elapsed:.1f}s < 30s",
    )


def test_04_minhash_equivalence():
    t0 = time.monotonic()
    report, _ = run_equivalence(ExperimentConfig(method="minhash"))
    elapsed = time.monotonic() - t0
    exact = sorted(p["jaccard_exact"] for p in report["pairs"])
    ok = (
        exact == [0.1, 0.5, 0.9]
        and report["params"]["trials"] == 10_000
        and report["max_abs_bias"] <= 0.02
        and elapsed < 60.0
    )
    _verdict(
        4,
        "MinHash Jaccard bias over 1e4 seeds",
        ok,
        f"J={exact}, max |bias| {report['max_abs_bias']:.4f} <= 0.02; {elapsed:.1f}s < 60s",
    )


def test_05_countmin_property():
    t0 = time.monotonic()
    report, _ = run_equivalence(ExperimentConfig(method="countmin"))
    elapsed = time.monotonic() - t0
    ok = (
        report["params"]["keys"] == 10_000
        and report["underestimates"] == 0
        and report["max_clipped_magnitude"] <= report["clip_bound"]
        and report["max_log_magnitude"] <= report["log_bound"]
        and elapsed < 30.0
    )
    _verdict(
        5,
        "Count-Min one-sided error and taming bounds",
        ok,
        f"0 underestimates in 1e4 Zipf keys, magnitudes within bounds; {elapsed:.1f}s < 30s",
    )


def test_06_rff_kernel():
    t0 = time.monotonic()
    report, _ = run_equivalence(ExperimentConfig(method="rff"))
    elapsed = time.monotonic() - t0
    ok = (
        report["params"] == {"d": 8, "m": 4096, "n": 131072, "pairs": 100}
        and report["max_abs_error"] <= 0.05
        and elapsed < 60.0
    )
    _verdict(
        6,
        "RFF similarity vs Gaussian kernel",
        ok,
        f"max |err| {report['max_abs_error']:.4f} <= 0.05; {elapsed:.1f}s < 60s",
    )


def test_07_expectation_linearity():
    t0 = time.monotonic()
    fits = {}
    for inst in ("boolean", "natural", "tropical"):
        report, _ = run_calibration(ExperimentConfig(instantiation=inst))
        fits[inst] = report["calibration"]
    elapsed = time.monotonic() - t0
    ok = (
        all(f["r_squared"] >= 0.99 and f["alpha"] > 0 for f in fits.values())
        and elapsed < 300.0
    )
    detail = ", ".join(
        f"{k}: R2={v['r_squared']:.4f} a={v['alpha']:.2f}" for k, v in fits.items()
    )
    _verdict(7, "affine response, 50 pairs x 200 seeds", ok, f"{detail}; {elapsed:.0f}s < 300s")


def test_08_log_n_scaling():
    t0 = time.monotonic()
    cfg = ExperimentConfig(
        instantiation="boolean",
        N_list=tuple(2**p for p in range(8, 15)),
        universe=1_000_000,
        overlap_hi=24,
        queries=16,
        n_grid=tuple(range(16, 2049, 8)),
        seed=0,
    )
    report, _ = run_scaling(cfg)
    elapsed = time.monotonic() - t0
    fit = report["log_N_fit"]
    reached = all(e["reached"] for e in report["per_N"])
    ok = (
        not fit["omitted"]
        and reached
        and fit["r_squared"] >= 0.9
        and fit["slope"] > 0
        and elapsed < 600.0
    )
    _verdict(
        8,
        "minimal n vs ln N, N = 2^8..2^14",
        ok,
        f"slope {fit['slope']:.1f} > 0, R2 {fit['r_squared']:.4f} >= 0.9; {elapsed:.0f}s < 600s",
    )


def test_09_gap_dependence():
    t0 = time.monotonic()
    report, _ = run_gap_sweep(ExperimentConfig(gap_levels=(32, 16, 8)))
    elapsed = time.monotonic() - t0
    levels = report["levels"]
    ns = [e["minimal_n"] for e in levels]
    ok = (
        all(e["reached"] for e in levels)
        and all(a < b for a, b in zip(ns, ns[1:]))
        and elapsed < 600.0
    )
    _verdict(
        9,
        "halving the gap strictly increases minimal n",
        ok,
        f"minimal n {ns} at gaps {[e['gap'] for e in levels]}; {elapsed:.0f}s < 600s",
    )


def test_10_product_monoid():
    t0 = time.monotonic()
    report, _ = run_hybrid(ExperimentConfig(instantiation="product"))
    elapsed = time.monotonic() - t0
    ok = (
        report["decomposition_pairs"] == 100
        and report["decomposition_max_rel_deviation"] <= 1e-9
        and report["success_combined"] > max(report["success_channel1"], report["success_channel2"])
        and elapsed < 120.0
    )
    _verdict(
        10,
        "product decomposition and hybrid ranking",
        ok,
        f"max rel dev {report['decomposition_max_rel_deviation']:.1e} <= 1e-9, "
        f"combined {report['success_combined']:.2f} > channels "
        f"({report['success_channel1']:.2f}, {report['success_channel2']:.2f}); "
        f"{elapsed:.0f}s < 120s",
    )


def test_11_softmax_rank_invariance():
    t0 = time.monotonic()
    rng = np.random.Generator(np.random.PCG64(50))
    violations = 0
    for _ in range(1000):
        scores = rng.normal(scale=4.0, size=int(rng.integers(2, 64)))
        before = np.argsort(-scores, kind="stable")
        after = np.argsort(-softmax(scores), kind="stable")
        violations += not np.array_equal(before, after)
    elapsed = time.monotonic() - t0
    ok = violations == 0 and elapsed < 1.0
    _verdict(
        11,
        "softmax preserves argsort, 1000 vectors",
        ok,
        f"{violations} violations; {elapsed:.2f}s < 1s",
    )


def test_12_failure_modes():
    t0 = time.monotonic()
    report, _ = run_failure_modes(ExperimentConfig())
    elapsed = time.monotonic() - t0
    sweep = report["gap_sweep"]
    ok = (
        report["median_order_dependent"]
        and report["addition_order_independent"]
        and sweep["monotone_minimal_n"]
        and len(sweep["exhausted_levels"]) > 0
        and elapsed < 300.0
    )
    _verdict(
        12,
        "median aggregator flagged, vanishing gap exhausts the grid",
        ok,
        f"{report['median_distinct_encodings']} distinct median foldings, "
        f"exhausted at gaps {sweep['exhausted_levels']}; {elapsed:.0f}s < 300s",
    )


def test_13_hash_quality():
    t0 = time.monotonic()
    good = fourwise_moment_test(
        lambda s: HashFamily(s, 1, 16, 4), (0, 1, 2, 3), 200_000, base_seed=6
    )
    bad = fourwise_moment_test(
        lambda s: pairwise_only_family(s, 1, 16, 4), (0, 1, 2, 3), 200_000, base_seed=6
    )
    elapsed = time.monotonic() - t0
    ok = good.passed and not bad.passed and elapsed < 120.0
    _verdict(
        13,
        "4-wise moment test: degree-3 passes, pairwise-only detected",
        ok,
        f"good {good.max_se_units:.1f} SE, degraded {bad.max_se_units:.1f} SE; "
        f"{elapsed:.0f}s < 120s",
    )


def test_14_serialization():
    t0 = time.monotonic()
    round_trips = True
    saw_infinity = False
    for name, (space, spec, item) in _instantiations().items():
        if name == "tropical":
            # force an unreachable landmark so +inf crosses the format
            graph = Graph(48, [(i, i + 1, 1.0) for i in range(46)])
            space = LandmarkDistanceSpace(graph, landmarks=list(range(48)), diameter=8.0)
            item = 0
        family = HashFamily(seed=13, K=2, m=space.m, n=48)
        enc = encode(space, family, spec, item)
        back = deserialize(serialize(enc))
        if back.header != enc.header:
            round_trips = False
        if spec.kind is MonoidKind.PRODUCT:
            same = np.array_equal(back.buckets[0], enc.buckets[0]) and np.array_equal(
                back.buckets[1], enc.buckets[1]
            )
        else:
            same = np.array_equal(back.buckets, enc.buckets)
        round_trips = round_trips and same
        if spec.kind is MonoidKind.TROPICAL:
            saw_infinity = bool(np.isinf(back.buckets).any())

    space, spec, item = _instantiations()["natural"]
    blob = serialize(encode(space, HashFamily(seed=13, K=2, m=48, n=48), spec, item))
    truncation_ok = True
    for cut in range(len(blob)):
        try:
            deserialize(blob[:cut])
            truncation_ok = False
        except FormatError as exc:
            if not isinstance(exc.offset, int):
                truncation_ok = False
    elapsed = time.monotonic() - t0
    ok = round_trips and saw_infinity and truncation_ok and elapsed < 1.0
    _verdict(
        14,
        "serialization round trip and truncation offsets",
        ok,
        f"5 kinds bit-exact, +inf preserved, {len(blob)} truncations rejected; "
        f"{elapsed:.2f}s < 1s",
    )
