"""Encoded similarity, calibration, ranking, and softmax post-processing."""

import math

import numpy as np
import pytest

from rewa.encoder import Encoding, EncodingHeader, IncompatibleEncodingError, encode
from rewa.hashing import HashFamily
from rewa.monoids import (
    boolean_monoid,
    natural_monoid,
    product_monoid,
    real_monoid,
    tropical_monoid,
)
from rewa.similarity import (
    Calibration,
    affine_fit,
    calibrate,
    rank_by_score,
    rewa_similarity,
    softmax,
    topk,
)
from rewa.witnesses import (
    BooleanSetSpace,
    CountSpace,
    FourierFeatureSpace,
    PairedWitnessSpace,
)


def _tropical_encoding(buckets, diameter=10.0) -> Encoding:
    header = EncodingHeader(
        spec=tropical_monoid(diameter=diameter),
        seed=0,
        K=1,
        m=len(buckets),
        n=len(buckets),
        space_fingerprint=0,
    )
    arr = np.asarray(buckets, dtype=np.float64)
    arr.setflags(write=False)
    return Encoding(header, arr)


class TestRewaSimilarity:
    def test_boolean_self_similarity_is_popcount(self):
        space = BooleanSetSpace(32)
        family = HashFamily(seed=4, K=2, m=32, n=64)
        enc = encode(space, family, boolean_monoid(), (3, 9, 20))
        assert rewa_similarity(enc, enc) == float(np.count_nonzero(enc.buckets))

    def test_all_identity_boolean_scores_zero(self):
        space = BooleanSetSpace(32)
        family = HashFamily(seed=4, K=2, m=32, n=64)
        empty = encode(space, family, boolean_monoid(), ())
        other = encode(space, family, boolean_monoid(), (1, 2, 3))
        assert rewa_similarity(empty, other) == 0.0

    def test_tropical_hand_value(self):
        # -(min(1,10) + min(2,10)) - (min(inf,10) + min(4,10)) = -3 - 14
        a = _tropical_encoding([1.0, math.inf])
        b = _tropical_encoding([2.0, 4.0])
        assert rewa_similarity(a, b) == -17.0

    @pytest.mark.parametrize(
        "make",
        [
            lambda f: encode(BooleanSetSpace(16), f, boolean_monoid(), (1, 4, 9)),
            lambda f: encode(CountSpace(16, clip=9), f, natural_monoid(clip=9), {1: 4, 7: 2}),
            lambda f: encode(
                FourierFeatureSpace(d=3, m=16, bandwidth=1.0, seed=2),
                f,
                real_monoid(),
                [0.3, -0.1, 0.8],
            ),
        ],
        ids=["boolean", "natural", "real"],
    )
    def test_symmetry_is_exact(self, make):
        fam = HashFamily(seed=8, K=2, m=16, n=12)
        fam2 = HashFamily(seed=9, K=2, m=16, n=12)
        for f in (fam, fam2):
            a = make(f)
            b = make(f)
            assert rewa_similarity(a, b) == rewa_similarity(b, a)

    def test_header_mismatch_rejected(self):
        space = BooleanSetSpace(8)
        a = encode(space, HashFamily(seed=1, K=2, m=8, n=16), boolean_monoid(), (1,))
        b = encode(space, HashFamily(seed=2, K=2, m=8, n=16), boolean_monoid(), (1,))
        c = encode(space, HashFamily(seed=1, K=2, m=8, n=32), boolean_monoid(), (1,))
        with pytest.raises(IncompatibleEncodingError):
            rewa_similarity(a, b)
        with pytest.raises(IncompatibleEncodingError):
            rewa_similarity(a, c)

    def test_product_similarity_is_weighted_channel_sum(self):
        s1 = BooleanSetSpace(24)
        s2 = CountSpace(24, clip=7)
        paired = PairedWitnessSpace(s1, s2)
        spec1, spec2 = boolean_monoid(), natural_monoid(clip=7)
        spec = product_monoid(spec1, spec2, 0.35, 0.65)
        family = HashFamily(seed=14, K=2, m=24, n=20)
        x = ((1, 4, 9, 16), {2: 3, 9: 8, 20: 1})
        y = ((4, 9, 11), {2: 1, 5: 2, 20: 4})
        joint = rewa_similarity(
            encode(paired, family, spec, x), encode(paired, family, spec, y)
        )
        s_bool = rewa_similarity(
            encode(s1, family, spec1, x[0]), encode(s1, family, spec1, y[0])
        )
        s_nat = rewa_similarity(
            encode(s2, family, spec2, x[1]), encode(s2, family, spec2, y[1])
        )
        want = 0.35 * s_bool + 0.65 * s_nat
        assert abs(joint - want) <= 1e-9 * max(1.0, abs(want))


class TestAffineFit:
    def test_recovers_exact_line(self):
        xs = np.array([0.0, 1.0, 2.0, 3.0])
        slope, intercept, r2 = affine_fit(xs, 2.5 * xs - 1.0)
        assert slope == pytest.approx(2.5)
        assert intercept == pytest.approx(-1.0)
        assert r2 == pytest.approx(1.0)

    def test_flat_response_reports_perfect_flat_fit(self):
        # constant ys leave nothing to explain; must not divide by zero
        slope, _, r2 = affine_fit([1.0, 2.0, 3.0], [64.0, 64.0, 64.0])
        assert abs(slope) < 1e-9
        assert r2 == 1.0

    def test_noisy_fit_below_one(self):
        rng = np.random.Generator(np.random.PCG64(12))
        xs = np.linspace(0, 1, 50)
        _, _, r2 = affine_fit(xs, xs + rng.normal(scale=0.5, size=50))
        assert 0.0 <= r2 < 1.0


class TestCalibrate:
    def _design(self, universe=12, shared=10):
        # pairs sweeping Delta = 0..shared-1 against a fixed left item
        x = tuple(range(shared))
        fillers = tuple(range(shared, universe))
        return [(x, tuple(range(i)) + fillers) for i in range(shared)]

    def test_collision_free_regime_recovers_k(self):
        # n = 64*K*m keeps buckets essentially collision-free, so each
        # shared witness contributes K shared buckets: S ~= K * Delta
        universe, K = 12, 2
        space = BooleanSetSpace(universe)
        spec = boolean_monoid()
        fit = calibrate(
            space,
            spec,
            lambda s: HashFamily(seed=s, K=K, m=universe, n=64 * K * universe),
            self._design(universe),
            seeds=list(range(100, 135)),
        )
        assert fit.r_squared > 0.99
        assert fit.alpha == pytest.approx(K, abs=0.15)
        assert fit.beta == pytest.approx(0.0, abs=0.5)
        assert fit.predict(1.0) == fit.alpha + fit.beta

    def test_degenerate_design_rejected(self):
        space = BooleanSetSpace(8)
        pairs = [((0,), (1,)), ((2,), (3,)), ((4,), (5,))]  # every Delta = 0
        with pytest.raises(ValueError, match="degenerate"):
            calibrate(
                space,
                boolean_monoid(),
                lambda s: HashFamily(seed=s, K=1, m=8, n=32),
                pairs,
                seeds=[0, 1],
            )

    def test_too_few_pairs_or_seeds_rejected(self):
        space = BooleanSetSpace(8)
        fam = lambda s: HashFamily(seed=s, K=1, m=8, n=32)
        with pytest.raises(ValueError):
            calibrate(space, boolean_monoid(), fam, [((0,), (0,))], seeds=[0, 1])
        with pytest.raises(ValueError):
            calibrate(
                space, boolean_monoid(), fam, self._design(8, shared=6), seeds=[0]
            )

    def test_r_squared_within_unit_interval(self):
        space = BooleanSetSpace(12)
        fit = calibrate(
            space,
            boolean_monoid(),
            lambda s: HashFamily(seed=s, K=2, m=12, n=8),  # heavy collisions
            self._design(12),
            seeds=list(range(30)),
        )
        assert 0.0 <= fit.r_squared <= 1.0
        assert fit.seeds_used == 30
        assert fit.pairs_used == 10


class TestRanking:
    def _corpus(self, items, query, universe=32, n=256):
        space = BooleanSetSpace(universe)
        family = HashFamily(seed=6, K=2, m=universe, n=n)
        spec = boolean_monoid()
        encs = [encode(space, family, spec, it) for it in items]
        return encode(space, family, spec, query), encs

    def test_exact_duplicate_ranks_first(self):
        q, corpus = self._corpus([(9, 10), (2, 14), (1, 2, 3), (7,)], (1, 2, 3))
        assert topk(q, corpus, k=2).ids[0] == 2

    def test_k_equal_to_corpus_size_orders_everything(self):
        q, corpus = self._corpus([(1,), (1, 2), (5,), (1, 2, 3)], (1, 2, 3))
        ranked = topk(q, corpus, k=4)
        assert sorted(ranked.ids) == [0, 1, 2, 3]
        assert all(a >= b for a, b in zip(ranked.scores, ranked.scores[1:]))
        assert ranked.ids[0] == 3

    def test_ties_break_toward_lower_id(self):
        q, corpus = self._corpus([(5,), (5,), (5,)], (5,))
        assert topk(q, corpus, k=3).ids == (0, 1, 2)

    def test_k_zero_rejected(self):
        q, corpus = self._corpus([(5,)], (5,))
        with pytest.raises(ValueError):
            topk(q, corpus, k=0)

    def test_empty_corpus_rejected(self):
        q, _ = self._corpus([(5,)], (5,))
        with pytest.raises(ValueError):
            topk(q, [], k=1)

    def test_header_mismatch_propagates(self):
        q, corpus = self._corpus([(5,)], (5,))
        other = encode(
            BooleanSetSpace(32), HashFamily(seed=99, K=2, m=32, n=256), boolean_monoid(), (5,)
        )
        with pytest.raises(IncompatibleEncodingError):
            topk(q, corpus + [other], k=1)

    def test_rank_by_score_clamps_k_and_reports_rank(self):
        ranked = rank_by_score([0.1, 0.9, 0.5], k=10)
        assert ranked.ids == (1, 2, 0)
        assert ranked.rank_of(2) == 2
        with pytest.raises(ValueError):
            ranked.rank_of(7)


class TestSoftmax:
    def test_preserves_argsort_on_random_vectors(self):
        rng = np.random.Generator(np.random.PCG64(33))
        for _ in range(300):
            scores = rng.normal(scale=5.0, size=int(rng.integers(2, 40)))
            assert np.array_equal(
                np.argsort(-scores, kind="stable"),
                np.argsort(-softmax(scores), kind="stable"),
            )

    def test_is_a_distribution(self):
        w = softmax([1.0, 2.0, 3.0])
        assert w.sum() == pytest.approx(1.0)
        assert np.all(w > 0)

    def test_stable_under_large_scores(self):
        w = softmax([1e30, 1e30 + 1.0])
        assert np.all(np.isfinite(w))
        assert w.sum() == pytest.approx(1.0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            softmax([])
