"""Bucket-wise similarity, affine calibration against ideal overlap,
and ranking utilities.

The similarity of two encodings is the sum over buckets of the monoid's
compatibility kernel.  Under random hashing its expectation is an affine
function of the ideal (hash-free) overlap; `calibrate` recovers that
affine map empirically from encodings at many seeds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .encoder import Encoding, IncompatibleEncodingError
from .hashing import HashFamily
from .monoids import MonoidKind, MonoidSpec
from .witnesses import WitnessSpace, ideal_overlap


def rewa_similarity(a: Encoding, b: Encoding) -> float:
    """Sum of per-bucket kernel values.  Headers must match exactly."""
    if a.header != b.header:
        raise IncompatibleEncodingError(
            "encodings differ in monoid, seed, K, m, n, or witness space"
        )
    return _phi_sum(a.header.spec, a.buckets, b.buckets)


def _phi_sum(spec: MonoidSpec, xs, ys) -> float:
    if spec.kind is MonoidKind.BOOLEAN:
        return float(np.count_nonzero(xs & ys))
    if spec.kind is MonoidKind.NATURAL:
        return float(np.minimum(xs, ys).astype(np.float64).sum())
    if spec.kind is MonoidKind.REAL:
        return float(np.dot(xs, ys))
    if spec.kind is MonoidKind.TROPICAL:
        d = spec.diameter
        return float(-(np.minimum(xs, d).sum() + np.minimum(ys, d).sum()))
    w1, w2 = spec.weights
    return w1 * _phi_sum(spec.children[0], xs[0], ys[0]) + w2 * _phi_sum(
        spec.children[1], xs[1], ys[1]
    )


def affine_fit(xs, ys) -> tuple[float, float, float]:
    """Least-squares line through (xs, ys) with a flat-response-safe R^2.

    A constant ys leaves no variance to explain; the fit is reported as
    perfect when the residuals are numerically zero at the data's scale
    and as zero otherwise, rather than dividing by zero.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    slope, intercept = (float(v) for v in np.polyfit(xs, ys, 1))
    resid = ys - (slope * xs + intercept)
    ss_res = float(np.dot(resid, resid))
    centered = ys - ys.mean()
    ss_tot = float(np.dot(centered, centered))
    if ss_tot == 0.0:
        tol = ys.size * (1e-9 * max(1.0, float(np.abs(ys).max()))) ** 2
        r_squared = 1.0 if ss_res <= tol else 0.0
    else:
        r_squared = 1.0 - ss_res / ss_tot
    return slope, intercept, r_squared


@dataclass(frozen=True)
class Calibration:
    """Fitted affine response E[S] ~= alpha * overlap + beta."""

    alpha: float
    beta: float
    r_squared: float
    seeds_used: int
    pairs_used: int

    def predict(self, overlap: float) -> float:
        return self.alpha * overlap + self.beta


def calibrate(
    space: WitnessSpace,
    spec: MonoidSpec,
    family_factory: Callable[[int], HashFamily],
    pairs: Sequence[tuple],
    seeds: Sequence[int],
    *,
    encode_fn=None,
) -> Calibration:
    """Regress mean similarity (over hash seeds) on ideal overlap.

    `pairs` must span a range of overlaps; a flat design cannot identify
    the slope and raises ValueError.  `encode_fn(space, family, spec, x)`
    defaults to the canonical encoder and exists so bulk encoders can be
    swapped in.
    """
    from .encoder import encode as default_encode

    if len(pairs) < 2:
        raise ValueError("calibration needs at least two pairs")
    if len(seeds) < 2:
        raise ValueError("calibration needs at least two hash seeds")
    enc = encode_fn or default_encode

    overlaps = np.array(
        [ideal_overlap(space, spec, x, y) for x, y in pairs], dtype=np.float64
    )
    if np.ptp(overlaps) <= 1e-12 * max(1.0, np.abs(overlaps).max()):
        raise ValueError("degenerate calibration design: all overlaps equal")

    totals = np.zeros(len(pairs))
    for seed in seeds:
        family = family_factory(seed)
        for p, (x, y) in enumerate(pairs):
            totals[p] += rewa_similarity(
                enc(space, family, spec, x), enc(space, family, spec, y)
            )
    mean_s = totals / len(seeds)

    alpha, beta, r_squared = affine_fit(overlaps, mean_s)
    return Calibration(
        alpha=alpha,
        beta=beta,
        r_squared=r_squared,
        seeds_used=len(seeds),
        pairs_used=len(pairs),
    )


@dataclass(frozen=True)
class RankedList:
    """Corpus indices ordered by descending score; ties broken by index."""

    ids: tuple[int, ...]
    scores: tuple[float, ...]

    def rank_of(self, target: int) -> int:
        """1-based rank of a corpus index; raises if absent."""
        return self.ids.index(target) + 1


def rank_by_score(scores: Sequence[float], k: int) -> RankedList:
    """Top-k by score, deterministic: equal scores order by index."""
    if k <= 0:
        raise ValueError("k must be positive")
    arr = np.asarray(scores, dtype=np.float64)
    k = min(k, arr.size)
    # stable sort on negated scores keeps index order within ties
    order = np.argsort(-arr, kind="stable")[:k]
    return RankedList(
        ids=tuple(int(i) for i in order),
        scores=tuple(float(arr[i]) for i in order),
    )


def topk(query: Encoding, corpus: Sequence[Encoding], k: int) -> RankedList:
    """Full-scan retrieval over already-encoded items."""
    if not corpus:
        raise ValueError("corpus is empty")
    scores = [rewa_similarity(query, c) for c in corpus]
    return rank_by_score(scores, k)


def softmax(scores: Sequence[float]) -> np.ndarray:
    """Numerically stable softmax; preserves the ordering of scores."""
    arr = np.asarray(scores, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("softmax of empty score vector")
    shifted = arr - arr.max()
    weights = np.exp(shifted)
    return weights / weights.sum()
