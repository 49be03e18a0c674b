"""Seeded synthetic datasets with exactly verified ground truth.

Every generator returns a PlantedDataset whose per-query margin (ideal
overlap of the planted neighbor minus the best non-neighbor) is
recomputed from scratch before returning; a dataset that fails its own
margin check is a bug, not a sample to retry quietly.

Queries are separate items, not corpus members, so retrieval code never
needs to exclude self-matches.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .monoids import MonoidSpec
from .witnesses import Graph, WitnessSpace, ideal_overlap


class GenerationError(RuntimeError):
    """Requested dataset is infeasible for the given parameters."""


@dataclass(frozen=True)
class PlantedDataset:
    """Corpus plus queries with one verified nearest neighbor each.

    `neighbor_ids[q]` indexes `items`; `gaps[q]` is the exact margin
    Δ(query, neighbor) − max over other corpus items of Δ(query, item).
    """

    items: tuple
    queries: tuple
    neighbor_ids: tuple[int, ...]
    gaps: tuple[float, ...]
    seed: int

    @property
    def gap(self) -> float:
        return min(self.gaps)

    def __post_init__(self):
        if len(self.queries) != len(self.neighbor_ids) or len(self.queries) != len(
            self.gaps
        ):
            raise ValueError("queries, neighbor_ids, and gaps must align")


def verify_margins(
    dataset: PlantedDataset, space: WitnessSpace, spec: MonoidSpec
) -> tuple[float, ...]:
    """Recompute every per-query margin exhaustively via ideal overlap."""
    margins = []
    for q, (query, nb) in enumerate(zip(dataset.queries, dataset.neighbor_ids)):
        best = ideal_overlap(space, spec, query, dataset.items[nb])
        rival = max(
            ideal_overlap(space, spec, query, item)
            for j, item in enumerate(dataset.items)
            if j != nb
        )
        margins.append(best - rival)
    return tuple(margins)


def _checked(
    dataset: PlantedDataset,
    space: WitnessSpace,
    spec: MonoidSpec,
    required_gap: float,
) -> PlantedDataset:
    margins = verify_margins(dataset, space, spec)
    if min(margins) < required_gap - 1e-9:
        raise GenerationError(
            f"constructed margin {min(margins)} below required {required_gap}"
        )
    return PlantedDataset(
        items=dataset.items,
        queries=dataset.queries,
        neighbor_ids=dataset.neighbor_ids,
        gaps=margins,
        seed=dataset.seed,
    )


class _IdAllocator:
    """Hands out disjoint id blocks from a shuffled universe."""

    def __init__(self, rng: np.random.Generator, universe: int):
        self.pool = rng.permutation(universe)
        self.cursor = 0

    def take(self, count: int) -> np.ndarray:
        if self.cursor + count > len(self.pool):
            raise GenerationError(
                "universe too small for the requested corpus; "
                "increase it or shrink N / base_size"
            )
        out = self.pool[self.cursor : self.cursor + count]
        self.cursor += count
        return out


def _group_sizes(total: int, groups: int) -> list[int]:
    base, extra = divmod(total, groups)
    return [base + (g < extra) for g in range(groups)]


def planted_sets(
    N: int,
    universe: int,
    base_size: int,
    overlap_hi: int,
    overlap_lo: int,
    seed: int,
    *,
    queries: int = 1,
) -> PlantedDataset:
    """Id-set corpus with a planted Boolean-overlap gap.

    Each query gets one neighbor sharing exactly `overlap_hi` ids and
    distractors sharing exactly `overlap_lo`; distractors of the same
    query also share a background pool with each other, so the
    non-neighbors are mutually similar rather than independent noise.
    Ids across query groups are disjoint, making the margin exactly
    overlap_hi − overlap_lo whenever a query has at least one
    distractor.
    """
    if overlap_hi <= overlap_lo:
        raise ValueError("overlap_hi must exceed overlap_lo")
    if not (0 <= overlap_lo and overlap_hi <= base_size):
        raise ValueError("need 0 <= overlap_lo < overlap_hi <= base_size")
    if base_size > universe:
        raise ValueError("base_size exceeds universe")
    if queries < 1:
        raise ValueError("need at least one query")
    if N < queries + 1:
        raise ValueError("need at least one neighbor per query plus one distractor")

    rng = np.random.default_rng(seed)
    alloc = _IdAllocator(rng, universe)
    shared_bg = (base_size - overlap_lo) // 2

    items: list[tuple[int, ...]] = []
    query_items: list[tuple[int, ...]] = []
    neighbor_ids: list[int] = []
    for size in _group_sizes(N, queries):
        query = alloc.take(base_size)
        pool = alloc.take(base_size)
        query_items.append(tuple(sorted(int(i) for i in query)))

        carried = rng.choice(query, size=overlap_hi, replace=False)
        neighbor = np.concatenate([carried, alloc.take(base_size - overlap_hi)])
        neighbor_ids.append(len(items))
        items.append(tuple(sorted(int(i) for i in neighbor)))

        for _ in range(size - 1):
            from_query = rng.choice(query, size=overlap_lo, replace=False)
            from_pool = rng.choice(pool, size=shared_bg, replace=False)
            private = alloc.take(base_size - overlap_lo - shared_bg)
            distractor = np.concatenate([from_query, from_pool, private])
            items.append(tuple(sorted(int(i) for i in distractor)))

    dataset = PlantedDataset(
        items=tuple(items),
        queries=tuple(query_items),
        neighbor_ids=tuple(neighbor_ids),
        gaps=(0.0,) * queries,
        seed=seed,
    )
    from .monoids import boolean_monoid
    from .witnesses import BooleanSetSpace

    space = BooleanSetSpace(universe)
    return _checked(dataset, space, boolean_monoid(), float(overlap_hi - overlap_lo))


def nested_corpus(
    dataset: PlantedDataset,
    N: int,
    space: WitnessSpace,
    spec: MonoidSpec,
) -> PlantedDataset:
    """Sub-corpus keeping every neighbor and each group's leading distractors.

    Scaling sweeps slice one large corpus instead of redrawing per N:
    growing N then only adds distractors, so retrieval success against
    the larger corpus is a sub-event of success against the smaller one
    under matched hash seeds, and measured minimal n stays monotone in N
    up to trial noise.  Margins are re-verified on the slice.
    """
    groups = len(dataset.queries)
    if N > len(dataset.items):
        raise ValueError("slice exceeds the source corpus")
    if N < groups + 1:
        raise ValueError("need at least one neighbor per query plus one distractor")
    starts = list(dataset.neighbor_ids) + [len(dataset.items)]
    if starts[0] != 0 or any(a >= b for a, b in zip(starts, starts[1:])):
        raise ValueError("dataset is not group-major; cannot slice")
    items: list = []
    neighbor_ids: list[int] = []
    for g, size in enumerate(_group_sizes(N, groups)):
        lo, hi = starts[g], starts[g + 1]
        if size > hi - lo:
            raise ValueError(f"group {g} has only {hi - lo} items, need {size}")
        neighbor_ids.append(len(items))
        items.extend(dataset.items[lo : lo + size])
    sliced = PlantedDataset(
        items=tuple(items),
        queries=dataset.queries,
        neighbor_ids=tuple(neighbor_ids),
        gaps=dataset.gaps,
        seed=dataset.seed,
    )
    return _checked(sliced, space, spec, dataset.gap)


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _at_cosine(rng: np.random.Generator, anchor: np.ndarray, cosine: float):
    """Random unit vector at an exact cosine from a unit anchor."""
    raw = rng.standard_normal(anchor.size)
    perp = raw - np.dot(raw, anchor) * anchor
    norm = np.linalg.norm(perp)
    if norm < 1e-12:
        raise GenerationError("degenerate random direction; dimension too small")
    return cosine * anchor + np.sqrt(1.0 - cosine * cosine) * (perp / norm)


def planted_vectors(
    N: int,
    d: int,
    gap_cosine: float,
    seed: int,
    *,
    queries: int = 1,
    neighbor_cosine: float = 0.95,
) -> PlantedDataset:
    """Unit-vector corpus with a planted cosine gap, verified by exact
    dot products.

    The neighbor sits at cosine `neighbor_cosine` from its query;
    distractors sit at cosines drawn from a band topping out at
    neighbor_cosine − gap_cosine.
    """
    if d < 2:
        raise ValueError("need dimension at least 2")
    if not (0.0 < gap_cosine < 1.0):
        raise ValueError("gap_cosine must lie in (0, 1)")
    if queries < 1:
        raise ValueError("need at least one query")
    if N < queries + 1:
        raise ValueError("need at least one neighbor per query plus one distractor")
    low_cos = neighbor_cosine - gap_cosine
    if low_cos <= -1.0:
        raise ValueError("gap_cosine too large for the chosen neighbor cosine")

    rng = np.random.default_rng(seed)
    items: list[np.ndarray] = []
    query_items: list[np.ndarray] = []
    neighbor_ids: list[int] = []
    gaps: list[float] = []
    band = 0.3 if low_cos - 0.3 > -1.0 else (low_cos + 1.0) / 2
    for size in _group_sizes(N, queries):
        query = _unit(rng.standard_normal(d))
        query.setflags(write=False)
        query_items.append(query)
        neighbor = _at_cosine(rng, query, neighbor_cosine)
        neighbor.setflags(write=False)
        neighbor_ids.append(len(items))
        items.append(neighbor)
        worst = -1.0
        for _ in range(size - 1):
            c = rng.uniform(low_cos - band, low_cos)
            vec = _at_cosine(rng, query, c)
            vec.setflags(write=False)
            items.append(vec)
            worst = max(worst, float(np.dot(vec, query)))
        # exact dot-product verification, no feature approximation
        got = float(np.dot(neighbor, query))
        if got < neighbor_cosine - 1e-9 or (size > 1 and worst > low_cos + 1e-9):
            raise GenerationError("cosine construction failed verification")
        gaps.append(got - worst if size > 1 else got - low_cos)

    # cross-group rivals: random unit vectors concentrate near cosine 0,
    # but verify rather than assume
    for q, query in enumerate(query_items):
        for j, item in enumerate(items):
            if j == neighbor_ids[q]:
                continue
            c = float(np.dot(query, item))
            if c > low_cos + 1e-9:
                raise GenerationError(
                    "cross-group vector too close to a query; raise d or lower N"
                )
            gaps[q] = min(gaps[q], neighbor_cosine - c)

    return PlantedDataset(
        items=tuple(items),
        queries=tuple(query_items),
        neighbor_ids=tuple(neighbor_ids),
        gaps=tuple(gaps),
        seed=seed,
    )


def dataset_from_overlaps(
    items: Sequence,
    queries: Sequence,
    space: WitnessSpace,
    spec: MonoidSpec,
    *,
    seed: int = 0,
) -> PlantedDataset:
    """Label each query's nearest corpus item by exhaustive ideal
    overlap; usable for carriers without a planted construction
    (landmark distances, counts).  Ties make the margin zero and fail.
    """
    if len(items) < 2:
        raise ValueError("need at least two corpus items")
    neighbor_ids = []
    gaps = []
    for query in queries:
        overlaps = [ideal_overlap(space, spec, query, item) for item in items]
        order = sorted(range(len(items)), key=lambda j: overlaps[j], reverse=True)
        margin = overlaps[order[0]] - overlaps[order[1]]
        if margin <= 0.0:
            raise GenerationError("query has no unique nearest neighbor")
        neighbor_ids.append(order[0])
        gaps.append(margin)
    return PlantedDataset(
        items=tuple(items),
        queries=tuple(queries),
        neighbor_ids=tuple(neighbor_ids),
        gaps=tuple(gaps),
        seed=seed,
    )


def planted_hybrid(
    N: int,
    universe: int,
    base_size: int,
    seed: int,
    *,
    queries: int = 1,
    weights: tuple[float, float] = (0.5, 0.5),
) -> PlantedDataset:
    """Two-channel id-set corpus where neither channel alone ranks the
    planted neighbor first but the weighted sum does.

    Per query: the neighbor shares 3/8 of base_size in both channels;
    half the distractors share 4/8 in channel 1 and 1/8 in channel 2,
    the other half mirrored.  Single-channel overlap favors a
    distractor (4/8 > 3/8) while the weighted combination favors the
    neighbor whenever both weights are positive and within a factor of
    2 of each other.
    """
    if base_size % 8:
        raise ValueError("base_size must be a multiple of 8")
    if queries < 1:
        raise ValueError("need at least one query")
    if N < queries + 2:
        raise ValueError("each query needs a neighbor and at least one distractor")
    w1, w2 = weights
    if min(w1, w2) <= 0:
        raise ValueError("both channel weights must be positive")
    if not (0.5 < w1 / w2 < 2.0):
        raise ValueError("weights this lopsided collapse to a single channel")

    s_both = 3 * base_size // 8
    s_strong = base_size // 2
    s_weak = base_size // 8

    rng = np.random.default_rng(seed)
    alloc1 = _IdAllocator(rng, universe)
    alloc2 = _IdAllocator(rng, universe)

    def overlap_item(q1, q2, share1, share2):
        a = np.concatenate(
            [rng.choice(q1, size=share1, replace=False), alloc1.take(base_size - share1)]
        )
        b = np.concatenate(
            [rng.choice(q2, size=share2, replace=False), alloc2.take(base_size - share2)]
        )
        return (
            tuple(sorted(int(i) for i in a)),
            tuple(sorted(int(i) for i in b)),
        )

    items = []
    query_items = []
    neighbor_ids = []
    for size in _group_sizes(N, queries):
        q1 = alloc1.take(base_size)
        q2 = alloc2.take(base_size)
        query_items.append(
            (
                tuple(sorted(int(i) for i in q1)),
                tuple(sorted(int(i) for i in q2)),
            )
        )
        neighbor_ids.append(len(items))
        items.append(overlap_item(q1, q2, s_both, s_both))
        for j in range(size - 1):
            if j % 2 == 0:
                items.append(overlap_item(q1, q2, s_strong, s_weak))
            else:
                items.append(overlap_item(q1, q2, s_weak, s_strong))

    from .monoids import boolean_monoid, product_monoid
    from .witnesses import BooleanSetSpace, PairedWitnessSpace

    space = PairedWitnessSpace(BooleanSetSpace(universe), BooleanSetSpace(universe))
    spec = product_monoid(boolean_monoid(), boolean_monoid(), w1, w2)
    required = (w1 + w2) * s_both - max(
        w1 * s_strong + w2 * s_weak, w1 * s_weak + w2 * s_strong
    )
    dataset = PlantedDataset(
        items=tuple(items),
        queries=tuple(query_items),
        neighbor_ids=tuple(neighbor_ids),
        gaps=(0.0,) * queries,
        seed=seed,
    )
    return _checked(dataset, space, spec, required)


def random_graph(
    V: int,
    E: int,
    weight_range: tuple[float, float],
    seed: int,
) -> Graph:
    """Connected undirected graph: random spanning tree plus uniform
    extra edges, weights uniform in weight_range.
    """
    if V < 2:
        raise ValueError("need at least two vertices")
    if E < V - 1:
        raise ValueError("E must be at least V - 1 for connectivity")
    max_edges = V * (V - 1) // 2
    if E > max_edges:
        raise ValueError(f"E exceeds the {max_edges} possible undirected edges")
    lo, hi = weight_range
    if not (0 < lo <= hi):
        raise ValueError("weights must be positive with lo <= hi")

    rng = np.random.default_rng(seed)
    order = rng.permutation(V)
    edges = set()
    for idx in range(1, V):
        u = int(order[idx])
        v = int(order[rng.integers(0, idx)])
        edges.add((min(u, v), max(u, v)))
    while len(edges) < E:
        u, v = rng.integers(0, V, size=2)
        if u == v:
            continue
        edges.add((min(int(u), int(v)), max(int(u), int(v))))
    weighted = [
        (u, v, float(w))
        for (u, v), w in zip(sorted(edges), rng.uniform(lo, hi, size=len(edges)))
    ]
    return Graph(V, weighted)


def sample_landmarks(graph: Graph, count: int, seed: int) -> tuple[int, ...]:
    if not (1 <= count <= graph.num_vertices):
        raise ValueError("landmark count must be in [1, V]")
    rng = np.random.default_rng(seed)
    picks = rng.choice(graph.num_vertices, size=count, replace=False)
    return tuple(int(v) for v in sorted(picks))


def zipf_counts(
    n_keys: int,
    vocab: int,
    seed: int,
    *,
    exponent: float = 1.5,
    max_count: int = 1_000_000,
) -> dict[int, int]:
    """Countmap over `n_keys` distinct keys with heavy-tailed counts."""
    if n_keys > vocab:
        raise ValueError("more keys than vocabulary entries")
    if exponent <= 1.0:
        raise ValueError("zipf exponent must exceed 1")
    rng = np.random.default_rng(seed)
    keys = rng.choice(vocab, size=n_keys, replace=False)
    counts = np.minimum(rng.zipf(exponent, size=n_keys), max_count)
    return {int(k): int(c) for k, c in zip(keys, counts)}


def save_ground_truth(path, dataset: PlantedDataset) -> None:
    """Sidecar: one `query_index neighbor_index gap` line per query."""
    with open(path, "w", encoding="ascii") as f:
        for q, (nb, gap) in enumerate(zip(dataset.neighbor_ids, dataset.gaps)):
            f.write(f"{q} {nb} {gap!r}\n")


def load_ground_truth(path) -> list[tuple[int, int, float]]:
    out = []
    with open(path, "r", encoding="ascii") as f:
        for line in f:
            fields = line.split()
            if len(fields) != 3:
                raise ValueError(f"malformed ground-truth line: {line!r}")
            out.append((int(fields[0]), int(fields[1]), float(fields[2])))
    return out
