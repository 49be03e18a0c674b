"""Witness spaces: the per-index "lens" functions that map a data item
into a monoid carrier, for four data domains.

    BooleanSetSpace        id sets        -> bits (membership indicators)
    CountSpace             count maps     -> u64 counts, optionally clipped,
                                             or log1p-compressed into floats
    FourierFeatureSpace    dense vectors  -> sqrt(2/m)*cos(w_i.x + b_i)
                                             (Rahimi-Recht random features)
    LandmarkDistanceSpace  graph vertices -> shortest-path distance to the
                                             i-th landmark (min-plus carrier)

Every space declares the carrier kind it emits into, its witness count m,
and a magnitude bound on emitted values.  Heavy-tailed counts are tamed
by clipping or log1p compression so the bound holds exactly.

`ideal_overlap` sums phi over all m witness pairs with no hashing or
compression; it is the exact reference that encodings are calibrated
against.

Also here: the corpus/graph text formats shared with the experiment
harness (one item per line, ASCII, LF).
"""

from __future__ import annotations

import functools
import heapq
import math
import struct
from typing import Iterable, Iterator, Mapping, Optional, Sequence

import numpy as np

from .hashing import mix64
from .monoids import MonoidKind, MonoidSpec, identity, phi

IdSet = tuple[int, ...]
CountMap = dict[int, int]


def as_idset(ids: Iterable[int]) -> IdSet:
    """Canonical id-set form: strictly increasing tuple of unique ids."""
    out = tuple(sorted(set(int(i) for i in ids)))
    if out and out[0] < 0:
        raise ValueError("ids must be nonnegative")
    return out


def _float_bits(x: float) -> int:
    return struct.unpack("<Q", struct.pack("<d", x))[0]


def _fold_fingerprint(*values: int) -> int:
    h = mix64(0x524557A0)
    for v in values:
        h = mix64(h ^ (v & ((1 << 64) - 1)))
    return h


# ---------------------------------------------------------------------------
# Graphs (for the min-plus instantiation)


class Graph:
    """Undirected graph with nonnegative edge weights."""

    def __init__(self, num_vertices: int, edges: Sequence[tuple[int, int, float]]):
        if num_vertices < 1:
            raise ValueError("graph needs at least one vertex")
        self.num_vertices = num_vertices
        adj: list[list[tuple[int, float]]] = [[] for _ in range(num_vertices)]
        canon = []
        for u, v, w in edges:
            if not (0 <= u < num_vertices and 0 <= v < num_vertices):
                raise ValueError(f"edge ({u},{v}) out of vertex range")
            w = float(w)
            if w < 0:
                raise ValueError(f"negative edge weight {w} on ({u},{v})")
            adj[u].append((v, w))
            if u != v:
                adj[v].append((u, w))
            canon.append((min(u, v), max(u, v), w))
        self._adj = adj
        self.edges = tuple(sorted(canon))

    def shortest_paths(self, source: int) -> np.ndarray:
        """Dijkstra from one source; unreachable vertices get +inf."""
        if not 0 <= source < self.num_vertices:
            raise ValueError(f"vertex {source} out of range")
        dist = np.full(self.num_vertices, np.inf)
        dist[source] = 0.0
        heap = [(0.0, source)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            for v, w in self._adj[u]:
                nd = d + w
                if nd < dist[v]:
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        return dist

    @functools.cached_property
    def content_hash(self) -> int:
        parts = [self.num_vertices, len(self.edges)]
        for u, v, w in self.edges:
            parts.extend((u, v, _float_bits(w)))
        return _fold_fingerprint(*parts)


# ---------------------------------------------------------------------------
# Witness spaces


class WitnessSpace:
    """Base: m witness functions into one monoid carrier.

    Immutable after construction; `evaluate` is pure.  Sparse spaces
    additionally expose the non-neutral support so encoders can skip
    fold-neutral values (a semantics-preserving no-op).
    """

    m: int
    kind: MonoidKind
    bound: float
    sparse: bool

    def evaluate(self, i: int, x):
        raise NotImplementedError

    def witness_values(self, x) -> Iterator[tuple[int, object]]:
        """(index, value) pairs in ascending index order; sparse spaces
        yield only non-neutral witnesses."""
        raise NotImplementedError

    def fingerprint(self) -> int:
        raise NotImplementedError

    def _check_index(self, i: int) -> None:
        if not 0 <= i < self.m:
            raise ValueError(f"witness index {i} out of range [0, {self.m})")


class BooleanSetSpace(WitnessSpace):
    """Membership indicators over a fixed id universe."""

    kind = MonoidKind.BOOLEAN
    sparse = True

    def __init__(self, universe: int):
        if universe < 1:
            raise ValueError("universe must be >= 1")
        self.m = universe
        self.bound = 1.0

    def _check_item(self, x: Sequence[int]) -> None:
        for i in x:
            if not 0 <= i < self.m:
                raise ValueError(f"id {i} outside universe [0, {self.m})")

    def evaluate(self, i: int, x: Sequence[int]) -> int:
        self._check_index(i)
        self._check_item(x)
        return 1 if i in set(x) else 0

    def witness_values(self, x: Sequence[int]) -> Iterator[tuple[int, int]]:
        self._check_item(x)
        for i in sorted(set(x)):
            yield i, 1

    def support_ids(self, x: Sequence[int]) -> np.ndarray:
        self._check_item(x)
        return np.array(sorted(set(x)), dtype=np.uint64)

    def fingerprint(self) -> int:
        return _fold_fingerprint(1, self.m)


class CountSpace(WitnessSpace):
    """Per-id counts over a vocabulary.

    `clip` caps counts at a bound (NATURAL carrier); `log_compress`
    applies log1p and emits into the REAL carrier instead.  Either
    transform restores a finite magnitude bound for heavy-tailed counts;
    with neither, the bound is +inf.
    """

    sparse = True

    def __init__(
        self, vocab: int, clip: Optional[int] = None, log_compress: bool = False
    ):
        if vocab < 1:
            raise ValueError("vocab must be >= 1")
        if clip is not None and clip < 1:
            raise ValueError("clip bound must be >= 1")
        self.m = vocab
        self.clip = clip
        self.log_compress = log_compress
        self.kind = MonoidKind.REAL if log_compress else MonoidKind.NATURAL
        if log_compress:
            self.bound = math.log1p(clip) if clip is not None else math.inf
        else:
            self.bound = float(clip) if clip is not None else math.inf

    def _tame(self, c: int):
        if c < 0:
            raise ValueError("counts must be >= 0")
        if self.clip is not None:
            c = min(c, self.clip)
        return math.log1p(c) if self.log_compress else c

    def evaluate(self, i: int, x: Mapping[int, int]):
        self._check_index(i)
        return self._tame(int(x.get(i, 0)))

    def witness_values(self, x: Mapping[int, int]):
        for i in sorted(x):
            self._check_index(i)
            c = int(x[i])
            if c > 0:
                yield i, self._tame(c)

    def fingerprint(self) -> int:
        return _fold_fingerprint(
            2, self.m, -1 if self.clip is None else self.clip, int(self.log_compress)
        )


class FourierFeatureSpace(WitnessSpace):
    """Random Fourier features sqrt(2/m)*cos(w_i.x + b_i) for the Gaussian
    kernel exp(-gamma^2 * ||x-y||^2 / 2).

    Frequencies are N(0, gamma^2 I) rows and offsets Uniform[0, 2pi),
    reproducible from the seed.  The sqrt(2/m) scale is folded into the
    witness so the summed products estimate the kernel directly.
    """

    kind = MonoidKind.REAL
    sparse = False

    def __init__(self, d: int, m: int, bandwidth: float, seed: int):
        if d < 1 or m < 1:
            raise ValueError("d and m must be >= 1")
        if not bandwidth > 0:
            raise ValueError("bandwidth must be > 0")
        self.d = d
        self.m = m
        self.bandwidth = float(bandwidth)
        self.seed = seed
        rng = np.random.Generator(np.random.PCG64(seed))
        self.frequencies = rng.normal(0.0, self.bandwidth, size=(m, d))
        self.offsets = rng.uniform(0.0, 2.0 * math.pi, size=m)
        self.frequencies.setflags(write=False)
        self.offsets.setflags(write=False)
        self.bound = math.sqrt(2.0 / m)

    def _check_item(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.d,):
            raise ValueError(f"expected vector of dim {self.d}, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("vector entries must be finite")
        return x

    def values_array(self, x) -> np.ndarray:
        x = self._check_item(x)
        return self.bound * np.cos(self.frequencies @ x + self.offsets)

    def evaluate(self, i: int, x) -> float:
        self._check_index(i)
        return float(self.values_array(x)[i])

    def witness_values(self, x):
        vals = self.values_array(x)
        for i in range(self.m):
            yield i, float(vals[i])

    def fingerprint(self) -> int:
        return _fold_fingerprint(
            3, self.d, self.m, _float_bits(self.bandwidth), self.seed
        )


class LandmarkDistanceSpace(WitnessSpace):
    """Shortest-path distances from an item vertex to each landmark.

    One Dijkstra pass per landmark runs at construction; evaluation is a
    memoized lookup.  Finite distances are capped at the diameter bound D;
    unreachable landmarks stay +inf (the min-fold identity), so encodings
    remain faithful about disconnection.
    """

    kind = MonoidKind.TROPICAL
    sparse = False

    def __init__(self, graph: Graph, landmarks: Sequence[int], diameter: float):
        if not landmarks:
            raise ValueError("at least one landmark required")
        if not diameter > 0:
            raise ValueError("diameter bound must be > 0")
        self.graph = graph
        self.landmarks = tuple(int(v) for v in landmarks)
        self.diameter = float(diameter)
        self.m = len(self.landmarks)
        self.bound = self.diameter
        dist = np.stack([graph.shortest_paths(v) for v in self.landmarks])
        finite = np.isfinite(dist)
        dist[finite] = np.minimum(dist[finite], self.diameter)
        dist.setflags(write=False)
        self._dist = dist  # (m, V)

    def _check_item(self, x: int) -> int:
        x = int(x)
        if not 0 <= x < self.graph.num_vertices:
            raise ValueError(f"vertex {x} out of range")
        return x

    def evaluate(self, i: int, x: int) -> float:
        self._check_index(i)
        return float(self._dist[i, self._check_item(x)])

    def values_array(self, x: int) -> np.ndarray:
        return self._dist[:, self._check_item(x)]

    def witness_values(self, x: int):
        vals = self.values_array(x)
        for i in range(self.m):
            yield i, float(vals[i])

    def fingerprint(self) -> int:
        parts = [4, self.m, _float_bits(self.diameter), self.graph.content_hash]
        parts.extend(self.landmarks)
        return _fold_fingerprint(*parts)


class PairedWitnessSpace(WitnessSpace):
    """Two same-m channels evaluated in lockstep into a product carrier.

    Items are (x1, x2) pairs; witness i emits the element pair.  Shares a
    single hash family across both channels, which makes the encoded
    similarity decompose exactly into the weighted channel similarities.
    """

    kind = MonoidKind.PRODUCT

    def __init__(self, space1: WitnessSpace, space2: WitnessSpace):
        if space1.m != space2.m:
            raise ValueError(
                f"paired spaces need equal witness counts, got {space1.m} and {space2.m}"
            )
        self.space1 = space1
        self.space2 = space2
        self.m = space1.m
        self.bound = max(space1.bound, space2.bound)
        self.sparse = space1.sparse and space2.sparse

    def evaluate(self, i: int, x):
        return (self.space1.evaluate(i, x[0]), self.space2.evaluate(i, x[1]))

    def witness_values(self, x):
        x1, x2 = x
        if self.sparse:
            v1 = dict(self.space1.witness_values(x1))
            v2 = dict(self.space2.witness_values(x2))
            n1 = _neutral_value(self.space1)
            n2 = _neutral_value(self.space2)
            for i in sorted(set(v1) | set(v2)):
                yield i, (v1.get(i, n1), v2.get(i, n2))
        else:
            vals1 = _full_values(self.space1, x1)
            vals2 = _full_values(self.space2, x2)
            for i in range(self.m):
                yield i, (vals1[i], vals2[i])

    def fingerprint(self) -> int:
        return _fold_fingerprint(5, self.space1.fingerprint(), self.space2.fingerprint())


def _full_values(space: WitnessSpace, x) -> list:
    """All m witness values of one item, neutral-filled for sparse spaces."""
    if hasattr(space, "values_array"):
        return [float(v) for v in space.values_array(x)]
    vals = [_neutral_value(space)] * space.m
    for i, v in space.witness_values(x):
        vals[i] = v
    return vals


_NEUTRALS = {
    MonoidKind.BOOLEAN: 0,
    MonoidKind.NATURAL: 0,
    MonoidKind.REAL: 0.0,
    MonoidKind.TROPICAL: math.inf,
}


def _neutral_value(space: WitnessSpace):
    if space.kind is MonoidKind.PRODUCT:
        return (_neutral_value(space.space1), _neutral_value(space.space2))
    return _NEUTRALS[space.kind]


# ---------------------------------------------------------------------------
# Vector utilities


def l2_normalize(x) -> np.ndarray:
    """x / ||x||; rejects the zero vector."""
    x = np.asarray(x, dtype=np.float64)
    norm = float(np.linalg.norm(x))
    if norm == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return x / norm


# ---------------------------------------------------------------------------
# Exact (uncompressed) similarity


def ideal_overlap(space: WitnessSpace, spec: MonoidSpec, x, y) -> float:
    """Sum of phi over all m witness pairs, with no hashing involved.

    This is the exact quantity that encoded similarities estimate; used
    as the calibration reference and in planted-dataset verification.
    """
    if spec.kind is not space.kind:
        raise TypeError(f"spec kind {spec.kind} does not match space kind {space.kind}")
    if isinstance(space, PairedWitnessSpace):
        w1, w2 = spec.weights
        s1, s2 = spec.children
        return w1 * ideal_overlap(space.space1, s1, x[0], y[0]) + w2 * ideal_overlap(
            space.space2, s2, x[1], y[1]
        )
    if hasattr(space, "values_array"):
        vx = space.values_array(x)
        vy = space.values_array(y)
        if spec.kind is MonoidKind.REAL:
            return float(np.dot(vx, vy))
        if spec.kind is MonoidKind.TROPICAL:
            d = spec.diameter
            return float(-(np.minimum(vx, d) + np.minimum(vy, d)).sum())
    vx = dict(space.witness_values(x))
    vy = dict(space.witness_values(y))
    neutral = _neutral_value(space)
    total = 0.0
    for i in sorted(set(vx) | set(vy)):
        total += phi(spec, vx.get(i, neutral), vy.get(i, neutral))
    rest = space.m - len(set(vx) | set(vy))
    if rest:
        e = identity(spec)
        total += rest * phi(spec, e, e)
    return total


# ---------------------------------------------------------------------------
# Corpus and graph text formats (ASCII, LF, items numbered by line)


def save_idset_corpus(path, items: Iterable[IdSet]) -> None:
    with open(path, "w", newline="\n") as f:
        for ids in items:
            f.write(" ".join(str(i) for i in ids) + "\n")


def load_idset_corpus(path) -> list[IdSet]:
    out = []
    with open(path) as f:
        for lineno, line in enumerate(f):
            ids = tuple(int(t) for t in line.split())
            if any(b <= a for a, b in zip(ids, ids[1:])):
                raise ValueError(f"line {lineno}: ids must be strictly increasing")
            out.append(ids)
    return out


def save_countmap_corpus(path, items: Iterable[CountMap]) -> None:
    with open(path, "w", newline="\n") as f:
        for cm in items:
            f.write(" ".join(f"{i}:{cm[i]}" for i in sorted(cm)) + "\n")


def load_countmap_corpus(path) -> list[CountMap]:
    out = []
    with open(path) as f:
        for lineno, line in enumerate(f):
            cm: CountMap = {}
            for tok in line.split():
                key, _, val = tok.partition(":")
                c = int(val)
                if c < 1:
                    raise ValueError(f"line {lineno}: counts must be >= 1")
                cm[int(key)] = c
            out.append(cm)
    return out


def save_vector_corpus(path, items: Iterable[np.ndarray]) -> None:
    with open(path, "w", newline="\n") as f:
        for v in items:
            f.write(" ".join(repr(float(c)) for c in v) + "\n")


def load_vector_corpus(path) -> list[np.ndarray]:
    out = []
    with open(path) as f:
        for lineno, line in enumerate(f):
            v = np.array([float(t) for t in line.split()])
            if not np.all(np.isfinite(v)):
                raise ValueError(f"line {lineno}: entries must be finite")
            out.append(v)
    return out


def save_graph(path, graph: Graph) -> None:
    with open(path, "w", newline="\n") as f:
        f.write(f"{graph.num_vertices} {len(graph.edges)}\n")
        for u, v, w in graph.edges:
            f.write(f"{u} {v} {repr(w)}\n")


def load_graph(path) -> Graph:
    with open(path) as f:
        header = f.readline().split()
        if len(header) != 2:
            raise ValueError("graph header must be 'V E'")
        num_vertices, num_edges = int(header[0]), int(header[1])
        edges = []
        for _ in range(num_edges):
            u, v, w = f.readline().split()
            edges.append((int(u), int(v), float(w)))
    return Graph(num_vertices, edges)
