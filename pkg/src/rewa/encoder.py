"""Bucket encodings: hash-project m witness values into n buckets,
folding collisions with the monoid, plus a deterministic binary format.

Collision semantics: a witness landing in the same bucket under two of
the K hash functions contributes ONCE per distinct bucket.  This is
irrelevant for idempotent folds (OR, min) but changes sums, so it is
pinned here and covered by tests.

Sparse items skip witnesses whose value equals the fold identity
(Boolean 0, Natural 0, Real 0.0); folding the identity is a no-op, so
skipping is semantics-preserving.  Dense spaces (Fourier features,
landmark distances) fold all m witnesses.

Binary format (little-endian):

    magic "REWA" | version u16 | monoid block | seed u64 | K u32
    | m u64 | n u64 | space fingerprint u64 | payload

    monoid block: kind u8, then kind params (NATURAL: clip flag u8 +
    optional u64; TROPICAL: D f64; PRODUCT: w1 f64, w2 f64, two child
    blocks).  Payloads: BOOLEAN bit-packed (little bit order), NATURAL
    u64[n], REAL/TROPICAL f64[n] (IEEE-754, +inf is the natural
    sentinel), PRODUCT child payloads back to back.

Encodings with different headers are never comparable; hash coefficients
are re-derived from the seed and never serialized.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import BinaryIO, Iterable, Optional, Sequence

import numpy as np

from .hashing import HashFamily
from .monoids import MonoidKind, MonoidSpec, combine, identity
from .witnesses import WitnessSpace

MAGIC = b"REWA"
VERSION = 1

_KIND_IDS = {
    MonoidKind.BOOLEAN: 0,
    MonoidKind.NATURAL: 1,
    MonoidKind.REAL: 2,
    MonoidKind.TROPICAL: 3,
    MonoidKind.PRODUCT: 4,
}
_IDS_KIND = {v: k for k, v in _KIND_IDS.items()}


class FormatError(ValueError):
    """Malformed encoding bytes; carries the offending byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class IncompatibleEncodingError(ValueError):
    """Operation across encodings whose headers do not match."""


@dataclass(frozen=True)
class EncodingHeader:
    spec: MonoidSpec
    seed: int
    K: int
    m: int
    n: int
    space_fingerprint: int


@dataclass(frozen=True)
class Encoding:
    """Length-n bucket vector over a monoid carrier.

    Buckets are numpy arrays (bool / uint64 / float64); PRODUCT buckets
    are a (child1, child2) tuple of arrays.  Instances are immutable.
    """

    header: EncodingHeader
    buckets: object

    @property
    def n(self) -> int:
        return self.header.n


def _kinds_match(spec: MonoidSpec, space: WitnessSpace) -> bool:
    if spec.kind is not space.kind:
        return False
    if spec.kind is MonoidKind.PRODUCT:
        return _kinds_match(spec.children[0], space.space1) and _kinds_match(
            spec.children[1], space.space2
        )
    return True


def encode(
    space: WitnessSpace,
    family: HashFamily,
    spec: MonoidSpec,
    x,
    *,
    witness_order: Optional[Sequence[int]] = None,
) -> Encoding:
    """Project one item into n buckets.

    `witness_order` overrides the (ascending-index) fold order; the
    result must not depend on it, which the test suite verifies.  The
    override also disables the vectorized fast paths, forcing the
    reference fold.
    """
    if family.m != space.m:
        raise ValueError(
            f"hash family domain {family.m} does not match witness count {space.m}"
        )
    if not _kinds_match(spec, space):
        raise TypeError(
            f"monoid kind {spec.kind.value} does not match space carrier {space.kind.value}"
        )
    header = EncodingHeader(
        spec=spec,
        seed=family.seed,
        K=family.K,
        m=family.m,
        n=family.n,
        space_fingerprint=space.fingerprint(),
    )

    n = family.n
    if witness_order is None:
        if spec.kind is MonoidKind.BOOLEAN and hasattr(space, "support_ids"):
            return Encoding(header, _encode_boolean_sparse(space, family, x))
        if spec.kind is MonoidKind.TROPICAL and hasattr(space, "values_array"):
            return Encoding(header, _encode_tropical_dense(space, family, x))
        if spec.kind is MonoidKind.REAL and hasattr(space, "values_array"):
            return Encoding(header, _encode_real_dense(space, family, x))

    values = dict(space.witness_values(x))
    order = sorted(values) if witness_order is None else witness_order
    buckets = [identity(spec)] * n
    seen = 0
    for i in order:
        if i not in values:
            continue
        seen += 1
        v = values[i]
        for j in family.buckets_of(i):
            buckets[j] = combine(spec, buckets[j], v)
    if witness_order is not None and seen != len(values):
        raise ValueError("witness_order must cover every witness index once")
    return Encoding(header, _to_arrays(spec, buckets))


def _encode_boolean_sparse(space, family: HashFamily, x) -> np.ndarray:
    ids = space.support_ids(x)
    buckets = np.zeros(family.n, dtype=bool)
    if ids.size:
        for k in range(family.K):
            buckets[family.eval_block(k, ids).astype(np.int64)] = True
    buckets.setflags(write=False)
    return buckets


def _encode_tropical_dense(space, family: HashFamily, x) -> np.ndarray:
    vals = np.asarray(space.values_array(x), dtype=np.float64)
    buckets = np.full(family.n, np.inf)
    table = family.bucket_table.astype(np.int64)
    for k in range(family.K):
        np.minimum.at(buckets, table[k], vals)
    buckets.setflags(write=False)
    return buckets


def _encode_real_dense(space, family: HashFamily, x) -> np.ndarray:
    # one pass per hash function; a witness whose bucket under k repeats
    # an earlier function's bucket is masked out (distinct-bucket rule)
    vals = np.asarray(space.values_array(x), dtype=np.float64)
    buckets = np.zeros(family.n)
    table = family.bucket_table.astype(np.int64)
    for k in range(family.K):
        if k == 0:
            fresh = slice(None)
        else:
            dup = np.zeros(space.m, dtype=bool)
            for j in range(k):
                dup |= table[j] == table[k]
            fresh = ~dup
        np.add.at(buckets, table[k][fresh], vals[fresh])
    buckets.setflags(write=False)
    return buckets


def _to_arrays(spec: MonoidSpec, buckets: list):
    if spec.kind is MonoidKind.BOOLEAN:
        out = np.array(buckets, dtype=bool)
    elif spec.kind is MonoidKind.NATURAL:
        out = np.array(buckets, dtype=np.uint64)
    elif spec.kind in (MonoidKind.REAL, MonoidKind.TROPICAL):
        out = np.array(buckets, dtype=np.float64)
    else:
        left = _to_arrays(spec.children[0], [b[0] for b in buckets])
        right = _to_arrays(spec.children[1], [b[1] for b in buckets])
        return (left, right)
    out.setflags(write=False)
    return out


# ---------------------------------------------------------------------------
# Serialization


def _pack_spec(spec: MonoidSpec) -> bytes:
    out = bytearray([_KIND_IDS[spec.kind]])
    if spec.kind is MonoidKind.NATURAL:
        if spec.clip is None:
            out.append(0)
        else:
            out.append(1)
            out += struct.pack("<Q", spec.clip)
    elif spec.kind is MonoidKind.TROPICAL:
        out += struct.pack("<d", spec.diameter)
    elif spec.kind is MonoidKind.PRODUCT:
        out += struct.pack("<dd", *spec.weights)
        out += _pack_spec(spec.children[0])
        out += _pack_spec(spec.children[1])
    return bytes(out)


def _payload_bytes(spec: MonoidSpec, buckets) -> bytes:
    if spec.kind is MonoidKind.BOOLEAN:
        return np.packbits(buckets, bitorder="little").tobytes()
    if spec.kind is MonoidKind.NATURAL:
        return np.asarray(buckets, dtype="<u8").tobytes()
    if spec.kind in (MonoidKind.REAL, MonoidKind.TROPICAL):
        return np.asarray(buckets, dtype="<f8").tobytes()
    return _payload_bytes(spec.children[0], buckets[0]) + _payload_bytes(
        spec.children[1], buckets[1]
    )


def serialize(enc: Encoding) -> bytes:
    h = enc.header
    out = bytearray()
    out += MAGIC
    out += struct.pack("<H", VERSION)
    out += _pack_spec(h.spec)
    out += struct.pack("<QIQQQ", h.seed, h.K, h.m, h.n, h.space_fingerprint)
    out += _payload_bytes(h.spec, enc.buckets)
    return bytes(out)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, count: int, what: str) -> bytes:
        if self.offset + count > len(self.data):
            raise FormatError(f"truncated while reading {what}", self.offset)
        chunk = self.data[self.offset : self.offset + count]
        self.offset += count
        return chunk

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def _unpack_spec(r: _Reader) -> MonoidSpec:
    at = r.offset
    (kind_id,) = r.unpack("<B", "monoid kind")
    if kind_id not in _IDS_KIND:
        raise FormatError(f"unknown monoid kind id {kind_id}", at)
    kind = _IDS_KIND[kind_id]
    if kind is MonoidKind.NATURAL:
        (flag,) = r.unpack("<B", "clip flag")
        clip = r.unpack("<Q", "clip bound")[0] if flag else None
        return MonoidSpec(kind, clip=clip)
    if kind is MonoidKind.TROPICAL:
        (d,) = r.unpack("<d", "diameter")
        return MonoidSpec(kind, diameter=d)
    if kind is MonoidKind.PRODUCT:
        w1, w2 = r.unpack("<dd", "product weights")
        c1 = _unpack_spec(r)
        c2 = _unpack_spec(r)
        return MonoidSpec(kind, children=(c1, c2), weights=(w1, w2))
    return MonoidSpec(kind)


def _unpack_payload(r: _Reader, spec: MonoidSpec, n: int):
    if spec.kind is MonoidKind.BOOLEAN:
        raw = r.take((n + 7) // 8, "boolean payload")
        bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")
        out = bits[:n].astype(bool)
    elif spec.kind is MonoidKind.NATURAL:
        out = np.frombuffer(r.take(8 * n, "natural payload"), dtype="<u8").astype(
            np.uint64
        )
    elif spec.kind in (MonoidKind.REAL, MonoidKind.TROPICAL):
        out = np.frombuffer(r.take(8 * n, "float payload"), dtype="<f8").astype(
            np.float64
        )
    else:
        left = _unpack_payload(r, spec.children[0], n)
        right = _unpack_payload(r, spec.children[1], n)
        return (left, right)
    out.setflags(write=False)
    return out


def deserialize(data: bytes) -> Encoding:
    r = _Reader(data)
    if r.take(4, "magic") != MAGIC:
        raise FormatError("bad magic", 0)
    (version,) = r.unpack("<H", "version")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", 4)
    spec = _unpack_spec(r)
    seed, K, m, n, fingerprint = r.unpack("<QIQQQ", "header fields")
    header = EncodingHeader(
        spec=spec, seed=seed, K=K, m=m, n=n, space_fingerprint=fingerprint
    )
    buckets = _unpack_payload(r, spec, n)
    if r.offset != len(data):
        raise FormatError("trailing bytes after payload", r.offset)
    return Encoding(header, buckets)


def write_encoding_stream(f: BinaryIO, encodings: Iterable[Encoding]) -> None:
    """Concatenate framed records: u32 length prefix per encoding."""
    for enc in encodings:
        blob = serialize(enc)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)


def read_encoding_stream(f: BinaryIO) -> list[Encoding]:
    out = []
    base = 0
    while True:
        prefix = f.read(4)
        if not prefix:
            return out
        if len(prefix) < 4:
            raise FormatError("truncated record length", base)
        (length,) = struct.unpack("<I", prefix)
        blob = f.read(length)
        if len(blob) < length:
            raise FormatError("truncated record body", base + 4 + len(blob))
        out.append(deserialize(blob))
        base += 4 + length


def nonidentity_bucket_count(enc: Encoding) -> int:
    """Number of buckets differing from the fold identity."""
    return _count_nonidentity(enc.header.spec, enc.buckets)


def _count_nonidentity(spec: MonoidSpec, buckets) -> int:
    if spec.kind is MonoidKind.BOOLEAN:
        return int(np.count_nonzero(buckets))
    if spec.kind is MonoidKind.NATURAL:
        return int(np.count_nonzero(buckets))
    if spec.kind is MonoidKind.REAL:
        return int(np.count_nonzero(buckets != 0.0))
    if spec.kind is MonoidKind.TROPICAL:
        return int(np.count_nonzero(buckets != math.inf))
    # a product bucket is non-identity if either component is
    mask1 = _nonidentity_mask(spec.children[0], buckets[0])
    mask2 = _nonidentity_mask(spec.children[1], buckets[1])
    return int(np.count_nonzero(mask1 | mask2))


def _nonidentity_mask(spec: MonoidSpec, buckets) -> np.ndarray:
    if spec.kind is MonoidKind.BOOLEAN:
        return np.asarray(buckets, dtype=bool)
    if spec.kind is MonoidKind.NATURAL:
        return np.asarray(buckets) != 0
    if spec.kind is MonoidKind.REAL:
        return np.asarray(buckets) != 0.0
    if spec.kind is MonoidKind.TROPICAL:
        return np.asarray(buckets) != math.inf
    return _nonidentity_mask(spec.children[0], buckets[0]) | _nonidentity_mask(
        spec.children[1], buckets[1]
    )
