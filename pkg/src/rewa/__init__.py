"""Monoid-parameterized similarity sketches.

Items are viewed through m witness functions into a commutative monoid,
hashed into n buckets by K 4-wise independent hash functions, and folded
bucket-wise with the monoid operation.  Bucket-wise kernels then give a
similarity whose expectation is affine in the ideal (hash-free) overlap,
which is what makes Bloom filters, MinHash, Count-Min, and random
Fourier features instances of one construction.
"""

from .datagen import (
    GenerationError,
    PlantedDataset,
    dataset_from_overlaps,
    planted_hybrid,
    planted_sets,
    planted_vectors,
    random_graph,
    sample_landmarks,
    zipf_counts,
)
from .encoder import (
    Encoding,
    EncodingHeader,
    FormatError,
    IncompatibleEncodingError,
    deserialize,
    encode,
    read_encoding_stream,
    serialize,
    write_encoding_stream,
)
from .hashing import (
    DomainTooLargeError,
    HashFamily,
    derive_seed,
    fourwise_moment_test,
    pairwise_only_family,
)
from .monoids import (
    MonoidKind,
    MonoidSpec,
    boolean_monoid,
    combine,
    identity,
    natural_monoid,
    phi,
    product_monoid,
    real_monoid,
    tropical_monoid,
)
from .similarity import (
    Calibration,
    RankedList,
    calibrate,
    rank_by_score,
    rewa_similarity,
    softmax,
    topk,
)
from .witnesses import (
    BooleanSetSpace,
    CountSpace,
    FourierFeatureSpace,
    Graph,
    LandmarkDistanceSpace,
    PairedWitnessSpace,
    WitnessSpace,
    ideal_overlap,
    l2_normalize,
)

__version__ = "0.1.0"

__all__ = [
    "BooleanSetSpace",
    "Calibration",
    "CountSpace",
    "DomainTooLargeError",
    "Encoding",
    "EncodingHeader",
    "FormatError",
    "FourierFeatureSpace",
    "GenerationError",
    "Graph",
    "HashFamily",
    "IncompatibleEncodingError",
    "LandmarkDistanceSpace",
    "MonoidKind",
    "MonoidSpec",
    "PairedWitnessSpace",
    "PlantedDataset",
    "RankedList",
    "WitnessSpace",
    "boolean_monoid",
    "calibrate",
    "combine",
    "dataset_from_overlaps",
    "derive_seed",
    "deserialize",
    "encode",
    "fourwise_moment_test",
    "ideal_overlap",
    "identity",
    "l2_normalize",
    "natural_monoid",
    "pairwise_only_family",
    "phi",
    "planted_hybrid",
    "planted_sets",
    "planted_vectors",
    "product_monoid",
    "random_graph",
    "rank_by_score",
    "read_encoding_stream",
    "real_monoid",
    "rewa_similarity",
    "sample_landmarks",
    "serialize",
    "softmax",
    "topk",
    "tropical_monoid",
    "write_encoding_stream",
    "zipf_counts",
]
