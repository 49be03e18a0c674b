"""Monoid algebras: carriers, the fold operation, identities, and the
bucket-level scalar similarity phi.

Five kinds are compiled in:

    BOOLEAN   bits,            fold = OR,              phi = AND
    NATURAL   u64 counters,    fold = saturating +,    phi = min
    REAL      float64,         fold = +,               phi = product
    TROPICAL  [0, D] + {inf},  fold = min,             phi = -(a + b), args clamped to D
    PRODUCT   pairs,           fold/phi component-wise, phi weighted by (w1, w2)

All folds are associative *and* commutative (exact for the integer-like
carriers, to float rounding for REAL), so bucket contents never depend on
collision processing order.  Tropical phi clamps each argument to the
diameter bound D before summing: that keeps phi finite and bounded in
[-2D, 0] even at the identity +inf ("no witness reaches this bucket"
scores as maximally far).

The c_m attribute is a reference constant surfaced in experiment reports;
it never gates any computation.

Adding a kind means extending the enum and the four dispatch functions
below; elements are plain Python values (int / float / pair), not wrapped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

U64_MAX = (1 << 64) - 1


class MonoidKind(Enum):
    BOOLEAN = "boolean"
    NATURAL = "natural"
    REAL = "real"
    TROPICAL = "tropical"
    PRODUCT = "product"


# reference constants per kind, emitted in reports only
_C_M = {
    MonoidKind.BOOLEAN: 8,
    MonoidKind.NATURAL: 16,
    MonoidKind.REAL: 32,
    MonoidKind.TROPICAL: 64,
}


@dataclass(frozen=True)
class MonoidSpec:
    """Algebra descriptor.  Immutable; all element operations are pure.

    kind-specific params: `clip` (NATURAL, optional magnitude bound for
    clipped witness spaces, metadata only), `diameter` (TROPICAL, the
    clamp bound D for phi), `children` + `weights` (PRODUCT).
    """

    kind: MonoidKind
    clip: Optional[int] = None
    diameter: Optional[float] = None
    children: Optional[tuple["MonoidSpec", "MonoidSpec"]] = None
    weights: Optional[tuple[float, float]] = None

    def __post_init__(self) -> None:
        if self.kind is MonoidKind.TROPICAL:
            if self.diameter is None or not (self.diameter > 0) or math.isinf(self.diameter):
                raise ValueError("tropical spec requires a finite diameter > 0")
        if self.kind is MonoidKind.PRODUCT:
            if self.children is None or self.weights is None:
                raise ValueError("product spec requires children and weights")
        if self.clip is not None and self.clip < 1:
            raise ValueError("clip bound must be >= 1")

    @property
    def c_m(self) -> int:
        if self.kind is MonoidKind.PRODUCT:
            # no tabulated constant for products; report the conservative max
            return max(c.c_m for c in self.children)
        return _C_M[self.kind]


def boolean_monoid() -> MonoidSpec:
    return MonoidSpec(MonoidKind.BOOLEAN)


def natural_monoid(clip: Optional[int] = None) -> MonoidSpec:
    return MonoidSpec(MonoidKind.NATURAL, clip=clip)


def real_monoid() -> MonoidSpec:
    return MonoidSpec(MonoidKind.REAL)


def tropical_monoid(diameter: float) -> MonoidSpec:
    return MonoidSpec(MonoidKind.TROPICAL, diameter=float(diameter))


def product_monoid(
    spec1: MonoidSpec, spec2: MonoidSpec, w1: float, w2: float
) -> MonoidSpec:
    """Component-wise product algebra with phi = w1*phi1 + w2*phi2."""
    if w1 < 0 or w2 < 0:
        raise ValueError("weights must be nonnegative")
    if w1 + w2 <= 0:
        raise ValueError("at least one weight must be positive")
    return MonoidSpec(
        MonoidKind.PRODUCT, children=(spec1, spec2), weights=(float(w1), float(w2))
    )


def _check_boolean(x) -> int:
    if isinstance(x, bool):
        return int(x)
    if isinstance(x, int) and x in (0, 1):
        return x
    raise TypeError(f"boolean element must be 0 or 1, got {x!r}")


def _check_natural(x) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise TypeError(f"natural element must be an int, got {x!r}")
    if not 0 <= x <= U64_MAX:
        raise TypeError(f"natural element out of u64 range: {x}")
    return x


def _check_real(x) -> float:
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        x = float(x)
        if math.isfinite(x):
            return x
    raise TypeError(f"real element must be a finite float, got {x!r}")


def _check_tropical(x) -> float:
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        x = float(x)
        if x >= 0 and not math.isnan(x):
            return x
    raise TypeError(f"tropical element must be a nonnegative float or +inf, got {x!r}")


def identity(spec: MonoidSpec):
    """The neutral element e of the fold."""
    if spec.kind is MonoidKind.BOOLEAN:
        return 0
    if spec.kind is MonoidKind.NATURAL:
        return 0
    if spec.kind is MonoidKind.REAL:
        return 0.0
    if spec.kind is MonoidKind.TROPICAL:
        return math.inf
    return (identity(spec.children[0]), identity(spec.children[1]))


def combine(spec: MonoidSpec, a, b):
    """Fold two elements; associative and commutative for every kind."""
    if spec.kind is MonoidKind.BOOLEAN:
        return _check_boolean(a) | _check_boolean(b)
    if spec.kind is MonoidKind.NATURAL:
        return min(_check_natural(a) + _check_natural(b), U64_MAX)
    if spec.kind is MonoidKind.REAL:
        return _check_real(a) + _check_real(b)
    if spec.kind is MonoidKind.TROPICAL:
        return min(_check_tropical(a), _check_tropical(b))
    _check_pair(a)
    _check_pair(b)
    s1, s2 = spec.children
    return (combine(s1, a[0], b[0]), combine(s2, a[1], b[1]))


def phi(spec: MonoidSpec, a, b) -> float:
    """Bucket-level scalar similarity; symmetric in its arguments."""
    if spec.kind is MonoidKind.BOOLEAN:
        return float(_check_boolean(a) & _check_boolean(b))
    if spec.kind is MonoidKind.NATURAL:
        return float(min(_check_natural(a), _check_natural(b)))
    if spec.kind is MonoidKind.REAL:
        return _check_real(a) * _check_real(b)
    if spec.kind is MonoidKind.TROPICAL:
        d = spec.diameter
        return -(min(_check_tropical(a), d) + min(_check_tropical(b), d))
    _check_pair(a)
    _check_pair(b)
    s1, s2 = spec.children
    w1, w2 = spec.weights
    return w1 * phi(s1, a[0], b[0]) + w2 * phi(s2, a[1], b[1])


def _check_pair(x) -> None:
    if not (isinstance(x, tuple) and len(x) == 2):
        raise TypeError(f"product element must be a 2-tuple, got {x!r}")


def is_neutral(spec: MonoidSpec, x) -> bool:
    """True iff folding x is a no-op (x equals the identity)."""
    if spec.kind is MonoidKind.PRODUCT:
        return is_neutral(spec.children[0], x[0]) and is_neutral(spec.children[1], x[1])
    return x == identity(spec)
