"""Experiment configuration: a flat dataclass mirrored one-to-one by
the key=value config-file format (`#` starts a comment).
"""

from __future__ import annotations

import typing
from dataclasses import dataclass, fields

INSTANTIATIONS = ("boolean", "natural", "real", "tropical", "product")
METHODS = ("bloom", "minhash", "countmin", "rff")

_DEFAULT_GRID = tuple(range(16, 4097, 16))


@dataclass(frozen=True)
class ExperimentConfig:
    # which carrier the ranking experiments run on
    instantiation: str = "boolean"

    # planted-dataset parameters
    N: int = 256
    N_list: tuple[int, ...] = ()
    universe: int = 200_000
    base_size: int = 64
    overlap_hi: int = 32
    overlap_lo: int = 8
    queries: int = 8
    # random unit vectors concentrate near zero cosine at width ~1/sqrt(d);
    # the default keeps cross-group rivals clear of the planted band
    vector_d: int = 64
    features: int = 1024
    bandwidth: float = 1.0
    gap_cosine: float = 0.3
    graph_V: int = 320
    graph_E: int = 960
    landmarks: int = 16
    diameter: float = 32.0
    count_clip: int = 8
    weights: tuple[float, float] = (0.5, 0.5)
    gap_levels: tuple[int, ...] = (32, 16, 8)

    # encoding and trial knobs
    n_grid: tuple[int, ...] = _DEFAULT_GRID
    K: int = 2
    trials: int = 30
    k: int = 1
    delta_target: float = 0.05
    cal_pairs: int = 50
    cal_seeds: int = 200
    seed: int = 0

    # equivalence subcommand
    method: str = "bloom"

    # report destination (CLI --out overrides)
    out: str = "reports"

    def __post_init__(self):
        if self.instantiation not in INSTANTIATIONS:
            raise ValueError(
                f"instantiation must be one of {INSTANTIATIONS}, got {self.instantiation!r}"
            )
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if any(b <= a for a, b in zip(self.N_list, self.N_list[1:])):
            raise ValueError("N_list must be strictly ascending")
        if any(N < 2 for N in self.N_list):
            raise ValueError("N_list entries must be at least 2")
        if not self.n_grid:
            raise ValueError("n_grid must be nonempty")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ValueError("n_grid must be strictly ascending")
        if any(n < 1 for n in self.n_grid):
            raise ValueError("n_grid entries must be positive")
        if self.trials < 30:
            raise ValueError("trials must be at least 30")
        if not (0.0 < self.delta_target < 1.0):
            raise ValueError("delta_target must lie in (0, 1)")
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if self.queries < 1:
            raise ValueError("queries must be at least 1")
        if self.N < 2:
            raise ValueError("N must be at least 2")
        if self.cal_pairs < 2 or self.cal_seeds < 2:
            raise ValueError("calibration needs at least 2 pairs and 2 seeds")
        if not (0 <= self.seed < 1 << 64):
            raise ValueError("seed must fit in 64 bits")


def _int_parts(name: str, parts: list[str]) -> tuple[int, ...]:
    """Expand a comma-split integer list, allowing start:stop:step ranges.

    Ranges follow Python semantics (stop exclusive), so `16:2049:8` is
    the grid 16, 24, ..., 2048 without spelling out 254 values.
    """
    out: list[int] = []
    for part in parts:
        if ":" not in part:
            out.append(int(part))
            continue
        pieces = [int(q) for q in part.split(":")]
        if len(pieces) not in (2, 3):
            raise ValueError(
                f"{name}: ranges are start:stop or start:stop:step, got {part!r}"
            )
        out.extend(range(*pieces))
    return tuple(out)


def _coerce(name: str, hint, raw: str):
    origin = typing.get_origin(hint)
    if origin is tuple:
        args = typing.get_args(hint)
        parts = [p.strip() for p in raw.split(",") if p.strip()]
        if args[-1] is Ellipsis:
            elem = args[0]
            if elem is int:
                return _int_parts(name, parts)
            return tuple(elem(p) for p in parts)
        if len(parts) != len(args):
            raise ValueError(f"{name} expects {len(args)} comma-separated values")
        return tuple(t(p) for t, p in zip(args, parts))
    if hint is int:
        return int(raw, 0)
    if hint is float:
        return float(raw)
    if hint is str:
        return raw
    raise ValueError(f"unsupported config field type for {name}")  # pragma: no cover


def config_from_text(text: str, **overrides) -> ExperimentConfig:
    """Parse key=value lines into an ExperimentConfig.

    Keys must name dataclass fields; unknown keys are an error rather
    than silently ignored.  Integer-list fields (n_grid, N_list,
    gap_levels) accept start:stop:step ranges alongside plain values.
    `overrides` (e.g. CLI --seed/--out) win over file values.
    """
    hints = typing.get_type_hints(ExperimentConfig)
    known = {f.name for f in fields(ExperimentConfig)}
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"line {lineno}: expected key=value, got {line!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in known:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        try:
            values[key] = _coerce(key, hints[key], raw)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: bad value for {key}: {exc}") from exc
    values.update(overrides)
    return ExperimentConfig(**values)
