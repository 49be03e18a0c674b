"""Demonstrations of the framework's stated requirements failing when
violated: a non-associative aggregator makes encodings depend on
witness processing order, and a vanishing planted gap blows up the
required encoding width.
"""

from __future__ import annotations

import hashlib
from dataclasses import replace

import numpy as np

from ..hashing import HashFamily, derive_seed
from ..monoids import MonoidKind
from ..witnesses import WitnessSpace
from .config import ExperimentConfig
from .ranking import run_gap_sweep
from .reports import config_dict

_PERMUTATIONS = 100


class _ScriptedSpace(WitnessSpace):
    """Dense real-valued space with hand-picked witness values; items
    are row indices into a fixed table."""

    kind = MonoidKind.REAL
    sparse = False

    def __init__(self, table: np.ndarray):
        self.table = np.asarray(table, dtype=np.float64)
        self.m = self.table.shape[1]
        self.bound = float(np.abs(self.table).max())

    def evaluate(self, i: int, x: int):
        self._check_index(i)
        return float(self.table[x, i])

    def witness_values(self, x: int):
        for i in range(self.m):
            yield i, float(self.table[x, i])

    def fingerprint(self) -> int:
        digest = hashlib.blake2b(self.table.tobytes(), digest_size=8).digest()
        return int.from_bytes(digest, "little")


def _fold(space, family, x, op, order):
    """Reference fold with an arbitrary binary op (distinct buckets per
    witness, like the encoder); `None` marks an empty bucket so ops
    without an identity can be exercised."""
    values = dict(space.witness_values(x))
    buckets: list = [None] * family.n
    for i in order:
        if i not in values:
            continue
        for j in family.buckets_of(i):
            buckets[j] = values[i] if buckets[j] is None else op(buckets[j], values[i])
    return tuple(0.0 if b is None else b for b in buckets)


def run_failure_modes(cfg: ExperimentConfig):
    """(report, rows): order-dependence of a midpoint aggregator, order
    independence of true addition, and the vanishing-gap sweep."""
    # geometric values make every fold order produce a distinct midpoint
    space = _ScriptedSpace(np.array([[1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0]]))
    family = HashFamily(derive_seed(cfg.seed, 71), K=1, m=space.m, n=2)
    rng = np.random.default_rng(derive_seed(cfg.seed, 72))

    def midpoint(a, b):
        # the running "median" of two values; commutative but not associative
        return (a + b) / 2.0

    def addition(a, b):
        return a + b

    mid_encodings = set()
    add_encodings = []
    for _ in range(_PERMUTATIONS):
        order = [int(i) for i in rng.permutation(space.m)]
        mid_encodings.add(_fold(space, family, 0, midpoint, order))
        add_encodings.append(np.array(_fold(space, family, 0, addition, order)))

    add_dev = float(
        max(
            np.abs(e - add_encodings[0]).max() / max(1.0, np.abs(add_encodings[0]).max())
            for e in add_encodings
        )
    )

    sweep_levels = cfg.gap_levels if 1 in cfg.gap_levels else (*cfg.gap_levels, 1)
    sweep_report, _ = run_gap_sweep(replace(cfg, gap_levels=sweep_levels))

    order_dependent = len(mid_encodings) >= 2
    add_independent = add_dev <= 1e-9
    report = {
        "experiment": "failure_modes",
        "config": config_dict(cfg),
        "median_distinct_encodings": len(mid_encodings),
        "median_order_dependent": order_dependent,
        "addition_max_rel_deviation": add_dev,
        "addition_order_independent": add_independent,
        "gap_sweep": {
            "levels": sweep_report["levels"],
            "monotone_minimal_n": sweep_report["monotone_minimal_n"],
            "exhausted_levels": sweep_report["exhausted_levels"],
        },
        "passed": order_dependent
        and add_independent
        and sweep_report["monotone_minimal_n"],
    }
    return report, []
