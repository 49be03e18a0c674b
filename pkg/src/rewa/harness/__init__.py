"""Experiment harness: planted-ranking studies, classic-sketch
equivalence checks, failure-mode demonstrations, and deterministic
report emission.  The CLI in `rewa.cli` is a thin wrapper over the
`run_*` entry points here.
"""

from .config import ExperimentConfig, config_from_text
from .equivalence import run_equivalence
from .failure import run_failure_modes
from .hybrid import run_hybrid
from .ranking import run_calibration, run_gap_sweep, run_ranking, run_scaling
from .reports import SCHEMA_VERSION, write_report

__all__ = [
    "ExperimentConfig",
    "SCHEMA_VERSION",
    "config_from_text",
    "run_calibration",
    "run_equivalence",
    "run_failure_modes",
    "run_gap_sweep",
    "run_hybrid",
    "run_ranking",
    "run_scaling",
    "write_report",
]
