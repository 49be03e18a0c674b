"""Deterministic report emission.

A run produces one JSON document plus a flat (N, n, success_rate) CSV
for plotting.  Bytes depend only on (config, seed): keys are sorted, no
timestamps or environment details are recorded, and floats go through
repr (shortest round-trip form, stable across platforms for IEEE-754
doubles).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict
from pathlib import Path

SCHEMA_VERSION = 1

CSV_HEADER = "N,n,success_rate"


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return value
    return value


def report_json_bytes(report: dict) -> bytes:
    document = {"schema_version": SCHEMA_VERSION, **report}
    text = json.dumps(_jsonable(document), sort_keys=True, indent=2)
    return (text + "\n").encode("ascii")


def csv_bytes(rows) -> bytes:
    lines = [CSV_HEADER]
    for N, n, rate in rows:
        lines.append(f"{int(N)},{int(n)},{rate!r}")
    return ("\n".join(lines) + "\n").encode("ascii")


def config_dict(cfg) -> dict:
    """Config echo embedded in every report (tuples become lists)."""
    return asdict(cfg)


def write_report(out_dir, name: str, report: dict, rows=()) -> tuple[Path, Path]:
    """Write <name>.json and <name>.csv under out_dir; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    json_path = out / f"{name}.json"
    csv_path = out / f"{name}.csv"
    json_path.write_bytes(report_json_bytes(report))
    csv_path.write_bytes(csv_bytes(rows))
    return json_path, csv_path
