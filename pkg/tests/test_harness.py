"""Harness plumbing: config parsing, report emission, the bulk Boolean
scatter path, the experiment runners at small sizes, and the CLI
contract (exit codes, files written, stdout format, determinism).
"""

import json
import subprocess
import sys

import numpy as np
import pytest

from rewa.encoder import encode
from rewa.harness.config import ExperimentConfig, config_from_text
from rewa.harness.equivalence import run_equivalence
from rewa.harness.failure import run_failure_modes
from rewa.harness.hybrid import run_hybrid
from rewa.harness.ranking import (
    _flatten_idsets,
    run_calibration,
    run_gap_sweep,
    run_ranking,
    run_scaling,
    scatter_boolean_matrix,
)
from rewa.harness.reports import (
    CSV_HEADER,
    csv_bytes,
    report_json_bytes,
    write_report,
)
from rewa.harness.selftest import run_selftest
from rewa.hashing import HashFamily
from rewa.monoids import boolean_monoid
from rewa.witnesses import BooleanSetSpace

# small but valid (trials must stay >= 30) boolean ranking setup
SMALL = dict(
    N=32,
    universe=20_000,
    base_size=16,
    overlap_hi=8,
    overlap_lo=2,
    queries=4,
    n_grid=tuple(range(16, 257, 16)),
    cal_pairs=12,
    cal_seeds=40,
)


class TestConfigParsing:
    def test_comments_blanks_and_spacing(self):
        cfg = config_from_text(
            """
            # planted-set shape
            N = 64   # inline comment
            overlap_hi=16

            seed = 0x10
            """
        )
        assert cfg.N == 64
        assert cfg.overlap_hi == 16
        assert cfg.seed == 16

    def test_tuple_fields(self):
        cfg = config_from_text("n_grid = 16, 32, 64\nweights = 0.4, 0.6\nN_list = 8,16")
        assert cfg.n_grid == (16, 32, 64)
        assert cfg.weights == (0.4, 0.6)
        assert cfg.N_list == (8, 16)

    def test_fixed_tuple_arity_enforced(self):
        with pytest.raises(ValueError, match="weights"):
            config_from_text("weights = 0.2, 0.3, 0.5")

    def test_range_shorthand_in_integer_lists(self):
        cfg = config_from_text("n_grid = 16:81:16, 128\nN_list = 32:257:32")
        assert cfg.n_grid == (16, 32, 48, 64, 80, 128)
        assert cfg.N_list == tuple(range(32, 257, 32))

    def test_range_shorthand_defaults_to_step_one(self):
        assert config_from_text("gap_levels = 5:1:-1").gap_levels == (5, 4, 3, 2)
        assert config_from_text("n_grid = 3:6").n_grid == (3, 4, 5)

    def test_range_shorthand_rejects_extra_colons(self):
        with pytest.raises(ValueError, match="line 1.*start:stop"):
            config_from_text("n_grid = 1:2:3:4")

    def test_range_shorthand_not_available_for_floats(self):
        with pytest.raises(ValueError, match="line 1"):
            config_from_text("weights = 0:2")

    def test_unknown_key_is_an_error_with_line_number(self):
        with pytest.raises(ValueError, match="line 2"):
            config_from_text("N = 8\nrate = 0.5\n")

    def test_bad_value_reports_line(self):
        with pytest.raises(ValueError, match="line 1"):
            config_from_text("N = eight")

    def test_missing_equals_rejected(self):
        with pytest.raises(ValueError, match="key=value"):
            config_from_text("just words\n")

    def test_overrides_beat_file_values(self):
        cfg = config_from_text("seed = 5\nout = from_file\n", seed=9, out="elsewhere")
        assert cfg.seed == 9
        assert cfg.out == "elsewhere"

    @pytest.mark.parametrize(
        "kw",
        [
            dict(trials=29),
            dict(n_grid=(32, 16)),
            dict(n_grid=()),
            dict(n_grid=(0, 16)),
            dict(N_list=(64, 64)),
            dict(N_list=(64, 32)),
            dict(N_list=(1, 32)),
            dict(instantiation="fuzzy"),
            dict(method="simhash"),
            dict(delta_target=0.0),
            dict(delta_target=1.0),
            dict(N=1),
            dict(k=0),
            dict(K=0),
            dict(queries=0),
            dict(cal_seeds=1),
            dict(seed=1 << 64),
            dict(seed=-1),
        ],
    )
    def test_invalid_configs_rejected(self, kw):
        with pytest.raises(ValueError):
            ExperimentConfig(**kw)


class TestReports:
    def test_json_bytes_are_sorted_and_ascii(self):
        blob = report_json_bytes({"zeta": 1, "alpha": float("inf"), "mid": float("nan")})
        text = blob.decode("ascii")
        assert text.endswith("\n")
        doc = json.loads(text)
        assert doc["alpha"] == "inf"
        assert doc["mid"] == "nan"
        assert list(doc) == sorted(doc)
        assert doc["schema_version"] == 1

    def test_json_bytes_deterministic(self):
        report = {"b": [1.5, 2.25], "a": {"nested": (1, 2)}}
        assert report_json_bytes(report) == report_json_bytes(report)

    def test_csv_header_and_float_repr(self):
        blob = csv_bytes([(256, 16, 0.96875), (256, 32, 1.0)])
        lines = blob.decode("ascii").splitlines()
        assert lines[0] == CSV_HEADER == "N,n,success_rate"
        assert lines[1] == "256,16,0.96875"
        assert lines[2] == "256,32,1.0"

    def test_write_report_creates_both_files(self, tmp_path):
        out = tmp_path / "nested" / "dir"
        jp, cp = write_report(out, "ranking", {"x": 1}, [(8, 16, 1.0)])
        assert jp == out / "ranking.json"
        assert cp == out / "ranking.csv"
        assert jp.exists() and cp.exists()


class TestScatterMatrix:
    def test_matches_canonical_encoder(self):
        universe = 500
        items = [(1, 40, 200), (7,), (), (3, 3, 499)]
        items = [tuple(sorted(set(s))) for s in items]
        family = HashFamily(seed=5, K=3, m=universe, n=64)
        space = BooleanSetSpace(universe)
        mat = scatter_boolean_matrix(*_flatten_idsets(items), len(items), family)
        for row, item in zip(mat, items):
            enc = encode(space, family, boolean_monoid(), item)
            assert np.array_equal(row, enc.buckets)

    def test_precomputed_residues_change_nothing(self):
        universe = 300
        items = [(2, 9, 150), (0, 299)]
        flat, rows = _flatten_idsets(items)
        family = HashFamily(seed=8, K=2, m=universe, n=48)
        residues = np.stack([family.residue_block(k, flat) for k in range(2)])
        direct = scatter_boolean_matrix(flat, rows, len(items), family)
        via_residues = scatter_boolean_matrix(flat, rows, len(items), family, residues)
        assert np.array_equal(direct, via_residues)


class TestRunners:
    def test_ranking_small_boolean(self):
        cfg = ExperimentConfig(**SMALL)
        report, rows = run_ranking(cfg)
        assert report["experiment"] == "ranking"
        assert report["reached"] is True
        assert report["minimal_n"] in cfg.n_grid
        point = next(p for p in report["grid"] if p["n"] == report["minimal_n"])
        assert point["success_rate"] >= 1.0 - cfg.delta_target
        assert report["calibration"]["alpha"] > 0
        ns = [p["n"] for p in report["grid"]]
        assert ns == sorted(ns)
        assert all(N == cfg.N and 0.0 <= rate <= 1.0 for N, _n, rate in rows)

    def test_ranking_is_deterministic(self):
        cfg = ExperimentConfig(**SMALL)
        a, rows_a = run_ranking(cfg)
        b, rows_b = run_ranking(cfg)
        assert report_json_bytes(a) == report_json_bytes(b)
        assert csv_bytes(rows_a) == csv_bytes(rows_b)

    def test_scaling_nested_minimal_n_is_monotone(self):
        # nested corpora + shared trial seeds make success at larger N a
        # sub-event of success at smaller N, so minimal n cannot drop
        cfg = ExperimentConfig(**{**SMALL, "N": 256, "N_list": (32, 64, 128)})
        report, rows = run_scaling(cfg)
        per_n = {e["N"]: e for e in report["per_N"]}
        assert set(per_n) == {32, 64, 128}
        reached = [e["minimal_n"] for e in report["per_N"] if e["reached"]]
        assert all(a <= b for a, b in zip(reached, reached[1:]))
        assert {N for N, _, _ in rows} == {32, 64, 128}

    def test_scaling_requires_n_list(self):
        with pytest.raises(ValueError, match="N_list"):
            run_scaling(ExperimentConfig(**SMALL))

    def test_scaling_single_reached_point_omits_fit(self):
        cfg = ExperimentConfig(
            **{**SMALL, "N_list": (32,), "n_grid": tuple(range(16, 129, 16))}
        )
        report, _ = run_scaling(cfg)
        assert report["log_N_fit"]["omitted"] is True

    def test_gap_sweep_orders_levels(self):
        cfg = ExperimentConfig(**{**SMALL, "base_size": 32, "gap_levels": (12, 6)})
        report, _ = run_gap_sweep(cfg)
        assert [e["gap"] for e in report["levels"]] == [12.0, 6.0]
        assert isinstance(report["monotone_minimal_n"], bool)

    def test_calibration_small(self):
        cfg = ExperimentConfig(**SMALL)
        report, _ = run_calibration(cfg)
        assert report["calibration_n"] == max(cfg.n_grid)
        assert 0.0 <= report["calibration"]["r_squared"] <= 1.0

    def test_selftest_passes(self):
        report, rows = run_selftest(ExperimentConfig())
        assert report["passed"] is True
        assert report["degraded_detected"] is True
        assert rows == []

    def test_equivalence_countmin_never_underestimates(self):
        report, _ = run_equivalence(ExperimentConfig(method="countmin"))
        assert report["underestimates"] == 0
        assert report["passed"] is True

    def test_hybrid_cannot_separate_with_one_bucket(self):
        # a single bucket gives every item the same encoding, so the
        # combined ranking cannot beat the channels and the check fails
        cfg = ExperimentConfig(
            instantiation="product",
            N=12,
            universe=20_000,
            base_size=32,
            queries=2,
            n_grid=(1,),
        )
        report, _ = run_hybrid(cfg)
        assert report["passed"] is False

    def test_failure_modes_small(self):
        cfg = ExperimentConfig(
            **{
                **SMALL,
                "base_size": 32,
                "overlap_hi": 24,
                "gap_levels": (16, 8),
                "n_grid": tuple(range(16, 513, 16)),
            }
        )
        report, _ = run_failure_modes(cfg)
        assert report["median_order_dependent"] is True
        assert report["median_distinct_encodings"] >= 2
        assert report["addition_order_independent"] is True
        # the sweep always appends the vanishing-gap level
        assert 1.0 in [e["gap"] for e in report["gap_sweep"]["levels"]]


def _rewa(*argv, cwd):
    return subprocess.run(
        [sys.executable, "-m", "rewa.cli", *argv],
        capture_output=True,
        text=True,
        cwd=cwd,
        timeout=300,
    )


@pytest.fixture
def small_config(tmp_path):
    lines = []
    for key, value in SMALL.items():
        if isinstance(value, tuple):
            lines.append(f"{key} = {', '.join(str(v) for v in value)}")
        else:
            lines.append(f"{key} = {value}")
    path = tmp_path / "small.cfg"
    path.write_text("\n".join(lines) + "\n")
    return path


class TestCli:
    def test_selftest_writes_reports_and_exits_zero(self, tmp_path):
        res = _rewa("selftest", "--out", "r1", cwd=tmp_path)
        assert res.returncode == 0, res.stderr
        doc = json.loads(res.stdout)
        assert doc["passed"] is True
        assert (tmp_path / "r1" / "selftest.json").exists()
        assert (tmp_path / "r1" / "selftest.csv").exists()
        assert (tmp_path / "r1" / "selftest.json").read_text() == res.stdout

    def test_csv_format_echoes_csv(self, tmp_path, small_config):
        res = _rewa(
            "ranking", "--config", str(small_config), "--out", "r2",
            "--format", "csv", cwd=tmp_path,
        )
        assert res.returncode == 0, res.stderr
        assert res.stdout.splitlines()[0] == "N,n,success_rate"
        assert (tmp_path / "r2" / "ranking.json").exists()

    def test_rerun_into_same_out_is_byte_identical(self, tmp_path):
        first = _rewa("selftest", "--out", "r3", "--seed", "7", cwd=tmp_path)
        blob1 = (tmp_path / "r3" / "selftest.json").read_bytes()
        second = _rewa("selftest", "--out", "r3", "--seed", "7", cwd=tmp_path)
        blob2 = (tmp_path / "r3" / "selftest.json").read_bytes()
        assert first.returncode == second.returncode == 0
        assert blob1 == blob2
        assert first.stdout == second.stdout

    def test_missing_config_file_exits_two(self, tmp_path):
        res = _rewa("selftest", "--config", "absent.cfg", cwd=tmp_path)
        assert res.returncode == 2
        assert "invalid input" in res.stderr

    def test_bad_seed_exits_two(self, tmp_path):
        res = _rewa("selftest", "--seed", "-1", cwd=tmp_path)
        assert res.returncode == 2

    def test_bad_config_value_exits_two(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text("trials = 5\n")
        res = _rewa("selftest", "--config", str(bad), cwd=tmp_path)
        assert res.returncode == 2
        assert "trials" in res.stderr

    def test_failing_check_exits_one(self, tmp_path):
        cfg = tmp_path / "hybrid.cfg"
        cfg.write_text(
            "instantiation = product\nN = 12\nuniverse = 20000\n"
            "base_size = 32\nqueries = 2\nn_grid = 1\n"
        )
        res = _rewa("hybrid", "--config", str(cfg), "--out", "r4", cwd=tmp_path)
        assert res.returncode == 1
        assert json.loads(res.stdout)["passed"] is False

    def test_unknown_subcommand_exits_two(self, tmp_path):
        res = _rewa("frobnicate", cwd=tmp_path)
        assert res.returncode == 2
