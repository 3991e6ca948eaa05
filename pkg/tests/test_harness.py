from __future__ import annotations

import csv
import io
import json
from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from predlab.cli import main, parse_prefix
from predlab.diagnostics import Thresholds
from predlab.errors import ConfigError
from predlab.harness import (
    CURVE_COLUMNS, VERDICT_COLUMNS, ExperimentConfig, ResultRecord, config_schema, curves_csv,
    fmt, plot_series, read_curves, report, run_scenario, verdicts_csv,
)
from predlab.scenarios import SCENARIOS, format_table, get_scenario, list_scenarios

FAST = "m_dependent_lagged"


@pytest.fixture(scope="module")
def fast_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("runs")
    record = run_scenario(ExperimentConfig(FAST, paths=2000, out=str(out)))
    return record, out / FAST


class TestConfig:
    def test_defaults(self):
        cfg = ExperimentConfig.from_dict({"scenario": "iid"})
        assert (cfg.seed, cfg.paths, cfg.workers, cfg.out) == (0, 10_000, 1, None)
        assert cfg.thresholds == Thresholds()

    @pytest.mark.parametrize("d", [
        {"scenario": "iid", "paths": 10},
        {"scenario": "iid", "seed": -1},
        {"scenario": "iid", "seed": 2**64},
        {"scenario": "iid", "workers": 0},
        {"scenario": "iid", "colour": "red"},
        {"paths": 100},
        {"scenario": "iid", "grids": {"star": [4, 2]}},
        {"scenario": "iid", "grids": [1, 2]},
        {"scenario": "iid", "thresholds": {"n_batches": 5}},
    ])
    def test_invalid(self, d):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(d)

    def test_paths_message(self):
        with pytest.raises(ConfigError, match="batching"):
            ExperimentConfig("triple", paths=10)

    @pytest.mark.parametrize("d", [
        {"scenario": "nope"},
        {"scenario": "iid", "grids": {"no_such_condition": [1, 2]}},
        {"scenario": "iid", "grids": {"qmc": [4, 20]}},
        {"scenario": "iid", "model": {"colour": 1}},
    ])
    def test_validate_rejects(self, d):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(d).validate()

    @given(st.integers(0, 2**64 - 1), st.integers(30, 10**6), st.integers(1, 8))
    def test_round_trip(self, seed, paths, workers):
        cfg = ExperimentConfig("triple", seed=seed, paths=paths, workers=workers,
                               grids={"star": (8, 16)})
        assert ExperimentConfig.from_dict(cfg.as_dict()) == cfg

    def test_yaml(self, tmp_path):
        path = tmp_path / "c.yaml"
        path.write_text("scenario: triple\nseed: 7\ngrids:\n  star: [16, 64]\n"
                        "thresholds:\n  fail: 0.01\n")
        cfg = ExperimentConfig.load(path)
        assert cfg.seed == 7 and cfg.grids == {"star": (16, 64)} and cfg.thresholds.fail == 0.01

    def test_bad_yaml(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_yaml("scenario: [unclosed")

    def test_schema_keys(self):
        assert set(config_schema()) == {"scenario", "seed", "paths", "workers", "out", "model",
                                        "grids", "thresholds"}


class TestScenarios:
    def test_registry_listing(self):
        rows = list_scenarios()
        assert [r["id"] for r in rows] == list(SCENARIOS)
        assert all(r["expect"] for r in rows)
        assert "triple" in format_table(rows)

    def test_unknown(self):
        with pytest.raises(ConfigError):
            get_scenario("nope")

    def test_triple_expectations(self):
        exp = get_scenario("triple").expectations
        assert exp["star"] == "converges" and exp["as"] == "diverges"

    @pytest.mark.parametrize("sid", list(SCENARIOS))
    def test_builds_and_validates(self, sid):
        ExperimentConfig(sid).validate()

    def test_model_override(self):
        model = get_scenario("m_dependent").build({"m": 2})
        assert model.m == 2


class TestOutputs:
    def test_expectations_met(self, fast_run):
        record, _ = fast_run
        assert record.exit_status == 0 and not record.hierarchy_violations

    def test_csv_columns(self, fast_run):
        _, d = fast_run
        with open(d / "curves.csv") as fh:
            assert tuple(next(csv.reader(fh))) == CURVE_COLUMNS
        with open(d / "verdicts.csv") as fh:
            assert tuple(next(csv.reader(fh))) == VERDICT_COLUMNS

    def test_curves_round_trip(self, fast_run):
        record, d = fast_run
        stored = read_curves(d / "curves.csv")
        for v in record.verdicts:
            # notes live in record.json only
            assert stored[(v.condition, v.f_id)] == [replace(c, note="") for c in v.evidence]

    def test_plot_files(self, fast_run):
        record, d = fast_run
        for name, text in plot_series(record).items():
            assert (d / "plot" / name).read_text() == text

    def test_record_json(self, fast_run):
        record, d = fast_run
        again = ResultRecord.from_json((d / "record.json").read_text())
        assert again.verdicts == record.verdicts and again.expectations == record.expectations

    def test_report(self, fast_run):
        _, d = fast_run
        rows, status = report(d)
        assert status == 0 and all(r["ok"] for r in rows)

    def test_report_detects_edits(self, fast_run, tmp_path):
        _, d = fast_run
        for name in ("curves.csv", "record.json"):
            (tmp_path / name).write_text((d / name).read_text())
        text = (d / "verdicts.csv").read_text().replace("converges", "diverges")
        (tmp_path / "verdicts.csv").write_text(text)
        _, status = report(tmp_path)
        assert status == 1

    def test_report_missing(self, tmp_path):
        with pytest.raises(ConfigError):
            report(tmp_path)

    @given(st.floats(allow_nan=False, allow_infinity=False))
    def test_fmt_round_trips(self, x):
        assert float(fmt(x)) == x


class TestDeterminism:
    def test_identical_runs(self, tmp_path):
        cfg = dict(scenario="triple", paths=1000, grids={"star": (16, 64), "as": (16, 64),
                                                          "asymp_exch": (16, 32)})
        a = run_scenario(ExperimentConfig.from_dict({**cfg, "out": str(tmp_path / "a")}))
        b = run_scenario(ExperimentConfig.from_dict({**cfg, "out": str(tmp_path / "b"),
                                                     "workers": 3}))
        assert curves_csv(a) == curves_csv(b) and verdicts_csv(a) == verdicts_csv(b)
        assert plot_series(a) == plot_series(b)
        for name in ("curves.csv", "verdicts.csv"):
            assert ((tmp_path / "a/triple" / name).read_bytes()
                    == (tmp_path / "b/triple" / name).read_bytes())

    def test_seed_changes_output(self):
        cfg = dict(scenario="triple", paths=500, grids={"star": (16, 64), "as": (16, 64),
                                                         "asymp_exch": (16, 32)})
        a = run_scenario(ExperimentConfig.from_dict({**cfg, "seed": 1}))
        b = run_scenario(ExperimentConfig.from_dict({**cfg, "seed": 2}))
        assert curves_csv(a) != curves_csv(b)


class TestCli:
    @pytest.mark.parametrize("text, dim, expected", [
        ("1,0,1", 1, [1.0, 0.0, 1.0]),
        ("1:1:1, 1:1:0", 3, [(1.0, 1.0, 1.0), (1.0, 1.0, 0.0)]),
        ("", 1, []),
    ])
    def test_parse_prefix(self, text, dim, expected):
        assert parse_prefix(text, dim) == expected

    def test_parse_prefix_wrong_dim(self):
        with pytest.raises(ConfigError):
            parse_prefix("1:1", 3)

    def test_list(self, capsys):
        assert main(["list", "--json"]) == 0
        rows = json.loads(capsys.readouterr().out)
        assert {r["id"] for r in rows} == set(SCENARIOS)

    @pytest.mark.parametrize("args, expected", [
        (["oracle", "m_dependent", "--prefix", "1", "--f", "id"], "-0.5"),
        (["oracle", "m_dependent", "--prefix", "0", "--f", "id"], "0"),
        (["oracle", "polya_urn", "--prefix", "1:1:1,1:1:1", "--f", "x2:1{1}"], "0.75"),
    ])
    def test_oracle(self, capsys, args, expected):
        assert main(args) == 0
        name, value, method = capsys.readouterr().out.strip().split("\t")
        assert float(value) == float(expected) and method == "enumeration"

    def test_oracle_impossible_prefix(self, capsys):
        assert main(["oracle", "triple", "--prefix", "1,1,0"]) == 2
        assert "error" in capsys.readouterr().err

    def test_run_rejects_small_paths(self, capsys, tmp_path):
        assert main(["run", "triple", "--paths", "10", "--out", str(tmp_path)]) == 2
        assert "batching" in capsys.readouterr().err

    def test_run_and_report(self, capsys, tmp_path):
        cfg = tmp_path / "c.yaml"
        cfg.write_text(f"scenario: {FAST}\npaths: 2000\n")
        assert main(["run", FAST, "--config", str(cfg), "--out", str(tmp_path)]) == 0
        assert "ok" in capsys.readouterr().out
        assert main(["report", str(tmp_path / FAST)]) == 0

    def test_run_scenario_from_config(self, tmp_path):
        cfg = tmp_path / "c.yaml"
        cfg.write_text(f"scenario: {FAST}\npaths: 2000\nout: {tmp_path}\n")
        assert main(["run", "--config", str(cfg)]) == 0
        assert (tmp_path / FAST / "verdicts.csv").exists()

    def test_run_needs_a_scenario(self, capsys):
        assert main(["run"]) == 2
        assert "scenario" in capsys.readouterr().err

    def test_config_scenario_mismatch(self, tmp_path):
        cfg = tmp_path / "c.yaml"
        cfg.write_text("scenario: iid\n")
        assert main(["run", FAST, "--config", str(cfg)]) == 2

    def test_module_entry(self):
        import subprocess
        import sys
        out = subprocess.run([sys.executable, "-m", "predlab", "list"], capture_output=True,
                             text=True, check=True).stdout
        assert "polya_urn" in out
