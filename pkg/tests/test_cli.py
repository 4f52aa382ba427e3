"""Run configuration loading and the command-line workflow."""

import csv
from pathlib import Path

import pytest
import yaml

from reservekit import (
    ConfigurationError,
    NoOverlapError,
    ParameterError,
    load_run_config,
)
from reservekit.cli import _exit_code, main, read_requirements_csv


def read_rows(path):
    with open(path, newline="") as handle:
        return list(csv.reader(handle))


class TestRunConfig:
    def test_demo_config_loads(self, demo_config):
        config = load_run_config(demo_config)
        assert config.margin == 0.99
        assert config.interval_minutes == 60
        assert config.mode == "dynamic"
        assert config.grid_step_mw == 0.5
        assert set(config.series) == {"load", "wind", "solar"}
        assert config.holdout is not None
        assert config.outages_path is not None
        assert config.observation is not None
        # relative paths resolve against the config file's directory
        assert config.output_dir == demo_config.parent / "out"

    def test_flag_overrides(self, demo_config, tmp_path):
        config = load_run_config(
            demo_config, margin=0.95, mode="static", output_dir=str(tmp_path / "o")
        )
        assert config.margin == 0.95
        assert config.mode == "static"
        assert config.output_dir == tmp_path / "o"

    def test_none_overrides_are_ignored(self, demo_config):
        config = load_run_config(demo_config, margin=None, mode=None)
        assert config.margin == 0.99
        assert config.mode == "dynamic"

    def test_unknown_override_rejected(self, demo_config):
        with pytest.raises(ConfigurationError, match="override"):
            load_run_config(demo_config, verbosity=3)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_run_config(tmp_path / "absent.yaml")

    def write_config(self, tmp_path, payload):
        path = tmp_path / "config.yaml"
        path.write_text(payload if isinstance(payload, str) else yaml.safe_dump(payload))
        return path

    def minimal_series(self):
        return {
            driver: {
                "forecast": {"path": f"{driver}_f.csv", "resolution_minutes": 60},
                "actual": {"path": f"{driver}_a.csv", "resolution_minutes": 1},
            }
            for driver in ("load", "wind", "solar")
        }

    def test_invalid_yaml(self, tmp_path):
        path = self.write_config(tmp_path, "series: [unclosed")
        with pytest.raises(ConfigurationError, match="invalid YAML"):
            load_run_config(path)

    def test_non_mapping_document(self, tmp_path):
        path = self.write_config(tmp_path, "- 1\n- 2\n")
        with pytest.raises(ConfigurationError, match="mapping"):
            load_run_config(path)

    def test_missing_series_section(self, tmp_path):
        path = self.write_config(tmp_path, {"margin": 0.99})
        with pytest.raises(ConfigurationError, match="series"):
            load_run_config(path)

    def test_missing_driver_rejected(self, tmp_path):
        series = self.minimal_series()
        del series["solar"]
        path = self.write_config(tmp_path, {"series": series})
        with pytest.raises(ConfigurationError, match="solar"):
            load_run_config(path)

    def test_unknown_driver_rejected(self, tmp_path):
        series = self.minimal_series()
        series["tidal"] = series["load"]
        path = self.write_config(tmp_path, {"series": series})
        with pytest.raises(ConfigurationError, match="tidal"):
            load_run_config(path)

    def test_source_needs_path_and_resolution(self, tmp_path):
        series = self.minimal_series()
        series["load"]["forecast"] = {"path": "load_f.csv"}
        path = self.write_config(tmp_path, {"series": series})
        with pytest.raises(ConfigurationError, match="resolution_minutes"):
            load_run_config(path)

    def test_outages_need_observation_window(self, tmp_path):
        path = self.write_config(
            tmp_path, {"series": self.minimal_series(), "outages": {"path": "outages.csv"}}
        )
        with pytest.raises(ConfigurationError, match="observation"):
            load_run_config(path)

    def test_margin_domain(self, tmp_path):
        path = self.write_config(tmp_path, {"series": self.minimal_series(), "margin": 1.5})
        with pytest.raises(ParameterError, match="margin"):
            load_run_config(path)

    def test_interval_domain(self, tmp_path):
        path = self.write_config(
            tmp_path, {"series": self.minimal_series(), "interval_minutes": 45}
        )
        with pytest.raises(ParameterError, match="interval"):
            load_run_config(path)

    def test_multi_file_signals_accepted(self, tmp_path):
        series = self.minimal_series()
        series["wind"]["actual"] = [
            {"path": "wind_a1.csv", "resolution_minutes": 1},
            {"path": "wind_a2.csv", "resolution_minutes": 1},
        ]
        config = load_run_config(self.write_config(tmp_path, {"series": series}))
        assert len(config.series["wind"]["actual"]) == 2


class TestCliCommands:
    def test_errors_writes_six_sample_files(self, demo_config, tmp_path, capsys):
        assert main(["--config", str(demo_config), "--out", str(tmp_path), "errors"]) == 0
        names = sorted(p.name for p in tmp_path.iterdir())
        assert names == sorted(
            f"errors_{driver}_{kind}.csv"
            for driver in ("load", "wind", "solar")
            for kind in ("forecast", "noise")
        )
        rows = read_rows(tmp_path / "errors_load_forecast.csv")
        assert rows[0] == ["cluster_key", "timestamp", "driver", "kind", "error_mw"]
        assert len(rows) > 168  # at least one sample per cluster
        out = capsys.readouterr().out
        assert "load/forecast" in out  # sign-convention echo

    def test_size_dynamic_writes_requirements(self, demo_config, tmp_path):
        assert main(["--config", str(demo_config), "--out", str(tmp_path), "size"]) == 0
        for reserve_class in ("total", "secondary", "tertiary"):
            requirements = read_requirements_csv(tmp_path / f"requirements_{reserve_class}.csv")
            assert len(requirements) == 168
            assert {r.reserve_class for r in requirements} == {reserve_class}
            assert {r.cluster for r in requirements} == set(range(1, 169))
            assert all(r.margin == 0.99 for r in requirements)
            assert all(r.up_mw >= 0 and r.down_mw >= 0 for r in requirements)
        comparison = read_rows(tmp_path / "comparison_secondary.csv")
        assert comparison[0] == [
            "cluster_key",
            "dynamic_up_mw",
            "dynamic_down_mw",
            "static_up_mw",
            "static_down_mw",
            "baseline_up_mw",
            "baseline_down_mw",
        ]
        assert len(comparison) == 169
        distributions = read_rows(tmp_path / "distributions.csv")
        assert distributions[0] == ["cluster_key", "reserve_class", "grid_mw", "mass"]

    def test_size_static_mode(self, demo_config, tmp_path):
        code = main(
            ["--config", str(demo_config), "--out", str(tmp_path), "--mode", "static", "size"]
        )
        assert code == 0
        requirements = read_requirements_csv(tmp_path / "requirements_static.csv")
        assert [r.reserve_class for r in requirements] == ["total", "secondary", "tertiary"]
        assert all(r.cluster is None for r in requirements)

    def test_size_baseline_mode(self, demo_config, tmp_path):
        code = main(
            ["--config", str(demo_config), "--out", str(tmp_path), "--mode", "baseline2pct", "size"]
        )
        assert code == 0
        rows = read_rows(tmp_path / "requirements_baseline2pct.csv")
        assert rows[0] == ["cluster_key", "up_mw", "down_mw", "fraction"]
        assert len(rows) == 169
        for _cluster, up, down, fraction in rows[1:]:
            assert float(up) == float(down) > 0.0
            assert float(fraction) == 0.02

    def test_margin_override_changes_requirements(self, demo_config, tmp_path):
        main(["--config", str(demo_config), "--out", str(tmp_path / "m99"), "size"])
        main(["--config", str(demo_config), "--margin", "0.9", "--out", str(tmp_path / "m90"), "size"])
        tight = read_requirements_csv(tmp_path / "m99" / "requirements_total.csv")
        loose = read_requirements_csv(tmp_path / "m90" / "requirements_total.csv")
        assert sum(r.up_mw for r in tight) > sum(r.up_mw for r in loose)
        assert all(r.margin == 0.9 for r in loose)

    def test_sweep_reports_reductions(self, demo_config, tmp_path, capsys):
        assert main(["--config", str(demo_config), "--out", str(tmp_path), "sweep"]) == 0
        rows = read_rows(tmp_path / "sweep.csv")
        assert rows[0] == [
            "interval_min",
            "mean_down_mw",
            "down_reduction_pct",
            "mean_up_mw",
            "up_reduction_pct",
        ]
        assert [r[0] for r in rows[1:]] == ["60", "30", "15", "5"]
        assert float(rows[1][2]) == 0.0  # hourly row is its own baseline
        assert float(rows[1][4]) == 0.0
        ups = [float(r[3]) for r in rows[1:]]
        assert all(b <= a for a, b in zip(ups, ups[1:]))
        assert "wrote" in capsys.readouterr().out

    def test_backtest_scores_holdout(self, demo_config, tmp_path, capsys):
        assert main(["--config", str(demo_config), "--out", str(tmp_path), "backtest"]) == 0
        rows = read_rows(tmp_path / "backtest.csv")
        assert rows[0] == [
            "reserve_class",
            "intervals_evaluated",
            "upward_shortages",
            "downward_shortages",
            "achieved_coverage",
            "target_margin",
        ]
        assert [r[0] for r in rows[1:]] == ["total", "secondary", "tertiary"]
        for row in rows[1:]:
            assert 0.0 <= float(row[4]) <= 1.0
            assert int(row[1]) > 0
        assert "achieved" in capsys.readouterr().out

    def test_backtest_accepts_requirements_file(self, demo_config, tmp_path):
        out_size = tmp_path / "size"
        assert main(["--config", str(demo_config), "--out", str(out_size), "size"]) == 0
        out_back = tmp_path / "back"
        code = main(
            [
                "--config", str(demo_config), "--out", str(out_back),
                "backtest", "--requirements", str(out_size / "requirements_total.csv"),
            ]
        )
        assert code == 0
        rows = read_rows(out_back / "backtest.csv")
        assert [r[0] for r in rows[1:]] == ["total"]

    def test_fixture_generates_runnable_dataset(self, tmp_path):
        target = tmp_path / "demo"
        code = main(["--seed", "3", "--out", str(target), "fixture", "--days", "7"])
        assert code == 0
        config_path = target / "config.yaml"
        assert config_path.exists()
        out = tmp_path / "errs"
        assert main(["--config", str(config_path), "--out", str(out), "errors"]) == 0


class TestExitCodes:
    def test_missing_input_is_two(self, tmp_path, capsys):
        code = main(["--config", str(tmp_path / "absent.yaml"), "size"])
        assert code == 2
        assert "error[missing-input]" in capsys.readouterr().err

    def test_bad_parameter_is_two(self, demo_config, tmp_path, capsys):
        code = main(
            ["--config", str(demo_config), "--margin", "1.5", "--out", str(tmp_path), "size"]
        )
        assert code == 2
        assert "error[parameter]" in capsys.readouterr().err

    def test_missing_config_flag_is_two(self, capsys):
        code = main(["size"])
        assert code == 2
        assert "error[config]" in capsys.readouterr().err

    def test_unknown_mode_is_usage_error(self, demo_config, capsys):
        code = main(["--config", str(demo_config), "--mode", "quantum", "size"])
        assert code == 2
        assert "quantum" in capsys.readouterr().err

    def test_category_to_exit_code_mapping(self):
        from reservekit import DataInconsistencyError, SchemaError

        assert _exit_code(NoOverlapError("x")) == 3
        assert _exit_code(ParameterError("x")) == 2
        assert _exit_code(ConfigurationError("x")) == 2
        assert _exit_code(SchemaError("x")) == 2
        assert _exit_code(DataInconsistencyError("x")) == 1  # genuine data fault


class TestRequirementsCsv:
    def test_rejects_wrong_header(self, tmp_path):
        from reservekit import SchemaError

        path = tmp_path / "req.csv"
        path.write_text("cluster,up,down\n1,1.0,1.0\n")
        with pytest.raises(SchemaError, match="header"):
            read_requirements_csv(path)

    def test_rejects_empty_body(self, tmp_path):
        from reservekit import SchemaError

        path = tmp_path / "req.csv"
        path.write_text("cluster_key,reserve_class,up_mw,down_mw,margin\n")
        with pytest.raises(SchemaError, match="no requirement"):
            read_requirements_csv(path)

    def test_names_bad_row(self, tmp_path):
        from reservekit import RecordValidationError

        path = tmp_path / "req.csv"
        path.write_text(
            "cluster_key,reserve_class,up_mw,down_mw,margin\n"
            "1,total,10.0,5.0,0.99\n"
            "2,total,ten,5.0,0.99\n"
        )
        with pytest.raises(RecordValidationError, match="row 3"):
            read_requirements_csv(path)
