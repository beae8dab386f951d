import json
import math

import pytest

from vhetsim.cli import main
from vhetsim.config import apply_overrides, load_config, resolve_config
from vhetsim.errors import ConfigError
from vhetsim.experiment import run_experiment
from vhetsim.ingest import (
    SynthParams,
    load_profile_cache,
    save_profile_cache,
    synth_traffic,
)
from vhetsim.reporting import emit_report, read_rows
from vhetsim.experiment import ExperimentReport


def base_raw(**overrides):
    raw = {
        "sbs_count": 3,
        "synth": {"grid_side": 6, "noise_std": 0.2, "seed": 3},
        "estimator": {"method": "distance_unweighted", "neighbor_count": 5},
        "iteration_count": 1,
        "slot_count": 4,
        "seed": 0,
    }
    raw.update(overrides)
    return raw


class TestConfig:
    def test_defaults_filled(self):
        cfg = resolve_config({"sbs_count": 2, "synth": {"grid_side": 4},
                              "estimator": {"method": "mlc"}})
        assert cfg.iteration_count == 300
        assert cfg.slot_count == 144
        assert cfg.lambda_th == 0.1

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="bogus"):
            resolve_config(base_raw(bogus=1))

    def test_unknown_nested_key_rejected(self):
        raw = base_raw()
        raw["estimator"]["typo"] = 1
        with pytest.raises(ConfigError, match="typo"):
            resolve_config(raw)

    def test_missing_method(self):
        raw = base_raw()
        del raw["estimator"]["method"]
        with pytest.raises(ConfigError, match="method"):
            resolve_config(raw)

    def test_requires_corpus_source(self):
        raw = base_raw()
        del raw["synth"]
        with pytest.raises(ConfigError):
            resolve_config(raw)

    def test_slot_count_bounds(self):
        with pytest.raises(ConfigError):
            resolve_config(base_raw(slot_count=0))
        with pytest.raises(ConfigError):
            resolve_config(base_raw(slot_count=145))

    def test_yaml_round_trip_is_stable(self):
        import yaml
        cfg = resolve_config(base_raw())
        echoed = resolve_config(yaml.safe_load(cfg.to_yaml()))
        assert echoed.to_yaml() == cfg.to_yaml()

    def test_load_config_file(self, tmp_path):
        import yaml
        path = tmp_path / "cfg.yaml"
        path.write_text(yaml.safe_dump(base_raw()), encoding="utf-8")
        assert load_config(path).sbs_count == 3

    def test_apply_overrides_dotted(self):
        cfg = resolve_config(base_raw())
        out = apply_overrides(cfg, {"estimator.neighbor_count": 9, "seed": 5})
        assert out.estimator.neighbor_count == 9 and out.seed == 5

    def test_apply_overrides_unknown_path(self):
        cfg = resolve_config(base_raw())
        with pytest.raises(ConfigError):
            apply_overrides(cfg, {"estimator.nope": 1})


class TestRunExperiment:
    def test_row_shape(self):
        report = run_experiment(resolve_config(base_raw(iteration_count=2, slot_count=3)))
        assert len(report.rows) == 6
        assert [(r.iteration, r.slot) for r in report.rows[:4]] == [
            (0, 0), (0, 1), (0, 2), (1, 0)]

    def test_deterministic(self):
        cfg = resolve_config(base_raw())
        a, b = run_experiment(cfg), run_experiment(cfg)
        assert a.rows == b.rows

    def test_perfect_estimator_anchor(self):
        # low noise keeps every true load strictly positive, so eps is defined
        raw = base_raw(slot_count=6)
        raw["synth"]["noise_std"] = 0.04
        raw["estimator"] = {"method": "perfect"}
        report = run_experiment(resolve_config(raw))
        assert report.skipped_zero_load == 0
        for row in report.rows:
            m = row.metrics
            assert m.estimation_error == 0.0
            assert m.decision_change_rate == 0.0
            assert m.power_est == m.power_true

    @pytest.mark.parametrize("method", ["distance_unweighted", "distance_weighted",
                                        "random_unweighted", "random_weighted", "mlc"])
    def test_every_method_runs(self, method):
        raw = base_raw(slot_count=2)
        raw["estimator"] = {"method": method, "neighbor_count": 5}
        report = run_experiment(resolve_config(raw))
        assert len(report.rows) == 2

    def test_too_small_corpus(self):
        from vhetsim.errors import SimulationError
        raw = base_raw()
        raw["synth"]["grid_side"] = 2
        raw["sbs_count"] = 4
        with pytest.raises(SimulationError):
            run_experiment(resolve_config(raw))

    def test_exhaustive_falls_back_above_limit(self):
        raw = base_raw(optimizer="exhaustive", exhaustive_limit=2)
        report = run_experiment(resolve_config(raw))
        assert report.solver_used == "greedy"

    def test_summary_recomputable_from_rows(self):
        report = run_experiment(resolve_config(base_raw()))
        agg = report.summary()["aggregates"]
        eps = [r.metrics.estimation_error for r in report.rows
               if not math.isnan(r.metrics.estimation_error)]
        assert agg["mean_eps"]["mean"] == pytest.approx(sum(eps) / len(eps))
        assert agg["mean_eps"]["defined_rows"] == len(eps)


class TestReporting:
    def test_emit_and_reparse(self, tmp_path):
        report = run_experiment(resolve_config(base_raw()))
        paths = emit_report(report, tmp_path / "out")
        rows = read_rows(paths["rows"])
        assert len(rows) == len(report.rows)
        summary = json.loads(paths["summary"].read_text(encoding="utf-8"))
        eps = [r["mean_eps"] for r in rows if not math.isnan(r["mean_eps"])]
        assert abs(summary["aggregates"]["mean_eps"]["mean"] - sum(eps) / len(eps)) < 1e-9

    def test_empty_report_header_only(self, tmp_path):
        report = ExperimentReport(rows=[], config_echo="{}\n", seed=0, solver_used="greedy")
        paths = emit_report(report, tmp_path / "empty")
        text = paths["rows"].read_text(encoding="utf-8")
        assert text == ("iteration,slot,mean_eps,power_true_w,power_est_w,"
                        "decision_change,p_off_on,p_on_off\n")

    def test_config_echo_byte_identical(self, tmp_path):
        cfg = resolve_config(base_raw())
        report = run_experiment(cfg)
        paths = emit_report(report, tmp_path / "echo")
        assert paths["config"].read_text(encoding="utf-8") == cfg.to_yaml()

    def test_lf_line_endings(self, tmp_path):
        report = run_experiment(resolve_config(base_raw()))
        paths = emit_report(report, tmp_path / "lf")
        for path in paths.values():
            assert b"\r" not in path.read_bytes()


class TestProfileCache:
    def test_round_trip(self, tmp_path):
        profiles = synth_traffic(SynthParams(grid_side=3, spatial_correlation_length=235.0,
                                             noise_std=0.1, seed=5))
        path = tmp_path / "cache.csv"
        save_profile_cache(profiles, path)
        assert load_profile_cache(path) == profiles


class TestCli:
    def write_config(self, tmp_path, raw=None):
        import yaml
        path = tmp_path / "cfg.yaml"
        path.write_text(yaml.safe_dump(raw or base_raw()), encoding="utf-8")
        return path

    def test_simulate(self, tmp_path, capsys):
        cfg = self.write_config(tmp_path)
        out = tmp_path / "run"
        assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
        assert (out / "rows.csv").exists()
        assert "mean eps" in capsys.readouterr().out

    def test_simulate_flag_overrides(self, tmp_path):
        cfg = self.write_config(tmp_path)
        out = tmp_path / "run2"
        assert main(["simulate", "--config", str(cfg), "--out", str(out),
                     "--estimator", "perfect", "--seed", "9", "--sbs-count", "2"]) == 0
        echo = (out / "config.yaml").read_text(encoding="utf-8")
        assert "method: perfect" in echo and "seed: 9" in echo and "sbs_count: 2" in echo

    def test_sweep_series_files(self, tmp_path):
        cfg = self.write_config(tmp_path)
        out = tmp_path / "sweep"
        assert main(["sweep", "--config", str(cfg), "--out", str(out),
                     "--vary", "estimator.neighbor_count=3,5",
                     "--vary", "estimator.distance_exponent=1,3"]) == 0
        series = sorted(p.name for p in out.glob("series_*.csv"))
        assert len(series) == 2  # one per distance_exponent value
        body = (out / series[0]).read_text(encoding="utf-8").splitlines()
        assert body[0].startswith("estimator.neighbor_count,")
        assert len(body) == 3

    def test_ingest(self, tmp_path, capsys):
        data = tmp_path / "cdr"
        data.mkdir()
        lines = []
        for sq in range(1, 5):
            for slot in range(3):
                lines.append(f"{sq}\t{slot * 600000}\t39\t{sq * (slot + 1)}.0")
        (data / "day1.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
        cache = tmp_path / "cache.csv"
        assert main(["ingest", "--dataset", str(data), "--cache", str(cache),
                     "--grid-side", "2"]) == 0
        assert "4 cell profiles" in capsys.readouterr().out
        assert len(load_profile_cache(cache)) == 4

    def test_error_exit_code(self, tmp_path, capsys):
        raw = base_raw()
        raw["synth"]["grid_side"] = 2
        raw["sbs_count"] = 4
        cfg = self.write_config(tmp_path, raw)
        assert main(["simulate", "--config", str(cfg)]) == 1
        assert "error:" in capsys.readouterr().err
