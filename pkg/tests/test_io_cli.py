import json
import math
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from pulseflow import AreaSamples, InputFormatError, quadrature_periodic
from pulseflow.cli import main
from pulseflow.config import RunConfig, max_workers
from pulseflow.errors import ConfigError
from pulseflow.io import (
    read_area_csv,
    read_coefficients_json,
    read_contours_json,
    write_area_csv,
    write_curves_csv,
)
from pulseflow.synth import SynthSpec, generate


def square(cx, cy, side):
    h = side / 2.0
    return [[cx - h, cy - h], [cx + h, cy - h], [cx + h, cy + h], [cx - h, cy + h]]


class TestAreaCsv:
    def test_roundtrip_exact(self, tmp_path, default_samples):
        path = tmp_path / "area.csv"
        write_area_csv(path, default_samples)
        back = read_area_csv(path, default_samples.period)
        assert np.array_equal(back.stations, default_samples.stations)
        assert np.array_equal(back.values, default_samples.values)

    def test_malformed_header(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("time,1.0\n0.0,2.0\n0.5,2.0\n")
        with pytest.raises(InputFormatError):
            read_area_csv(p, 1.0)

    def test_ragged_rows(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("t_frac,0.0,1.0\n0.0,2.0\n")
        with pytest.raises(InputFormatError):
            read_area_csv(p, 1.0)


class TestContoursJson:
    def test_polygon_grid(self, tmp_path):
        entries = []
        sides = {0.0: 2.0, 1.0: 1.9}
        for phase in range(4):
            for z, side in sides.items():
                wobble = 1.0 + 0.05 * math.cos(2 * math.pi * phase / 4)
                entries.append({"phase_index": phase, "z_cm": z,
                                "points": square(0, 0, side * wobble)})
        p = tmp_path / "contours.json"
        p.write_text(json.dumps(entries))
        samples = read_contours_json(p, period=0.8)
        assert samples.period == 0.8
        assert list(samples.stations) == [0.0, 1.0]
        assert samples.values.shape == (4, 2)
        w0 = (2.0 * 1.05) ** 2
        assert samples.values[0, 0] == pytest.approx(w0, rel=1e-12)

    def test_missing_combination(self, tmp_path):
        entries = [{"phase_index": 0, "z_cm": 0.0, "points": square(0, 0, 1)},
                   {"phase_index": 1, "z_cm": 0.0, "points": square(0, 0, 1)},
                   {"phase_index": 0, "z_cm": 1.0, "points": square(0, 0, 1)}]
        p = tmp_path / "contours.json"
        p.write_text(json.dumps(entries))
        with pytest.raises(InputFormatError):
            read_contours_json(p, 1.0)


class TestCoefficientInjection:
    def test_constant_case_through_file(self, tmp_path):
        t = [k / 8 for k in range(8)]
        payload = {"T": 1.0, "samples": [
            {"t": tk, "A": -1.0, "B": 0.0, "C0": 1.0, "C1": 0.0} for tk in t]}
        p = tmp_path / "coeffs.json"
        p.write_text(json.dumps(payload))
        co = read_coefficients_json(p)
        res = quadrature_periodic(co, 0.0)
        assert len(res.solutions) == 2
        assert res.solutions[1].mean == pytest.approx(1.0, abs=1e-6)


class TestCurvesCsv:
    def test_nan_cells_empty(self, tmp_path):
        p = tmp_path / "c.csv"
        write_curves_csv(p, {"a": np.array([1.0, float("nan")]),
                             "lab": np.array(["x", "y"], dtype=object)})
        lines = p.read_text().splitlines()
        assert lines[0] == "a,lab"
        assert lines[2] == ",y"


class TestRunConfig:
    def test_requires_one_input(self, tmp_path):
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"period": 1.0}, tmp_path)

    def test_heart_rate_conversion(self, tmp_path):
        area = tmp_path / "a.csv"
        write_area_csv(area, generate(SynthSpec(n_phases=8)))
        cfg = RunConfig.from_dict({"area_csv": "a.csv", "heart_rate": 75.0}, tmp_path)
        assert cfg.period == pytest.approx(0.8)

    def test_window_order_enforced(self, tmp_path):
        area = tmp_path / "a.csv"
        write_area_csv(area, generate(SynthSpec(n_phases=8)))
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"area_csv": "a.csv", "period": 1.0,
                                 "inverse": {"qbar_min": 5.0, "qbar_max": 1.0}},
                                tmp_path)

    def test_unknown_key_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"area_csv": "x", "period": 1.0, "typo": 2},
                                tmp_path)

    def test_worker_cap_env(self, monkeypatch):
        monkeypatch.setenv("PULSEFLOW_THREADS", "4")
        assert max_workers() == 4
        monkeypatch.setenv("PULSEFLOW_THREADS", "junk")
        assert max_workers() == 1


@pytest.fixture(scope="module")
def cli_workspace(tmp_path_factory):
    """One synth + reconstruct run shared by the CLI tests."""
    root = tmp_path_factory.mktemp("cli")
    runner = CliRunner()
    spec_path = root / "synth_spec.json"
    spec_path.write_text(json.dumps({"pulse_amplitude": 0.02, "seed": 0}))
    r = runner.invoke(main, ["synth", "--config", str(spec_path),
                             "--out", str(root / "data")])
    assert r.exit_code == 0, r.output
    config_path = root / "config.json"
    config_path.write_text(json.dumps(
        {"area_csv": "data/area.csv", "period": 1.0}))
    r = runner.invoke(main, ["reconstruct", "--config", str(config_path),
                             "--out", str(root / "run")])
    assert r.exit_code == 0, r.output
    return root


class TestCli:
    def test_synth_outputs(self, cli_workspace):
        data = cli_workspace / "data"
        assert (data / "area.csv").is_file()
        echo = json.loads((data / "synth_spec.json").read_text())
        assert echo["alpha_true"] == 2500.0
        assert "resolved_wave_speed" in echo
        manifest = json.loads((data / "manifest.json").read_text())
        assert manifest["command"] == "synth"
        assert "pulseflow" in manifest["versions"]

    def test_reconstruct_report(self, cli_workspace, default_spec):
        report = json.loads((cli_workspace / "run" / "report.json").read_text())
        for key in ("alpha_min", "alpha_max", "alpha_opt", "mse",
                    "kotin_block1", "kotin_block2", "delta_block1",
                    "delta_block2", "warnings"):
            assert key in report
        assert abs(report["alpha_opt"] - default_spec.alpha_true) \
            <= 0.10 * default_spec.alpha_true
        flow = (cli_workspace / "run" / "flow.csv").read_text().splitlines()
        assert flow[0] == "t_frac,q_10,q_50,q_90"
        assert (cli_workspace / "run" / "nullcline.csv").is_file()
        phase = (cli_workspace / "run" / "phase.csv").read_text().splitlines()
        assert phase[0] == "t_frac,q,null_low,null_high"

    def test_sensitivity_command(self, cli_workspace):
        runner = CliRunner()
        r = runner.invoke(main, [
            "sensitivity", "--config", str(cli_workspace / "config.json"),
            "--report", str(cli_workspace / "run" / "report.json"),
            "--out", str(cli_workspace / "sens")])
        assert r.exit_code == 0, r.output
        lines = (cli_workspace / "sens" / "sensitivity.csv").read_text().splitlines()
        assert lines[0] == "t_frac,P_seconds"
        assert len(lines) > 256

    def test_hemo_command(self, cli_workspace):
        runner = CliRunner()
        r = runner.invoke(main, [
            "hemo", "--config", str(cli_workspace / "config.json"),
            "--report", str(cli_workspace / "run" / "report.json"),
            "--out", str(cli_workspace / "hemo")])
        assert r.exit_code == 0, r.output
        lines = (cli_workspace / "hemo" / "hemo.csv").read_text().splitlines()
        assert lines[0] == "x_cm,Wo,Re_mean,Re_peak,regime"
        assert len(lines) == 22  # 21 stations

    def test_validation_error_exit_1(self, cli_workspace):
        runner = CliRunner()
        bad = cli_workspace / "bad.json"
        bad.write_text(json.dumps({"area_csv": "data/area.csv", "period": 1.0,
                                   "inverse": {"qbar_min": 200.0,
                                               "qbar_max": 100.0}}))
        r = runner.invoke(main, ["reconstruct", "--config", str(bad),
                                 "--out", str(cli_workspace / "badrun")])
        assert r.exit_code == 1

    def test_unreachable_window_exit_2(self, cli_workspace):
        runner = CliRunner()
        cfg = cli_workspace / "unreach.json"
        cfg.write_text(json.dumps({
            "area_csv": "data/area.csv", "period": 1.0,
            "inverse": {"qbar_min": 9e5, "qbar_max": 1e6, "alpha_ceil": 1e6}}))
        r = runner.invoke(main, ["reconstruct", "--config", str(cfg),
                                 "--out", str(cli_workspace / "unreach")])
        assert r.exit_code == 2
        report = json.loads((cli_workspace / "unreach" / "report.json").read_text())
        assert "NoBracket" in report["error"]

    def test_degenerate_field_exit_2(self, cli_workspace, tmp_path):
        runner = CliRunner()
        samples = generate(SynthSpec(area_start=2.0, area_end=2.0,
                                     pulse_amplitude=0.02,
                                     wave_speed=math.inf))
        write_area_csv(tmp_path / "uniform.csv", samples)
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"area_csv": "uniform.csv", "period": 1.0}))
        r = runner.invoke(main, ["reconstruct", "--config", str(cfg),
                                 "--out", str(tmp_path / "out")])
        assert r.exit_code == 2
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert "DegenerateQuadratic" in report["error"]

    def test_repeat_run_byte_identical(self, cli_workspace):
        runner = CliRunner()
        r = runner.invoke(main, ["reconstruct",
                                 "--config", str(cli_workspace / "config.json"),
                                 "--out", str(cli_workspace / "run2")])
        assert r.exit_code == 0
        for name in ("report.json", "flow.csv", "nullcline.csv", "phase.csv",
                     "manifest.json"):
            a = (cli_workspace / "run" / name).read_bytes()
            b = (cli_workspace / "run2" / name).read_bytes()
            assert a == b, name
