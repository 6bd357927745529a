import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from clockframes.cli import main
from clockframes.config import parse_config
from clockframes.errors import ConfigError
from clockframes.runner import metric, read_trajectory_csv, run, sweep, validate

from conftest import DECAY, FREE, GRAVITY


def cfg_with(text, **changes):
    cfg = yaml.safe_load(text)
    for dotted, value in changes.items():
        node = cfg
        parts = dotted.split("__")
        for p in parts[:-1]:
            node = node[int(p)] if isinstance(node, list) else node[p]
        node[parts[-1]] = value
    return parse_config(yaml.safe_dump(cfg))


class TestRun:
    def test_linear_decay_matches_analytic(self):
        report = run(parse_config(DECAY))
        check = {c.name: c for c in report.checks}["norm-analytic"]
        assert check.passed and check.measured <= 1e-4
        assert report.trajectory["norm"]["final"] == pytest.approx(0.9, abs=1e-4)

    def test_free_norm_conserved(self):
        report = run(parse_config(FREE))
        check = {c.name: c for c in report.checks}["norm-conserved"]
        assert check.passed and check.measured <= 1e-9
        assert report.ok

    def test_csv_byte_identical(self, tmp_path):
        cfg = parse_config(DECAY)
        run(cfg, out_dir=tmp_path / "a")
        run(cfg, out_dir=tmp_path / "b")
        a = (tmp_path / "a" / "trajectory.csv").read_bytes()
        assert a == (tmp_path / "b" / "trajectory.csv").read_bytes()
        ra, rb = (json.loads((tmp_path / d / "report.json").read_text()) for d in "ab")
        ra.pop("files"), rb.pop("files")
        assert ra == rb

    def test_report_recomputable_from_csv(self, tmp_path):
        report = run(parse_config(FREE), out_dir=tmp_path)
        header, table = read_trajectory_csv((tmp_path / "trajectory.csv").read_text())
        data = json.loads((tmp_path / "report.json").read_text())
        assert header[:3] == ["reading", "norm", "defect"]
        norm = table[:, 1]
        for key, value in (("initial", norm[0]), ("final", norm[-1]), ("min", norm.min()), ("max", norm.max())):
            assert abs(data["trajectory"]["norm"][key] - value) <= 1e-12
        np.testing.assert_allclose(data["trajectory"]["series"]["norm"], norm, rtol=0, atol=1e-12)
        col = header.index("position:M_re")
        np.testing.assert_allclose(data["trajectory"]["expectations"]["position:M"]["re"], table[:, col], atol=1e-12)
        assert data["ok"] == report.ok

    def test_svg_written(self, tmp_path):
        pytest.importorskip("matplotlib")
        cfg = cfg_with(FREE, output={"svg": True})
        report = run(cfg, out_dir=tmp_path)
        assert (tmp_path / "trajectory.svg").read_text().lstrip().startswith("<?xml")
        assert report.files["svg"].endswith("trajectory.svg")

    def test_non_hermitian_has_no_conservation_check(self):
        cfg = cfg_with(FREE, profile={"family": "constant", "a": 0.05})
        names = [c.name for c in run(cfg).checks]
        assert "norm-conserved" not in names


class TestSweep:
    def test_gravitational_defect_monotone(self, tmp_path):
        rows, text = sweep(parse_config(GRAVITY), "constants.G", [0.0, 1e-3, 2e-3, 4e-3], out_dir=tmp_path)
        defects = [r["max_defect"] for r in rows]
        assert defects[0] <= 1e-12
        assert all(a < b for a, b in zip(defects, defects[1:]))
        assert (tmp_path / "sweep.csv").read_text() == text
        assert (tmp_path / "point_03" / "trajectory.csv").exists()
        assert text.splitlines()[0] == "constants.G,final_norm,max_defect,metric"

    def test_width_does_not_change_norm(self):
        rows, _ = sweep(parse_config(DECAY), "run.initial.particle_width", [0.5, 1.0, 2.0])
        finals = [r["final_norm"] for r in rows]
        assert max(finals) - min(finals) <= 1e-4

    def test_parallel_matches_serial(self):
        cfg = parse_config(GRAVITY)
        serial = sweep(cfg, "constants.G", [1e-3, 2e-3])[1]
        assert sweep(cfg, "constants.G", [1e-3, 2e-3], jobs=2)[1] == serial

    @pytest.mark.parametrize("axis, values", [
        ("constants.G", []),
        ("constants.G", ["big"]),
        ("constants.G", list(range(65))),
        ("run.nothing.here", [1.0]),
        ("scenario.kind", [1.0]),
    ])
    def test_rejected(self, axis, values):
        with pytest.raises(ConfigError):
            sweep(parse_config(GRAVITY), axis, values)

    def test_invalid_point_rejected(self):
        with pytest.raises(ConfigError):
            sweep(parse_config(FREE), "clocks.0.tick", [0.1, -0.1])


class TestValidate:
    def test_free_passes(self):
        report = validate(parse_config(FREE))
        assert report.ok, [c for c in report.checks if not c.ok]
        names = {c.name for c in report.checks}
        assert {"clock-covariance:A", "povm-completeness:A", "deterministic"} <= names

    def test_left_ordering_expected_fail(self):
        cfg = cfg_with(DECAY, scenario={"kind": "time-parametrized", "ordering": "left", "external_clock": "B"},
                       clocks=[{"label": "A", "dimension": 16, "tick": 0.0625}],
                       particles=[{"label": "M", "grid": {"min": -4.0, "max": 4.0, "count": 8}}],
                       run={"perspective": "B", "readings": {"start": 0.0, "stop": 1.0, "count": 5}})
        report = validate(cfg)
        xfail = [c for c in report.checks if c.expected_fail]
        assert xfail and all(not c.passed for c in xfail)
        assert report.ok

    def test_weyl_external_perspective_hermitian(self):
        # H carries clock energies up to 8 pi; the exponential integrator is exact for it
        cfg = cfg_with(DECAY, scenario={"kind": "time-parametrized", "external_clock": "B"},
                       clocks=[{"label": "A", "dimension": 16, "tick": 0.0625}],
                       particles=[{"label": "M", "grid": {"min": -4.0, "max": 4.0, "count": 8}}],
                       run={"perspective": "B", "readings": {"start": 0.0, "stop": 1.0, "count": 5},
                            "integrator": "midpoint-exponential"})
        report = validate(cfg)
        checks = {c.name: c for c in report.checks}
        assert checks["external-perspective-hermitian"].passed
        assert report.ok

    def test_seed_recorded(self, tmp_path):
        report = validate(parse_config(GRAVITY), out_dir=tmp_path, seed=7)
        assert json.loads((tmp_path / "report.json").read_text())["diagnostics"]["seed"] == 7
        assert report.ok


def test_metric_summary():
    out = metric(cfg_with(GRAVITY, constants={"G": 0.2}))
    assert out["classification"] in ("positive-definite", "no-positive-metric")
    assert out["defect"] > 1e-3
    free = metric(parse_config(FREE))
    assert free["classification"] == "positive-definite" and free["defect"] <= 1e-12


class TestCli:
    def test_run_ok(self, write_config, tmp_path, capsys):
        path = write_config(DECAY)
        assert main(["run", "--config", str(path), "--out", str(tmp_path / "out")]) == 0
        assert "PASS  norm-analytic" in capsys.readouterr().out
        assert (tmp_path / "out" / "report.json").exists()

    def test_config_error_exit_1(self, write_config, capsys):
        path = write_config(FREE.replace("tick: 0.0625", "tick: 0.0625\n    width: 0.01\n    ideal: true"))
        assert main(["run", "--config", str(path)]) == 1
        err = capsys.readouterr().err
        assert err.startswith("ConfigError: ") and str(path) in err and "contradiction" in err

    def test_runtime_error_exit_2(self, write_config, capsys):
        path = write_config(DECAY.replace("alpha: 0.1", "alpha: 1.0").replace("stop: 1.0", "stop: 2.0"))
        assert main(["run", "--config", str(path)]) == 2
        err = capsys.readouterr().err
        assert err.startswith("HorizonError: ") and ": run: " in err

    def test_missing_file_exit_2(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "absent.yaml")]) == 2

    def test_metric_json(self, write_config, capsys):
        assert main(["metric", "--config", str(write_config(FREE))]) == 0
        assert json.loads(capsys.readouterr().out)["classification"] == "positive-definite"

    def test_sweep(self, write_config, capsys):
        path = write_config(GRAVITY)
        assert main(["sweep", "--config", str(path), "--axis", "constants.G", "--values", "0,0.001"]) == 0
        assert capsys.readouterr().out.splitlines()[0].startswith("constants.G,")

    def test_sweep_empty_axis(self, write_config, capsys):
        path = write_config(GRAVITY)
        assert main(["sweep", "--config", str(path), "--axis", "constants.G", "--values", ""]) == 1
        assert "empty axis" in capsys.readouterr().err

    def test_validate_strict(self, write_config, capsys):
        path = write_config(FREE)
        assert main(["validate", "--config", str(path), "--tolerance-profile", "strict", "--seed", "3"]) == 0
        assert "FAIL" not in capsys.readouterr().out

    def test_module_entry_point(self, write_config):
        path = write_config(FREE)
        proc = subprocess.run([sys.executable, "-m", "clockframes", "metric", "--config", str(path)],
                              capture_output=True, text=True, check=False)
        assert proc.returncode == 0 and "positive-definite" in proc.stdout
