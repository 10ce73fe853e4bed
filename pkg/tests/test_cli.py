"""Configuration loading and command-line entry point tests."""

import csv
import json

import numpy as np
import pytest

from ipfe import validation
from ipfe.arrayio import read_array, write_array
from ipfe.cli import ConfigError, load_config, main, resolve_threads
from ipfe.grid import FrequencyGrid


def write_config(tmp_path, **overrides):
    cfg = {
        "grid": {"dim": 1, "n": 8, "delta_a": 0.25, "wavelength": 1.55e-6},
        "model": {"kind": "von_karman", "cn2": 9.2e-15, "outer_scale": 1.0},
        "plan": {"z_total": 1000.0, "n_slabs": 32, "n_realizations": 8,
                 "master_seed": 7},
        "source": {"sigma_a": 0.5},
        "output_dir": str(tmp_path / "out"),
    }
    for key, value in overrides.items():
        if isinstance(value, dict) and key in cfg:
            cfg[key].update(value)
        else:
            cfg[key] = value
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


def test_load_config_minimal_defaults(tmp_path):
    path = tmp_path / "min.json"
    path.write_text(json.dumps({
        "grid": {"dim": 1, "n": 8, "delta_a": 0.25, "wavelength": 1.55e-6},
        "model": {"kind": "von_karman", "cn2": 0.0, "outer_scale": 1.0},
        "plan": {"z_total": 100.0},
    }))
    cfg = load_config(path)
    assert cfg.n_slabs == 64
    assert cfg.n_realizations == 500
    assert cfg.master_seed == 0
    assert cfg.output_dir == "."
    assert cfg.source_sigma_a == pytest.approx(8 * 0.25 / 8.0)


def test_load_config_rejects_unknown_and_bad_fields(tmp_path):
    with pytest.raises(ConfigError, match="model.bogus: unknown field"):
        load_config(write_config(tmp_path, model={"bogus": 1}))
    with pytest.raises(ConfigError, match="model.cn2"):
        load_config(write_config(tmp_path, model={"cn2": -1.0}))
    with pytest.raises(ConfigError, match="grid.n: expected an integer"):
        load_config(write_config(tmp_path, grid={"n": 8.5}))
    no_z = tmp_path / "no_z.json"
    no_z.write_text(json.dumps({
        "grid": {"dim": 1, "n": 8, "delta_a": 0.25, "wavelength": 1.55e-6},
        "model": {"kind": "von_karman", "cn2": 0.0, "outer_scale": 1.0},
        "plan": {"n_slabs": 4},
    }))
    with pytest.raises(ConfigError, match="plan.z_total: required"):
        load_config(no_z)
    with pytest.raises(ConfigError, match="not valid JSON"):
        bad = tmp_path / "bad.json"
        bad.write_text("{nope")
        load_config(bad)


def test_load_config_guard_violation(tmp_path):
    path = write_config(tmp_path, model={"cn2": 1e-11},
                        plan={"z_total": 1000.0, "n_slabs": 16})
    with pytest.raises(ConfigError, match="plan: .*guard"):
        load_config(path)


def test_load_config_outer_scale_warning(tmp_path):
    # tiny cn2 keeps the weak-scattering guard satisfied at this big L0
    path = write_config(tmp_path, model={"outer_scale": 100.0,
                                         "cn2": 1e-22})
    with pytest.warns(UserWarning, match="outer scale"):
        load_config(path)


def test_resolve_threads(monkeypatch):
    monkeypatch.delenv("IPFE_THREADS", raising=False)
    assert resolve_threads(None) is None
    assert resolve_threads(1) == 1
    monkeypatch.setenv("IPFE_THREADS", "1")
    assert resolve_threads(None) == 1
    monkeypatch.setenv("IPFE_THREADS", "lots")
    with pytest.raises(ConfigError, match="IPFE_THREADS"):
        resolve_threads(None)
    with pytest.raises(ConfigError, match=">= 1"):
        resolve_threads(0)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_spectrum_table_command(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "psd"
    assert main(["spectrum-table", "--config", str(cfg), "--out", str(out),
                 "--points", "20"]) == 0
    rows = read_csv(out / "spectrum_table.csv")
    assert rows[0] == ["a_cyc_per_m", "psd_transverse_m3"]
    assert len(rows) == 21
    assert float(rows[1][1]) > float(rows[-1][1]) > 0.0


def test_states_commands(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "states"
    assert main(["states", "--config", str(cfg), "--out", str(out)]) == 0
    rows = read_csv(out / "fock_sweep.csv")
    assert len(rows) == 102
    assert float(rows[1][2]) == pytest.approx(-1.0)  # w1 at alpha = 0

    assert main(["states", "--config", str(cfg), "--out", str(out),
                 "--stationarity"]) == 0
    srows = read_csv(out / "stationarity.csv")
    assert len(srows) == 5
    assert all(float(r[1]) < 1e-10 for r in srows[1:])


def test_screens_command(tmp_path, capsys):
    cfg = write_config(tmp_path)
    out = tmp_path / "scr"
    assert main(["screens", "--config", str(cfg)]) == 2  # missing --validate
    assert main(["screens", "--config", str(cfg), "--out", str(out),
                 "--validate", "--samples", "200"]) == 0
    rows = read_csv(out / "screens_variance.csv")
    assert len(rows) == 9
    cross = read_csv(out / "screens_cross.csv")
    assert len(cross) == 65


@pytest.mark.filterwarnings("ignore:kernel boundary mass")
def test_evolve_kernel_command(tmp_path):
    cfg = write_config(tmp_path)
    grid = FrequencyGrid(1, 8, 0.25, 1.55e-6)
    init = np.diag(np.exp(-grid.freq_sq())).astype(complex) \
        * grid.delta_weight
    kernel_path = tmp_path / "init.bin"
    write_array(kernel_path, init)
    out = tmp_path / "evolve"
    assert main(["evolve-kernel", "--config", str(cfg),
                 "--input", str(kernel_path), "--orders", "1,1",
                 "--z-list", "0,500,1000", "--out", str(out)]) == 0
    rows = read_csv(out / "kernel_evolution.csv")
    assert len(rows) == 4
    traces = [float(r[1]) for r in rows[1:]]
    assert traces[1] == pytest.approx(traces[0], rel=1e-8)
    assert traces[2] == pytest.approx(traces[0], rel=1e-8)
    snap, meta = read_array(out / "kernel_z1000.bin")
    assert snap.shape == (8, 8)
    assert meta["orders"] == [1, 1]
    first, _ = read_array(out / "kernel_z0.bin")
    assert np.array_equal(first, init)


def test_simulate_command_and_determinism(tmp_path):
    cfg = write_config(tmp_path)
    out_a = tmp_path / "run_a"
    out_b = tmp_path / "run_b"
    assert main(["simulate", "--config", str(cfg), "--out", str(out_a)]) == 0
    assert main(["simulate", "--config", str(cfg), "--out", str(out_b)]) == 0
    mean_a, meta = read_array(out_a / "mean_field.bin")
    mean_b, _ = read_array(out_b / "mean_field.bin")
    assert np.array_equal(mean_a, mean_b)
    assert meta["master_seed"] == 7
    second, _ = read_array(out_a / "second_moment.bin")
    assert second.shape == (8, 8)
    manifest = json.loads((out_a / "manifest.json").read_text())
    assert manifest["n_realizations"] == 8
    assert manifest["guards"]["weak_scattering"] < 0.1
    # a different seed changes the ensemble
    out_c = tmp_path / "run_c"
    assert main(["simulate", "--config", str(cfg), "--out", str(out_c),
                 "--seed", "8"]) == 0
    mean_c, meta_c = read_array(out_c / "mean_field.bin")
    assert not np.array_equal(mean_a, mean_c)
    assert meta_c["master_seed"] == 8


def test_config_error_exit_code(tmp_path, capsys):
    path = write_config(tmp_path, model={"cn2": -1.0})
    assert main(["simulate", "--config", str(path)]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_validate_exit_codes(tmp_path, monkeypatch):
    class FakeReport:
        passed = True

        def to_json_dict(self):
            return {"passed": self.passed}

        def to_text(self):
            return "[PASS] fake"

    def fake_run(overrides, threads=None):
        fake_run.seen = overrides
        return report

    report = FakeReport()
    monkeypatch.setattr(validation, "run_validate", fake_run)
    out = tmp_path / "val"
    assert main(["validate", "--out", str(out), "--seed", "123"]) == 0
    assert fake_run.seen == {"master_seed": 123}
    assert json.loads((out / "validation_report.json").read_text()) \
        == {"passed": True}
    assert "[PASS]" in (out / "validation_report.txt").read_text()
    report.passed = False
    assert main(["validate", "--out", str(out)]) == 1
