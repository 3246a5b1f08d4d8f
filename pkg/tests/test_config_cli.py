import os

import numpy as np
import pytest

from markerflow import cli, output
from markerflow.config import ConfigError, ExperimentConfig, load_config
from markerflow.transport import IntegrationError


def write_config(tmp_path, text, name="exp.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


BASIC = """
# minimal experiment
kind = init-approx
preset = cells3
n = 32
betas = 10, 20, 40
figures = false
"""


def test_load_config_basic(tmp_path):
    cfg = load_config(write_config(tmp_path, BASIC))
    assert cfg.kind == "init-approx"
    assert cfg.preset == "cells3"
    assert cfg.n == 32
    assert cfg.betas == [10.0, 20.0, 40.0]
    assert cfg.figures is False


def test_load_config_unknown_key(tmp_path):
    path = write_config(tmp_path, BASIC + "\nwibble = 3\n")
    with pytest.raises(ConfigError, match="wibble"):
        load_config(path)


def test_load_config_duplicate_key(tmp_path):
    path = write_config(tmp_path, BASIC + "\nn = 64\n")
    with pytest.raises(ConfigError, match="duplicate"):
        load_config(path)


def test_load_config_bad_value_reports_line(tmp_path):
    path = write_config(tmp_path, "kind = evolve\npreset = shear2\nn = soon\n")
    with pytest.raises(ConfigError, match="line 3"):
        load_config(path)


def test_validate_rejects_bad_betas():
    cfg = ExperimentConfig(kind="evolve", preset="shear2", betas=[20.0, 10.0])
    with pytest.raises(ConfigError, match="increasing"):
        cfg.validate()
    cfg = ExperimentConfig(kind="evolve", preset="shear2", betas=[])
    with pytest.raises(ConfigError):
        cfg.validate()


def test_validate_rejects_preset_and_markers():
    cfg = ExperimentConfig(kind="evolve", preset="shear2",
                           markers=["sin(y)", "0*x"], levels=[1.0, -1.0])
    with pytest.raises(ConfigError):
        cfg.validate()
    cfg = ExperimentConfig(kind="evolve")
    with pytest.raises(ConfigError):
        cfg.validate()


def test_marker_expressions_build():
    cfg = ExperimentConfig(kind="evolve", markers=["sin(y)", "0*x"],
                           levels=[1.0, -1.0], n=32, betas=[10.0])
    cfg.validate()
    m = cfg.build_markers(10.0)
    assert m.k == 2
    assert np.max(np.abs(m.phi[0] - np.sin(m.grid.y))) < 1e-12


def test_marker_expressions_reject_unknown_names():
    cfg = ExperimentConfig(kind="evolve", markers=["__import__('os').getcwd()"],
                           levels=[1.0], n=32, betas=[10.0])
    with pytest.raises(ConfigError):
        cfg.build_markers(10.0)


def test_perturbation_is_seeded():
    kw = dict(kind="evolve", preset="cells3", n=32, betas=[10.0], perturb=0.05)
    a = ExperimentConfig(seed=3, **kw).build_markers(10.0)
    b = ExperimentConfig(seed=3, **kw).build_markers(10.0)
    c = ExperimentConfig(seed=4, **kw).build_markers(10.0)
    assert np.array_equal(a.phi, b.phi)
    assert not np.array_equal(a.phi, c.phi)


def test_cli_presets_lists_names(capsys):
    assert cli.main(["presets"]) == 0
    out = capsys.readouterr().out
    for name in ("shear2", "cells3", "bands3"):
        assert name in out


def test_cli_missing_config_exits_1(tmp_path, capsys):
    rc = cli.main(["run", str(tmp_path / "nope.cfg"), "--out", str(tmp_path)])
    assert rc == 1


def test_cli_requires_out(tmp_path, capsys):
    rc = cli.main(["run", write_config(tmp_path, BASIC)])
    assert rc == 1
    assert "output directory" in capsys.readouterr().err


def test_cli_run_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "out"
    rc = cli.main(["run", write_config(tmp_path, BASIC), "--out", str(out)])
    assert rc == 0
    assert (out / "records.csv").exists()
    assert (out / "manifest.json").exists()


def test_cli_records_are_byte_identical(tmp_path):
    cfgpath = write_config(tmp_path, BASIC)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert cli.main(["run", cfgpath, "--out", str(out1)]) == 0
    assert cli.main(["run", cfgpath, "--out", str(out2)]) == 0
    assert (out1 / "records.csv").read_bytes() == (out2 / "records.csv").read_bytes()


def test_cli_threads_env_override(tmp_path, monkeypatch):
    cfgpath = write_config(tmp_path, BASIC)
    seen = {}
    import markerflow.cli as cli_mod

    def fake_run(cfg):
        seen["threads"] = cfg.threads
        from markerflow.experiments import RunResult
        return RunResult()

    monkeypatch.setattr(cli_mod, "run_experiment_kind", fake_run)
    monkeypatch.setenv("MARKERFLOW_THREADS", "7")
    assert cli.main(["run", cfgpath, "--out", str(tmp_path / "o"), "--threads", "2"]) == 0
    assert seen["threads"] == 7


def test_cli_bad_threads_env(tmp_path, monkeypatch, capsys):
    cfgpath = write_config(tmp_path, BASIC)
    monkeypatch.setenv("MARKERFLOW_THREADS", "lots")
    assert cli.main(["run", cfgpath, "--out", str(tmp_path / "o")]) == 1


def test_cli_integration_failure_exits_2(tmp_path, monkeypatch, capsys):
    cfgpath = write_config(tmp_path, BASIC)
    import markerflow.cli as cli_mod

    def boom(cfg):
        raise IntegrationError("blow-up at t=0.5")

    monkeypatch.setattr(cli_mod, "run_experiment_kind", boom)
    rc = cli.main(["run", cfgpath, "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "integration failure" in capsys.readouterr().err


def test_pgm_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    omega = rng.uniform(-1.0, 1.0, size=(32, 32))
    path = str(tmp_path / "field.pgm")
    output.write_pgm(path, omega, -1.0, 1.0)
    back = output.read_pgm(path, -1.0, 1.0)
    # one 8-bit quantization level of the [-1, 1] range
    assert np.max(np.abs(back - omega)) <= 2.0 / 255


def test_records_csv_layout(tmp_path):
    path = str(tmp_path / "records.csv")
    output.write_records_csv(path, [
        {"t": 0.0, "beta": 10.0, "l1_error": 0.5},
        {"t": 0.5, "beta": 10.0, "l1_error": 0.25},
    ])
    lines = open(path).read().splitlines()
    assert lines[0].split(",")[:2] == ["t", "beta"]
    assert len(lines) == 3


def test_tieset_filename_convention():
    assert output.tieset_filename(0, 1, "40", 0.25) == "tieset_12_40_0.2500.csv"
