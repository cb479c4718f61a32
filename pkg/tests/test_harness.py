import filecmp
from dataclasses import replace

import numpy as np
import pytest

from gapstrand import harness, svg
from gapstrand.cli import main
from gapstrand.config import default_config, dumps
from gapstrand.errors import InexcitableError
from gapstrand.geometry import SubunitGeometry


@pytest.fixture(scope="module")
def tiny():
    cfg = default_config()
    return replace(
        cfg,
        t_end=31.0,
        continuum_nodes=201,
        geometry=SubunitGeometry(n_cells_x=20, nodes_per_cell=120),
        calibration_cells=10,
        calibration_station=0.5,
    )


def _fixed(cfg, models, amplitude=1.0):
    cfg = cfg.select(models)
    return replace(cfg, models=tuple(replace(m, amplitude=amplitude) for m in cfg.models))


@pytest.fixture(scope="module")
def base_run(tiny, tmp_path_factory):
    out = tmp_path_factory.mktemp("base")
    return _fixed(tiny, ["Base"]), out, harness.run_matrix(_fixed(tiny, ["Base"]), out)


def test_base_only_matrix(base_run):
    cfg, out, result = base_run
    assert result.ok and len(result.runs) == 2
    for s in ("continuum", "discrete"):
        for f in ("traces.csv", "snapshot_15ms.csv", "snapshot_30ms.csv", "metadata.json"):
            assert (out / "Base" / s / f).exists()
    assert len((out / "comparison.csv").read_text().splitlines()) == 3
    assert (out / "tensors.csv").read_text().splitlines()[1].startswith("Base,0.0875,")
    assert svg.count_curves((out / "plots" / "overlay_30ms.svg").read_text()) == 2
    header = (out / "Base" / "discrete" / "snapshot_30ms.csv").read_text().splitlines()[0]
    assert header == "x,y,phi_i,phi_e,v"


def test_matrix_is_bitwise_deterministic(base_run, tmp_path):
    cfg, out, _ = base_run
    harness.run_matrix(cfg, tmp_path)
    files = sorted(p.relative_to(out) for p in out.rglob("*") if p.is_file())
    assert files == sorted(p.relative_to(tmp_path) for p in tmp_path.rglob("*") if p.is_file())
    for f in files:
        assert filecmp.cmp(out / f, tmp_path / f, shallow=False), f


def test_record_round_trip(base_run):
    cfg, out, result = base_run
    rec = harness.read_record(out / "Base" / "continuum")
    orig = result.runs[0].record
    np.testing.assert_allclose(rec.traces, orig.traces, rtol=1e-9, atol=1e-9)
    assert rec.metadata["crossing_time"] == orig.metadata["crossing_time"]
    assert sorted(rec.snapshots) == sorted(orig.snapshots)


def test_calibration_is_reproducible_and_propagates(tiny):
    a = harness.calibrate_stimulus(tiny, "Base", "continuum")
    b = harness.calibrate_stimulus(tiny, "Base", "continuum")
    assert a == b
    assert np.isfinite(a.amplitude) and a.amplitude == 1.5 * a.threshold
    g = replace(tiny.geometry, n_cells_x=tiny.calibration_cells)
    fired = [ok for amp, ok in a.trials if amp == a.threshold]
    assert fired == [True]
    rec = harness.simulate(tiny, "Base", "continuum", a.amplitude, geometry=g, continuum_nodes=101)
    assert rec.propagated


def test_discrete_calibration(tiny):
    c = harness.calibrate_stimulus(tiny, "1", "discrete")
    assert 0 < c.threshold < 2048
    assert any(ok is False for _, ok in c.trials)


def test_zero_amplitude_never_propagates(tiny):
    assert not harness.simulate(tiny, "Base", "continuum", 0.0).propagated


def test_inexcitable_configuration(tiny, monkeypatch):
    monkeypatch.setattr(harness, "BRACKET_MAX_EXPONENT", 0)
    cfg = replace(tiny, stim_end=tiny.stim_start + 0.02)
    with pytest.raises(InexcitableError, match="inexcitable configuration"):
        harness.calibrate_stimulus(cfg, "1", "continuum")
    result = harness.run_one(cfg, "1", "continuum")
    assert not result.ok and "inexcitable" in result.status


def test_cli_tensors(tmp_path, capsys):
    assert main(["tensors", "--out", str(tmp_path)]) == 0
    assert len((tmp_path / "tensors.csv").read_text().splitlines()) == 8


def test_cli_rejects_bad_config_before_running(tmp_path, capsys):
    text = dumps(default_config()).replace("sigma_g = 0.175", "sigma_g = -0.175")
    cfg_file = tmp_path / "bad.ini"
    cfg_file.write_text(text)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg_file), "--out", str(out)]) == 2
    assert "sigma_g must be positive" in capsys.readouterr().err
    assert not out.exists()


def test_cli_run_plot_and_failure_status(tiny, tmp_path, capsys):
    cfg = _fixed(tiny, ["Base"], amplitude=1.0)
    cfg_file = tmp_path / "ok.ini"
    cfg_file.write_text(dumps(replace(cfg, t_end=16.0)))
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg_file), "--out", str(out), "--solver", "continuum"]) == 0
    assert "1/1 runs completed" in capsys.readouterr().out
    (out / "plots" / "snapshots.svg").unlink()
    assert main(["plot", "--config", str(cfg_file), "--out", str(out), "--solver", "continuum"]) == 0
    assert (out / "plots" / "snapshots.svg").exists()

    # a divergent stimulus fails its run, and the exit code says so
    boom = _fixed(tiny, ["Base"], amplitude=1e5)
    cfg_file.write_text(dumps(replace(boom, t_end=16.0)))
    assert main(["run", "--config", str(cfg_file), "--out", str(tmp_path / "bad"), "--solver", "continuum"]) == 1
    text = capsys.readouterr().out
    assert "failed:" in text and "0/1 runs completed" in text


def test_cli_overrides(tmp_path, capsys):
    assert main(["calibrate", "--models", "Base", "--solver", "continuum", "--continuum-nodes", "101",
                 "--out", str(tmp_path)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "model,solver,threshold,amplitude,trials"
    assert lines[1].startswith("Base,continuum,")


def test_svg_is_deterministic():
    p = svg.Panel("t", "x", "y", (0, 1), (0, 1)).add([0, 0.5, 1], [0, 1, 0], "a")
    assert svg.render([p]) == svg.render([p])
    assert svg.render([p]).startswith("<svg") and svg.count_curves(svg.render([p, p])) == 2


def test_default_matrix_size():
    cfg = default_config()
    assert len([(m, s) for m in cfg.models for s in cfg.solvers]) == 14
