import pytest

from gapstrand.config import MODEL_TABLE, StudyConfig, default_config, dumps, loads
from gapstrand.errors import ConfigError


def test_shipped_config_is_the_model_table():
    cfg = default_config()
    assert cfg == StudyConfig()
    rows = [(m.model_id, m.sigma_g, m.c_g, m.i_g) for m in cfg.models]
    assert rows == [
        ("Base", 0.175, 0.01, 1), ("1", 0.00175, 0.01, 1), ("2", 0.00175, 0.01, 0),
        ("3", 0.00175, 0.001, 1), ("4", 0.00175, 0.001, 0), ("5", 0.00175, 0.0, 1), ("6", 0.00175, 0.0, 0),
    ]
    assert (cfg.sigma_i, cfg.sigma_e, cfg.c_m, cfg.t_end) == (0.175, 0.7, 0.01, 50.0)
    assert (cfg.stim_start, cfg.stim_end) == (5.0, 10.0)
    g = cfg.geometry
    assert (g.L, g.h, g.h1, g.n_cells_x, g.n_fibres_y) == (0.1, 0.02, 0.01, 100, 2)
    assert len(cfg.models) * len(cfg.solvers) == 14


def test_round_trip():
    cfg = default_config()
    assert loads(dumps(cfg)) == cfg
    custom = cfg.select(["Base", "3"], ["discrete"])
    assert loads(dumps(custom)) == custom
    assert dumps(loads(dumps(custom))) == dumps(custom)


def test_fixed_amplitude_round_trip():
    text = dumps(default_config()).replace("amplitude = auto", "amplitude = 0.75", 1)
    cfg = loads(text)
    assert cfg.models[0].amplitude == 0.75
    assert loads(dumps(cfg)) == cfg


@pytest.mark.parametrize("bad", ["0.0", "-0.001"])
def test_nonpositive_gap_conductivity_rejected_with_line(bad):
    text = dumps(default_config())
    text = text.replace("[model 2]\nsigma_g = 0.00175", f"[model 2]\nsigma_g = {bad}")
    line = text.splitlines().index(f"sigma_g = {bad}  # mS/mm") + 1
    with pytest.raises(ConfigError, match=rf"line {line}: model 2: sigma_g must be positive"):
        loads(text)


def test_all_problems_reported_together():
    text = dumps(default_config())
    text = text.replace("i_g = 0", "i_g = 3", 1).replace("dt = 0.01", "dt = fast").replace("[tissue]", "[tissue]\ncolour = red")
    with pytest.raises(ConfigError) as info:
        loads(text, source="study.ini")
    msg = str(info.value)
    assert "'dt' expects float" in msg
    assert "unknown key 'colour'" in msg
    assert "i_g must be 0 or 1" in msg
    assert msg.count("study.ini:line") == 3


def test_missing_and_unknown_sections():
    with pytest.raises(ConfigError, match="missing 'c_g'"):
        loads("[model X]\nsigma_g = 1\ni_g = 1\n")
    with pytest.raises(ConfigError, match="unknown section"):
        loads(dumps(default_config()) + "\n[extras]\na = 1\n")
    with pytest.raises(ConfigError, match="no \\[model"):
        loads("[study]\ndt = 0.01\n")


def test_select_validation():
    cfg = default_config()
    with pytest.raises(ConfigError):
        cfg.select(["7"])
    with pytest.raises(ConfigError):
        cfg.select(None, ["spectral"])
    assert [m.model_id for m in cfg.select(["3", "Base"]).models] == ["Base", "3"]


def test_model_rows_validate():
    with pytest.raises(ConfigError):
        type(MODEL_TABLE[0])("x", 0.1, -1.0, 1)
