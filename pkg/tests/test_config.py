import anyio
import pytest

from cqedfit.shared.config import Config, expand_grid
from cqedfit.shared.config_keys import ConfigKeys
from cqedfit.shared.exceptions import ConfigurationError, InputNotFoundError


def _load(path=None) -> Config:
    config = Config(None if path is None else str(path))
    anyio.run(config.load)
    return config


def test_defaults_without_file():
    config = _load()
    assert config.get(ConfigKeys.PHYSICS_KAPPA_UEV) == 110.0
    assert config.get(ConfigKeys.RUN_SEED) == 0
    assert config.get(ConfigKeys.RUN_THREADS) is None
    assert config.get_grid(ConfigKeys.GRID_SIGMA_SD)[:3] == [0.0, 5.0, 10.0]
    assert config.get_grid(ConfigKeys.GRID_SIGMA_SD)[-1] == 150.0
    assert len(config.get_grid(ConfigKeys.GRID_SIGMA_SD)) == 31


def test_yaml_values_override_defaults(write_config):
    path = write_config(
        {
            "physics": {"kappa_uev": 150, "sigma_vib_uev": 679.0},
            "grids": {"sigma_sd": [0, 40, 80]},
            "run": {"seed": 7},
        }
    )
    config = _load(path)
    assert config.get_float(ConfigKeys.PHYSICS_KAPPA_UEV) == 150.0
    assert config.get(ConfigKeys.PHYSICS_SIGMA_VIB_UEV) == 679.0
    assert config.get_grid(ConfigKeys.GRID_SIGMA_SD) == [0.0, 40.0, 80.0]
    assert config.get(ConfigKeys.RUN_SEED) == 7
    assert config.get(ConfigKeys.PHYSICS_DELTA_UEV) == 700.0


def test_environment_overrides_file(write_config, monkeypatch):
    path = write_config({"physics": {"kappa_uev": 150}})
    monkeypatch.setenv("CQEDFIT_PHYSICS_KAPPA_UEV", "95.5")
    monkeypatch.setenv("CQEDFIT_RUN_SEED", "3")
    config = _load(path)
    assert config.get(ConfigKeys.PHYSICS_KAPPA_UEV) == 95.5
    assert config.get(ConfigKeys.RUN_SEED) == 3


def test_config_path_from_environment(write_config, monkeypatch):
    path = write_config({"physics": {"delta_uev": 650}})
    monkeypatch.setenv("CQEDFIT_CONFIG", str(path))
    assert _load().get(ConfigKeys.PHYSICS_DELTA_UEV) == 650


def test_bad_environment_value(monkeypatch):
    monkeypatch.setenv("CQEDFIT_RUN_SEED", "many")
    with pytest.raises(ConfigurationError):
        _load()


def test_missing_config_file(tmp_path):
    with pytest.raises(InputNotFoundError):
        _load(tmp_path / "absent.yaml")


@pytest.mark.parametrize("text", ["- a\n- b\n", "physics: [unclosed\n"])
def test_unreadable_config_file(tmp_path, text):
    path = tmp_path / "config.yaml"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(ConfigurationError):
        _load(path)


def test_empty_config_file(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("", encoding="utf-8")
    assert _load(path).get(ConfigKeys.RUN_OUT_DIR) == "out"


@pytest.mark.parametrize(
    "data",
    [
        {"grids": {"sigma_sd": []}},
        {"grids": {"sigma_sd": [10, 5]}},
        {"grids": {"sigma_sd": [-5, 0, 5]}},
        {"grids": {"sigma_sd": {"start": 0, "stop": 100, "step": 0}}},
        {"grids": {"energy": "wide"}},
        {"physics": {"kappa_uev": -110}},
        {"physics": {"kappa_uev": True}},
        {"physics": {"delta_uev": "700"}},
        {"physics": {"sigma_vib_uev": -1}},
        {"run": {"threads": 0}},
        {"run": {"seed": 1.5}},
        {"log": {"level": "LOUD"}},
    ],
)
def test_invalid_values_are_config_errors(write_config, data):
    with pytest.raises(ConfigurationError):
        _load(write_config(data))


def test_expand_grid_includes_stop():
    assert expand_grid({"start": 0, "stop": 1, "step": 0.25}, "grid") == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert expand_grid({"start": 0, "stop": 0.9, "step": 0.25}, "grid") == [0.0, 0.25, 0.5, 0.75]
    assert expand_grid({"start": 3, "stop": 3, "step": 1}, "grid") == [3.0]
    with pytest.raises(ConfigurationError):
        expand_grid({"start": 0, "stop": 1}, "grid")


def test_required_values():
    config = Config()
    config.set(ConfigKeys.INPUT_SPECTRUM, "  ")
    with pytest.raises(ConfigurationError):
        config.get_required(ConfigKeys.INPUT_SPECTRUM)
    with pytest.raises(ConfigurationError):
        config.get_float(ConfigKeys.PHYSICS_TAU_FS_PS)


def test_inputs_resolve_next_to_config(write_config, tmp_path, monkeypatch):
    (tmp_path / "data").mkdir()
    (tmp_path / "data" / "spectrum.csv").write_text("0,1\n1,2\n", encoding="utf-8")
    path = write_config({"inputs": {"spectrum": "data/spectrum.csv", "decay": "data/decay.csv"}})
    monkeypatch.chdir(tmp_path.parent)
    config = _load(path)
    assert config.resolve_input(ConfigKeys.INPUT_SPECTRUM) == tmp_path / "data" / "spectrum.csv"
    with pytest.raises(InputNotFoundError):
        config.resolve_input(ConfigKeys.INPUT_DECAY)
    with pytest.raises(ConfigurationError):
        config.resolve_input(ConfigKeys.INPUT_IRF)
