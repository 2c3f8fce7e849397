"""Tests for process settings and run files."""

import json

import numpy as np
import pytest

from membrane.errors import ConfigError
from membrane.model.coefficients import TabulatedMatrix
from membrane.model.surface import SurfaceKind
from shared import Config, RunConfig, get_config, load_config


def test_defaults_build_a_valid_experiment():
    config = RunConfig()
    assert config.surface.dim == 1
    assert config.build_surface().kind is SurfaceKind.POINT
    spec = config.build_spec()
    assert spec.dim == 1
    scheme = config.build_scheme()
    assert scheme.seed == 0 and scheme.dt == config.scheme.dt
    assert config.build_start().tolist() == [0.0]


def test_default_pde_grid_is_accepted():
    grid = RunConfig().build_pde_grid(t_end=0.01)
    assert grid.dt == pytest.approx(2e-4)


def test_unknown_keys_are_rejected():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"scheme": {"dt": 1e-3, "typo": 1}})


def test_skew_out_of_range_is_rejected():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"coefficients": {"q": 1.5}})


def test_start_must_match_surface_dimension():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"surface": {"kind": "sphere", "center": [0.0, 0.0]}, "scheme": {"start": [0.5]}})


def test_battery_times_must_fit_the_horizon():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"scheme": {"t_end": 0.5}, "battery": {"times": [1.0]}})


def test_bump_must_be_ordered():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"battery": {"bump": [0.5, 0.1]}})


def test_hyperplane_needs_normal():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"surface": {"kind": "hyperplane"}})


def test_hyperplane_has_no_interface_grid():
    config = RunConfig.from_dict(
        {"surface": {"kind": "hyperplane", "normal": [1.0, 0.0]}, "scheme": {"start": [0.0, 0.0]}}
    )
    with pytest.raises(ConfigError):
        config.build_pde_grid()


def test_hash_ignores_output_dir_only():
    base = RunConfig()
    assert base.config_hash() == base.with_overrides(output_dir="elsewhere").config_hash()
    assert base.config_hash() != base.with_overrides(seed=1).config_hash()
    assert base.config_hash() != base.with_overrides(**{"scheme.chunk_size": 17}).config_hash()
    assert len(base.config_hash()) == 64


def test_overrides_use_dotted_keys_and_skip_none():
    config = RunConfig().with_overrides(**{"scheme.dt": 5e-4, "coefficients.q": 0.25, "scheme.eps": None})
    assert config.scheme.dt == 5e-4
    assert config.coefficients.q == 0.25
    assert config.scheme.eps == RunConfig().scheme.eps


def test_overrides_are_revalidated():
    with pytest.raises(ConfigError):
        RunConfig().with_overrides(**{"scheme.dt": -1.0})


def test_toml_run_file(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(
        'seed = 42\n\n[coefficients]\nq = 0.5\nr = 1.0\n\n[scheme]\nt_end = 0.5\nn_paths = 100\n\n'
        '[battery]\ntimes = [0.5]\n'
    )
    config = RunConfig.load(path)
    assert config.seed == 42
    assert config.coefficients.r == 1.0
    assert config.scheme.n_paths == 100


def test_cfg_suffix_is_read_as_toml(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("seed = 3\n")
    assert RunConfig.load(path).seed == 3


def test_json_run_file_matches_dump(tmp_path):
    original = RunConfig().with_overrides(seed=2**64 - 1, **{"coefficients.q": -0.3})
    path = tmp_path / "run.json"
    path.write_text(original.dump())
    loaded = RunConfig.load(path)
    assert loaded == original
    assert loaded.config_hash() == original.config_hash()
    assert json.loads(original.dump())["seed"] == 2**64 - 1


TABULATED_B = "[coefficients]\nb = { nodes = [-1.0, 0.0, 1.0], values = [1.0, 2.0, 4.0] }\n"
TABULATED_CIRCLE = (
    "[surface]\nkind = \"sphere\"\ncenter = [0.5, 0.0]\nradius = 1.0\n\n"
    "[coefficients]\nq = { angles = [0.0, 3.141592653589793], values = [0.5, -0.5] }\n"
    "r = { angles = [0.0], values = [2.0] }\n\n[scheme]\nstart = [0.5, 0.0]\n"
)


def test_tabulated_b_run_file(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(TABULATED_B)
    config = RunConfig.load(path)
    spec = config.build_spec()
    assert isinstance(spec.matrix_field, TabulatedMatrix)
    assert not spec.is_constant
    assert spec.b_at(0.5)[0, 0] == pytest.approx(3.0)
    assert spec.b_at(-3.0)[0, 0] == pytest.approx(1.0)


def test_tabulated_skew_and_delay_on_a_circle(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(TABULATED_CIRCLE)
    spec = RunConfig.load(path).build_spec()
    assert not spec.q.is_constant
    # polar angles are taken about the circle centre
    points = np.array([[1.5, 0.0], [-0.5, 0.0], [0.5, 1.0]])
    assert spec.q(points) == pytest.approx([0.5, -0.5, 0.0])
    assert spec.r(points) == pytest.approx([2.0, 2.0, 2.0])


@pytest.mark.parametrize("text", [TABULATED_B, TABULATED_CIRCLE])
def test_tabulated_coefficients_survive_json_dump(tmp_path, text):
    (tmp_path / "run.toml").write_text(text)
    original = RunConfig.load(tmp_path / "run.toml")
    (tmp_path / "run.json").write_text(original.dump())
    loaded = RunConfig.load(tmp_path / "run.json")
    assert loaded == original
    assert loaded.config_hash() == original.config_hash()
    assert loaded.config_hash() != RunConfig().config_hash()


@pytest.mark.parametrize(
    "data",
    [
        {"coefficients": {"q": {"angles": [0.0, 1.0], "values": [0.2, 0.3]}}},
        {"coefficients": {"b": {"nodes": [0.0, 1.0], "values": [1.0, 2.0]}}, "surface": {"kind": "sphere", "center": [0.0, 0.0]}, "scheme": {"start": [0.0, 0.0]}},
        {"coefficients": {"b": {"nodes": [1.0, 0.0], "values": [1.0, 2.0]}}},
        {"coefficients": {"b": {"nodes": [0.0, 1.0], "values": [1.0, -2.0]}}},
        {"coefficients": {"q": {"angles": [0.0, 1.0], "values": [0.2, 1.3]}}, "surface": {"kind": "sphere", "center": [0.0, 0.0]}, "scheme": {"start": [0.0, 0.0]}},
        {"coefficients": {"r": {"angles": [0.0, 7.0], "values": [1.0, 1.0]}}, "surface": {"kind": "sphere", "center": [0.0, 0.0]}, "scheme": {"start": [0.0, 0.0]}},
        {"coefficients": {"r": -0.5}},
    ],
)
def test_bad_tabulated_coefficients_are_rejected(data):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(data)


@pytest.mark.parametrize("text", ["seed = ", "[scheme\n"])
def test_unparseable_run_file(tmp_path, text):
    path = tmp_path / "bad.toml"
    path.write_text(text)
    with pytest.raises(ConfigError):
        RunConfig.load(path)


def test_missing_run_file(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig.load(tmp_path / "absent.toml")


def test_settings_from_environment(isolated_env, monkeypatch):
    monkeypatch.setenv("MEMBRANE_WORKERS", "3")
    monkeypatch.setenv("MEMBRANE_CHUNK_SIZE", "64")
    monkeypatch.setenv("LOG_LEVEL", "debug")
    config = Config.from_env()
    assert config.workers == 3
    assert config.chunk_size == 64
    assert config.log_level == "DEBUG"
    assert config.output_dir == str(isolated_env / "runs")
    assert config.ledger_enabled


def test_empty_database_url_disables_ledger(isolated_env, monkeypatch):
    monkeypatch.setenv("MEMBRANE_DATABASE_URL", "")
    assert not Config.from_env().ledger_enabled


@pytest.mark.parametrize("name, value", [("MEMBRANE_WORKERS", "many"), ("MEMBRANE_CHUNK_SIZE", "0")])
def test_bad_settings(isolated_env, monkeypatch, name, value):
    monkeypatch.setenv(name, value)
    with pytest.raises(ConfigError):
        Config.from_env()


def test_load_config_caches(isolated_env):
    with pytest.raises(RuntimeError):
        get_config()
    config = load_config()
    assert get_config() is config
    assert load_config() is config
