"""End-to-end tests for the batch command line."""

import json

import pytest

from cli import dispatch
from cli.app import EXIT_PASS, EXIT_USAGE
from shared import Database, RunConfig

SMALL_RUN = """
seed = 21

[scheme]
dt = 2e-3
t_end = 0.2
eps = 0.02
n_paths = 1000
chunk_size = 250

[grids]
dx = 0.05
x_max = 3.0
dt = 1e-3

[battery]
times = [0.2]
phi_width = 0.1
"""


@pytest.fixture
def run_file(isolated_env):
    path = isolated_env / "small.toml"
    path.write_text(SMALL_RUN)
    return path


def _run_dir(out, command, run_file):
    return out / command / RunConfig.load(run_file).config_hash()[:12]


def test_help_exits_cleanly(isolated_env):
    assert dispatch(["--help"]) == EXIT_PASS


@pytest.mark.parametrize("argv", [[], ["teleport"], ["simulate", "--bogus"], ["simulate", "--paths", "many"]])
def test_usage_errors(isolated_env, argv):
    assert dispatch(argv) == EXIT_USAGE


def test_missing_run_file(isolated_env):
    assert dispatch(["simulate", "--config", str(isolated_env / "absent.toml")]) == EXIT_USAGE


def test_invalid_override(isolated_env, run_file):
    assert dispatch(["simulate", "--config", str(run_file), "--dt", "-1"]) == EXIT_USAGE


def test_simulate_writes_artifacts(isolated_env, run_file):
    out = isolated_env / "out"
    code = dispatch(["simulate", "--config", str(run_file), "--out", str(out)])
    run_dir = _run_dir(out, "simulate", run_file)

    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert manifest["exit_code"] == code
    assert manifest["command"] == "simulate"
    assert manifest["seed"] == "21"
    assert {"null-membrane-law", "skew-neutrality"} <= set(manifest["checks"])
    assert {"endpoints.csv", "paths.csv", "density.csv", "summary.json"} <= set(manifest["artifacts"])

    lines = (run_dir / "endpoints.csv").read_text().splitlines()
    assert lines[0] == "path_id,x_1,gamma,valid"
    assert len(lines) == 1 + 1000


def test_identical_seed_gives_identical_files(isolated_env, run_file):
    first, second = isolated_env / "a", isolated_env / "b"
    dispatch(["simulate", "--config", str(run_file), "--out", str(first)])
    dispatch(["simulate", "--config", str(run_file), "--out", str(second)])
    a = _run_dir(first, "simulate", run_file) / "endpoints.csv"
    b = _run_dir(second, "simulate", run_file) / "endpoints.csv"
    assert a.read_bytes() == b.read_bytes()


def test_seed_override_changes_the_run(isolated_env, run_file):
    out = isolated_env / "out"
    dispatch(["simulate", "--config", str(run_file), "--out", str(out), "--seed", "22"])
    expected = RunConfig.load(run_file).with_overrides(seed=22).config_hash()[:12]
    assert (out / "simulate" / expected / "manifest.json").exists()


def test_run_is_recorded_in_the_ledger(isolated_env, run_file):
    out = isolated_env / "out"
    code = dispatch(["simulate", "--config", str(run_file), "--out", str(out)])
    db = Database(f"sqlite:///{isolated_env / 'ledger.db'}")
    runs = db.runs_for(RunConfig.load(run_file).config_hash())
    db.close()
    assert len(runs) == 1
    assert runs[0].command == "simulate"
    assert runs[0].exit_code == code
    assert [c.name for c in runs[0].checks] == ["null-membrane-law", "skew-neutrality"]


def test_pde_on_a_small_grid(isolated_env, run_file):
    out = isolated_env / "out"
    code = dispatch(["pde", "--config", str(run_file), "--out", str(out)])
    run_dir = _run_dir(out, "pde", run_file)
    summary = json.loads((run_dir / "summary.json").read_text())
    assert (run_dir / "u.csv").exists()
    # the smoothed step is odd about 1/2 and the membrane is invisible
    assert summary["value"] == pytest.approx(0.5, abs=5e-3)
    assert json.loads((run_dir / "manifest.json").read_text())["exit_code"] == code


def test_refused_grid_is_a_usage_error(isolated_env, run_file):
    out = isolated_env / "out"
    argv = ["pde", "--config", str(run_file), "--out", str(out), "--grid-dx", "0.01", "--grid-dt", "1e-3"]
    assert dispatch(argv) == EXIT_USAGE
    expected = RunConfig.load(run_file).with_overrides(**{"grids.dx": 0.01, "grids.dt": 1e-3}).config_hash()[:12]
    manifest = json.loads((out / "pde" / expected / "manifest.json").read_text())
    assert manifest["exit_code"] == EXIT_USAGE


STICKY_RUN = """
seed = 5

[coefficients]
q = 0.5
r = 1.0

[scheme]
dt = 2e-3
t_end = 0.3
eps = 0.02
n_paths = 1000
chunk_size = 500

[grids]
dx = 0.05
x_max = 3.0
dt = 1e-3

[battery]
times = [0.3]
bump = [0.05, 0.2]
"""


@pytest.mark.slow
def test_verify_on_a_sticky_membrane(isolated_env):
    run_file = isolated_env / "sticky.toml"
    run_file.write_text(STICKY_RUN)
    out = isolated_env / "out"
    code = dispatch(["verify", "--config", str(run_file), "--out", str(out)])
    run_dir = _run_dir(out, "verify", run_file)
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert manifest["exit_code"] == code
    assert {"occupation-identity", "leaves-surface", "rate-scaling"} <= set(manifest["checks"])
    assert (run_dir / "boundary.csv").exists()
    assert (run_dir / "checks" / "occupation-identity.json").exists()


@pytest.mark.slow
def test_potential_and_resolvent_stages(isolated_env, run_file):
    out = isolated_env / "out"
    overrides = ["--config", str(run_file), "--out", str(out), "--lambda", "1.0"]
    dispatch(["potential", *overrides])
    dispatch(["resolvent", *overrides])
    config = RunConfig.load(run_file).with_overrides(**{"battery.lambdas": [1.0]})
    potential_dir = out / "potential" / config.config_hash()[:12]
    resolvent_dir = out / "resolvent" / config.config_hash()[:12]

    checks = json.loads((potential_dir / "manifest.json").read_text())["checks"]
    assert {"average-identity", "flux-condition", "vtilde-refinement", "G0-mass", "G0-closed-form", "inequality-lambda-1"} <= set(checks)
    assert (potential_dir / "G_lambda_1.csv").exists()

    residual = json.loads((resolvent_dir / "residual_lambda-1.json").read_text())
    assert residual["problem"]
    assert (resolvent_dir / "V_lambda-1.csv").exists()


@pytest.mark.slow
def test_all_records_the_cross_checks(isolated_env, run_file):
    out = isolated_env / "out"
    code = dispatch(["all", "--config", str(run_file), "--out", str(out), "--lambda", "1.0"])
    config = RunConfig.load(run_file).with_overrides(**{"battery.lambdas": [1.0]})
    run_dir = out / "all" / config.config_hash()[:12]
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert manifest["exit_code"] == code
    assert {"uniqueness-consistency", "scheme-agreement", "skew-neutrality", "vtilde-refinement"} <= set(manifest["checks"])
    agreement = json.loads((run_dir / "checks" / "scheme-agreement.json").read_text())
    assert agreement["statistics"]["modes"] == ["crossing-resample", "mollified-drift"]
