"""Shared fixtures: surfaces, coefficients, small schemes and an isolated environment."""

import pytest

import shared.config as shared_config
import shared.database as shared_database
from membrane.model.coefficients import DiffusionSpec
from membrane.model.surface import Surface
from membrane.simulate.scheme import SimScheme


@pytest.fixture
def point():
    return Surface.point(0.0)


@pytest.fixture
def circle():
    return Surface.sphere([0.0, 0.0], 1.0, quadrature_order=16)


@pytest.fixture
def null_spec():
    return DiffusionSpec(dim=1, b=1.0, q=0.0, r=0.0)


@pytest.fixture
def skew_spec():
    return DiffusionSpec(dim=1, b=1.0, q=0.5, r=0.0)


@pytest.fixture
def sticky_spec():
    return DiffusionSpec(dim=1, b=1.0, q=0.5, r=1.0)


@pytest.fixture
def small_scheme():
    return SimScheme(dt=2e-3, t_end=0.5, eps=0.02, seed=1234, chunk_size=500)


@pytest.fixture
def isolated_env(tmp_path, monkeypatch):
    """Fresh process configuration writing logs, ledger and runs under tmp_path."""
    monkeypatch.setenv("LOG_FILE_PATH", "")
    monkeypatch.setenv("MEMBRANE_DATABASE_URL", f"sqlite:///{tmp_path / 'ledger.db'}")
    monkeypatch.setenv("MEMBRANE_OUTPUT_DIR", str(tmp_path / "runs"))
    monkeypatch.setenv("MEMBRANE_WORKERS", "1")
    monkeypatch.delenv("MEMBRANE_CHUNK_SIZE", raising=False)
    monkeypatch.setattr(shared_config, "_config", None)
    monkeypatch.setattr(shared_database, "db", None)
    return tmp_path
