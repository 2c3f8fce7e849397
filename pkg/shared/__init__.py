"""Shared module for the membrane toolkit."""

from .config import Config, RunConfig, get_config, load_config
from .database import (
    Base,
    CheckRecord,
    Database,
    Run,
    get_db,
    init_database,
)

__all__ = [
    "Config",
    "RunConfig",
    "get_config",
    "load_config",
    "Base",
    "CheckRecord",
    "Database",
    "Run",
    "get_db",
    "init_database",
]
