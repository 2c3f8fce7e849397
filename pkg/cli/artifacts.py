"""
CSV/JSON artifact writers and the run manifest.
"""

import csv
import json
import logging
import platform
from importlib import metadata
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

import membrane
from membrane.verify.reports import jsonable

logger = logging.getLogger(__name__)

# Distributions whose versions go into every manifest
TRACKED_PACKAGES = ("numpy", "scipy", "pydantic", "SQLAlchemy", "python-dotenv")


def _cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.12g}"
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    return str(value)


def write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """Plain CSV with fixed float formatting, rows in the order given."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    logger.debug(f"Wrote {path}")
    return path


def write_json(path: Path, payload) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(jsonable(payload), indent=2, sort_keys=True))
    logger.debug(f"Wrote {path}")
    return path


def versions() -> dict:
    """Interpreter, toolkit and numerical stack versions."""
    found = {"python": platform.python_version(), "membrane": membrane.__version__}
    for name in TRACKED_PACKAGES:
        try:
            found[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            found[name] = "unknown"
    return found
