"""
CSV dumps of paths and boundary processes.
"""

import csv
from pathlib import Path
from typing import Optional

import numpy as np

from membrane.model.surface import Surface
from membrane.simulate.paths import BoundaryPath, PathBundle


def write_paths_csv(path_file: Path, bundles: list[PathBundle], surface: Surface, eps: Optional[float] = None) -> Path:
    """Rows (path_id, t, x_1..x_d, eta, gamma, on_band) on the physical grid, ordered by path then time."""
    path_file = Path(path_file)
    path_file.parent.mkdir(parents=True, exist_ok=True)
    dim = bundles[0].dim
    with path_file.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path_id", "t", *[f"x_{i + 1}" for i in range(dim)], "eta", "gamma", "on_band"])
        for bundle in bundles:
            band = eps if eps is not None else bundle.eps
            on_band = (surface.unsigned_distance(bundle.states) < band) | bundle.held
            # eta on the physical clock is eta(zeta_t), which is gamma off the delays
            eta_t = np.stack([np.interp(bundle.zeta[i], bundle.base_times, bundle.eta[i]) for i in range(bundle.n_paths)])
            for i, pid in enumerate(bundle.path_ids):
                for m, t in enumerate(bundle.times):
                    writer.writerow(
                        [int(pid), f"{t:.10g}", *[f"{v:.12g}" for v in bundle.states[i, m]],
                         f"{eta_t[i, m]:.12g}", f"{bundle.gamma[i, m]:.12g}", int(on_band[i, m])]
                    )
    return path_file


def write_boundary_csv(path_file: Path, boundaries: list[BoundaryPath]) -> Path:
    """Rows (path_id, theta, tau, y_1..y_d); cemetery rows carry tau=inf and empty y."""
    path_file = Path(path_file)
    path_file.parent.mkdir(parents=True, exist_ok=True)
    dim = boundaries[0].y.shape[-1]
    with path_file.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path_id", "theta", "tau", *[f"y_{i + 1}" for i in range(dim)]])
        for bp in boundaries:
            for i, pid in enumerate(bp.path_ids):
                for j, theta in enumerate(bp.thetas):
                    tau = bp.tau[i, j]
                    ys = ["" if not np.isfinite(v) else f"{v:.12g}" for v in bp.y[i, j]]
                    writer.writerow([int(pid), f"{theta:.10g}", "inf" if not np.isfinite(tau) else f"{tau:.10g}", *ys])
    return path_file
