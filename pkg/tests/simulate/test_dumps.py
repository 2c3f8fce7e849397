import csv

import numpy as np

from membrane.model.coefficients import DiffusionSpec
from membrane.simulate.dumps import write_boundary_csv, write_paths_csv
from membrane.simulate.localtime import attach_eta
from membrane.simulate.paths import PathBundle
from membrane.simulate.timechange import apply_time_change, extract_boundary_process


def _sitting_path(point, steps, r):
    path = PathBundle(path_ids=np.arange(1), base_times=np.arange(steps + 1.0), base_states=np.zeros((1, steps + 1)))
    attach_eta(path, point, eps=0.5)
    return apply_time_change(path, DiffusionSpec(dim=1, r=r), point)


def _read(path):
    with path.open(newline="") as fh:
        return list(csv.reader(fh))


def test_paths_csv(tmp_path, point):
    bundle = _sitting_path(point, steps=2, r=1.0)
    rows = _read(write_paths_csv(tmp_path / "dump" / "paths.csv", [bundle], point))
    assert rows[0] == ["path_id", "t", "x_1", "eta", "gamma", "on_band"]
    body = rows[1:]
    assert len(body) == 3
    assert [float(r[1]) for r in body] == [0.0, 1.0, 2.0]
    assert [float(r[4]) for r in body] == [0.0, 1.0, 1.0]
    assert {r[5] for r in body} == {"1"}


def test_boundary_csv_marks_the_cemetery(tmp_path, point):
    bp = extract_boundary_process(_sitting_path(point, steps=4, r=0.0), point, [0.0, 1.5, 10.0])
    rows = _read(write_boundary_csv(tmp_path / "boundary.csv", [bp]))
    assert rows[0] == ["path_id", "theta", "tau", "y_1"]
    assert len(rows) == 4
    assert rows[1][2] == "0"
    assert rows[3][2:] == ["inf", ""]
