import json

import numpy as np
import pandas as pd
import pytest

from twodomain.errors import ConfigError, UncataloguedError
from twodomain.files import (
    field_to_dict,
    load_problem,
    load_schedule,
    schedule_from_dict,
    to_json,
    write_field,
    write_trajectory,
)
from twodomain.hjb_grid import Grid1D, ValueField
from twodomain.problem import builtin_problem
from twodomain.trajectory import ControlSchedule, Segment, integrate


def _write(path, data):
    path.write_text(json.dumps(data) if not isinstance(data, str) else data, encoding="utf-8")
    return str(path)


def test_load_builtin_by_alias():
    problem = load_problem("pullpull", 0.5)
    assert problem.name == "pull_pull"
    assert problem.lam == 0.5
    assert load_problem("sc").lam == 1.0


def test_load_parametric_json(tmp_path):
    data = {
        "dim": 1,
        "lambda": 2.0,
        "delta": 1.0,
        "control": {"min": -1, "max": 1, "resolution": 0.5},
        "side1": {"c0": 1, "c1": -1},
        "side2": {"c0": 1, "c1": 1},
        "name": "mine",
    }
    problem = load_problem(_write(tmp_path / "p.json", data))
    assert problem.name == "mine"
    assert problem.lam == 2.0
    assert len(problem.side1.control_set) == 5
    assert load_problem(str(tmp_path / "p.json"), lam=0.25).lam == 0.25


def test_load_builtin_json(tmp_path):
    problem = load_problem(_write(tmp_path / "b.json", {"builtin": "push_push", "lambda": 3.0}))
    assert problem.name == "push_push"
    assert problem.lam == 3.0


def test_load_problem_errors(tmp_path):
    with pytest.raises(ConfigError, match="Malformed JSON"):
        load_problem(_write(tmp_path / "bad.json", '{"side1": '))
    with pytest.raises(ConfigError):
        load_problem(_write(tmp_path / "list.json", [1, 2]))
    with pytest.raises(ConfigError):
        load_problem(_write(tmp_path / "half.json", {"lambda": 1.0, "side1": {}}))
    with pytest.raises(ConfigError):
        load_problem(_write(tmp_path / "nolam.json", {"side1": {}, "side2": {}}))
    with pytest.raises(ConfigError):
        load_problem(str(tmp_path / "missing.json"))
    with pytest.raises(ConfigError):
        load_problem(_write(tmp_path / "res.json", {"lambda": 1, "control": {"resolution": 0.7}, "side1": {}, "side2": {}}))
    with pytest.raises(ConfigError, match="must be an object"):
        load_problem(_write(tmp_path / "ctl.json", {"builtin": "pullpull", "control": 3}))
    with pytest.raises(ConfigError, match="must be an object"):
        load_problem(_write(tmp_path / "ctl2.json", {"lambda": 1, "control": [1], "side1": {}, "side2": {}}))


def test_schedule_chaining_and_breakpoints(tmp_path):
    data = {
        "segments": [
            {"alpha1": -1, "alpha2": 1, "mu": 0.0, "until": "hit"},
            {"slide": {"alpha1": -1, "alpha2": 1}},
        ]
    }
    chained = load_schedule(_write(tmp_path / "s.json", data))
    assert chained.segments[0].until_hit
    assert chained.segments[1].slide
    assert chained.breakpoints[0] == 0.0

    timed = schedule_from_dict({"breakpoints": [0.0, 0.5], "segments": data["segments"]})
    assert timed.to_dict()["breakpoints"] == [0.0, 0.5]
    assert timed.to_dict()["segments"] == data["segments"]


@pytest.mark.parametrize(
    "data",
    [
        {},
        {"segments": []},
        {"segments": [{"alpha1": 0}]},
        {"segments": [{"alpha1": 0, "alpha2": 0, "mu": 0.5, "until": "never"}]},
        {"segments": [{"alpha1": 0, "alpha2": 0, "mu": 1.5}]},
        {"breakpoints": [0.5], "segments": [{"alpha1": 0, "alpha2": 0, "mu": 0.5}]},
        {"segments": [{"slide": 3}]},
        {"segments": [{"alpha1": "left", "alpha2": 0, "mu": 0.5}]},
        {"segments": [3]},
        {"breakpoints": ["start"], "segments": [{"alpha1": 0, "alpha2": 0, "mu": 0.5}]},
    ],
)
def test_schedule_errors(data):
    with pytest.raises(ConfigError):
        schedule_from_dict(data)


def test_to_json_handles_numpy():
    text = to_json({"a": np.float64(0.5), "b": np.arange(3), "c": np.bool_(True)}, indent=None)
    assert json.loads(text) == {"a": 0.5, "b": [0, 1, 2], "c": True}


def test_write_field_csv(tmp_path):
    grid = Grid1D(1.0, 0.5)
    field = ValueField(grid, [3.0, 2.0, 1.0, 2.0, 3.0], "U_plus", {"trace": [1.0, 0.1], "iterations": 7})
    path = write_field(field, str(tmp_path / "out" / "u.csv"), "csv", {"lam": 1.0})
    lines = open(path, encoding="utf-8").read().splitlines()
    assert lines[0] == "# kind: U_plus"
    assert json.loads(lines[1][len("# meta: "):]) == {"iterations": 7}
    assert json.loads(lines[2][len("# config: "):]) == {"lam": 1.0}
    df = pd.read_csv(path, comment="#")
    assert list(df.columns) == ["x", "value"]
    assert df["value"].tolist() == [3.0, 2.0, 1.0, 2.0, 3.0]


def test_write_field_json(tmp_path):
    grid = Grid1D(1.0, 0.5)
    field = ValueField(grid, [0.0, 0.5, 1.0], "U_SC1", side=1)
    path = write_field(field, str(tmp_path / "u.json"), "json")
    data = json.load(open(path, encoding="utf-8"))
    assert data == json.loads(to_json(field_to_dict(field)))
    assert data["x"] == [0.0, 0.5, 1.0]
    with pytest.raises(ConfigError):
        write_field(field, str(tmp_path / "u.txt"), "parquet")


def test_write_trajectory(tmp_path):
    schedule = ControlSchedule.of(Segment.fixed(-1.0, 1.0, 1.0))
    traj = integrate(builtin_problem("push_push"), [2.0], schedule, 1.0, 0.1)
    path = write_trajectory(traj, str(tmp_path / "traj.csv"), {"dt": 0.1})
    lines = open(path, encoding="utf-8").read().splitlines()
    assert lines[0].startswith("# summary: ")
    assert json.loads(lines[1][len("# schedule: "):]) == schedule.to_dict()
    df = pd.read_csv(path, comment="#")
    assert list(df.columns) == ["t", "x", "label", "mu", "step_cost"]
    assert len(df) == len(traj.times)


def test_uncatalogued_is_a_key_error():
    assert issubclass(UncataloguedError, KeyError)
