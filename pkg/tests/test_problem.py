import numpy as np
import pytest

from twodomain.errors import ConfigError
from twodomain.problem import (
    ControlSet,
    builtin_problem,
    check_assumptions,
    eval_hamiltonian,
    make_query,
    parametric_problem,
    sampled_bounds,
)


@pytest.mark.parametrize("alias", ["sc", "state_constraint", "State-Constraint"])
def test_aliases_resolve_to_the_same_problem(alias):
    problem = builtin_problem(alias)
    assert problem.name == "state_constraint"
    assert problem.to_dict()["side1"] == {"c0": 1.0, "c1": -1.0, "c2": 1.0, "c3": 0.0}


def test_unknown_builtin_is_rejected():
    with pytest.raises(ConfigError):
        builtin_problem("pull_push")


def test_resolution_must_keep_unit_controls():
    with pytest.raises(ConfigError):
        builtin_problem("pull_pull", control_resolution=0.3)
    problem = builtin_problem("pull_pull", control_resolution=0.5)
    assert problem.side1.controls[:, 0].tolist() == [-1.0, -0.5, 0.0, 0.5, 1.0]


def test_hamiltonian_at_origin():
    problem = builtin_problem("state_constraint", 1.0)
    out = eval_hamiltonian(problem, 1, make_query(0.0, 0.0, 0.0))
    assert out.value == pytest.approx(-1.0, abs=1e-14)
    assert out.control[0] == 1.0


@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
def test_state_constraint_hamiltonian_matches_formula(lam):
    problem = builtin_problem("sc", lam)
    for x in (-1.5, -0.2, 0.3, 2.0):
        for u in (-1.0, 0.0, 0.7):
            for p in (-2.0, 0.0, 1.0, 3.5):
                side = 1 if x > 0 else 2
                # Side 2 mirrors the drift direction in the cost
                expected = abs(p - 1.0 if side == 1 else p + 1.0) + lam * u - np.exp(-abs(x)) - 1.0
                value = eval_hamiltonian(problem, side, make_query(x, u, p)).value
                assert value == pytest.approx(expected, abs=1e-12)


def test_query_rejects_non_finite_entries():
    with pytest.raises(ConfigError):
        make_query(0.0, np.nan, 0.0)
    with pytest.raises(ConfigError):
        make_query([0.0, 1.0], 0.0, 0.0)


def test_control_set_validation():
    with pytest.raises(ConfigError):
        ControlSet([0.0, 0.0, 1.0])
    with pytest.raises(ConfigError):
        ControlSet([-2.0, 0.0])
    with pytest.raises(ConfigError):
        ControlSet.grid(-1.0, 1.0, 0.7)
    grid = ControlSet.grid(-1.0, 1.0, 1.0, dim=2)
    assert len(grid) == 9
    assert grid.index_of([1.0, -1.0]) is not None
    assert grid.index_of([0.5, 0.0]) is None


@pytest.mark.parametrize("name", ["state_constraint", "push_push", "pull_pull"])
def test_builtins_satisfy_assumptions(name):
    problem = builtin_problem(name, 1.0)
    report = check_assumptions(problem, np.linspace(-3.0, 3.0, 13))
    assert report.passed
    assert report.speed_bound == 1.0
    assert report.lipschitz == {"side1": 0.0, "side2": 0.0}
    assert list(report.samples.columns) == ["x", "margin1", "side1_ok", "margin2", "side2_ok", "ok"]


def test_one_sided_controls_fail_controllability():
    coefs = {"c0": 1.0}
    problem = parametric_problem(1, 1.0, 1.0, {"min": 0.0, "max": 1.0, "resolution": 1.0}, coefs, coefs)
    report = check_assumptions(problem, [[-1.0], [1.0]])
    assert not report.passed
    assert report.samples["margin1"].max() == pytest.approx(-1.0)


def test_sampled_bounds_pull_pull():
    problem = builtin_problem("pull_pull", 1.0)
    speed, cost = sampled_bounds(problem, [[-2.0], [0.0], [2.0]])
    assert speed == 1.0
    assert cost == pytest.approx(4.0)


def test_discount_must_be_positive():
    with pytest.raises(ConfigError):
        builtin_problem("push_push", lam=0.0)
