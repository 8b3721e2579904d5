import numpy as np
import pytest

from twodomain.errors import ConfigError, EmptyControlSetError
from twodomain.interface import (
    ANY,
    interface_control_set,
    interface_value,
    mixing_coefficient,
    tangential_hamiltonian,
)
from twodomain.problem import builtin_problem, parametric_problem


def test_mixing_coefficient():
    assert mixing_coefficient(1.0, -1.0) == 0.5
    assert mixing_coefficient(-1.0, 0.5) == pytest.approx(1.0 / 3.0)
    assert mixing_coefficient(0.0, 0.0) == ANY
    assert mixing_coefficient(1e-14, -1e-14, tol=1e-12) == ANY
    assert mixing_coefficient(1.0, 1.0) is None
    assert mixing_coefficient(-1.0, -0.5) is None
    assert mixing_coefficient(0.0, 1.0) == 1.0
    with pytest.raises(ConfigError):
        mixing_coefficient(np.inf, 1.0)


@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
def test_state_constraint_interface_values(lam):
    problem = builtin_problem("state_constraint", lam)
    mixed = interface_value(problem)
    assert mixed.value == pytest.approx(1.0 / lam, abs=1e-14)
    assert mixed.minimizer.alpha1[0] == 1.0
    assert mixed.minimizer.alpha2[0] == -1.0
    assert mixed.minimizer.mu == 0.5
    assert interface_value(problem, regular_only=True).value == pytest.approx(2.0 / lam, abs=1e-14)


@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
def test_pull_pull_interface_values(lam):
    problem = builtin_problem("pull_pull", lam)
    mixed = interface_value(problem)
    assert mixed.value == 0.0
    assert mixed.minimizer.singular
    assert not mixed.minimizer.regular
    regular = interface_value(problem, regular_only=True)
    assert regular.value == pytest.approx(1.0 / lam, abs=1e-14)
    # Ties in cost go to the smallest controls
    assert regular.minimizer.alpha1[0] == 0.0
    assert regular.minimizer.alpha2[0] == 0.0


def test_push_push_interface_values():
    problem = builtin_problem("push_push", 1.0)
    mixed = interface_value(problem)
    assert mixed.value == 0.0
    assert mixed.minimizer.regular
    assert interface_value(problem, regular_only=True).value == 0.0


def test_interface_controls_have_zero_normal_drift():
    problem = builtin_problem("pull_pull", 1.0, control_resolution=0.5)
    controls = interface_control_set(problem)
    assert controls
    for ic in controls:
        drift = ic.mu * ic.alpha1[0] + (1.0 - ic.mu) * ic.alpha2[0]
        assert abs(drift) <= 1e-12
        assert ic.normal_residual <= 1e-12
    regular = interface_control_set(problem, regular_only=True)
    assert all(ic.regular for ic in regular)
    assert len(regular) < len(controls)


@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
def test_tangential_hamiltonian_vanishes_at_interface_value(lam):
    problem = builtin_problem("pull_pull", lam)
    assert tangential_hamiltonian(problem, 0.0, 1.0 / lam, regular_only=True) == pytest.approx(0.0, abs=1e-12)
    assert tangential_hamiltonian(problem, 0.0, 0.0) == pytest.approx(0.0, abs=1e-12)
    push = builtin_problem("push_push", lam)
    assert tangential_hamiltonian(push, 0.0, 0.0) == pytest.approx(0.0, abs=1e-12)


def test_empty_interface_set():
    coefs = {"c0": 1.0}
    problem = parametric_problem(1, 1.0, 1.0, {"min": 0.5, "max": 1.0, "resolution": 0.5}, coefs, coefs)
    assert interface_control_set(problem) == []
    with pytest.raises(EmptyControlSetError, match="empty"):
        tangential_hamiltonian(problem, 0.0, 0.0)
    with pytest.raises(EmptyControlSetError):
        interface_value(problem)


def test_state_off_hyperplane_is_rejected():
    with pytest.raises(ConfigError):
        interface_control_set(builtin_problem("sc"), 0.1)


def test_higher_dimension_needs_explicit_tangential_assumption():
    coefs = {"c0": 1.0, "c1": -1.0}
    problem = parametric_problem(2, 1.0, 1.0, {"min": -1.0, "max": 1.0, "resolution": 1.0}, coefs, coefs)
    with pytest.raises(ConfigError):
        interface_value(problem, [0.0, 0.0])
    value = interface_value(problem, [0.0, 0.0], assume_zero_tangential_gradient=True)
    assert np.isfinite(value.value)
    assert tangential_hamiltonian(problem, [0.5, 0.0], value.value, p_h=[0.0]) == pytest.approx(0.0, abs=1e-12)
