import numpy as np
import pytest

from twodomain.errors import ConfigError
from twodomain.hjb_grid import solve_single_domain
from twodomain.problem import builtin_problem, parametric_problem
from twodomain.schemes import (
    MixingProfile,
    SchemeParams,
    boundary_values,
    resolve_delta_eps,
    solve_combined,
    solve_filippov,
    solve_viscous,
    sweep,
)
from twodomain.verify import closed_form_evaluators

CONTROL = {"min": -1.0, "max": 1.0, "resolution": 1.0}


@pytest.mark.parametrize("shape", ["tanh", "arctan"])
def test_profile_limits(shape):
    phi = MixingProfile(0.1, shape)
    assert phi(0.0) == pytest.approx(0.5)
    assert phi(50.0) == pytest.approx(1.0, abs=1e-2)
    assert phi(-50.0) == pytest.approx(0.0, abs=1e-2)
    values = phi(np.linspace(-1, 1, 21))
    assert np.all(np.diff(values) > 0)


def test_profile_validation():
    with pytest.raises(ConfigError):
        MixingProfile(0.0)
    with pytest.raises(ConfigError):
        MixingProfile(0.1, "logistic")


def test_resolve_delta_eps():
    assert resolve_delta_eps("cube", 0.1) == pytest.approx(1e-3)
    assert resolve_delta_eps("sqrt", 0.04) == pytest.approx(0.2)
    assert resolve_delta_eps("0.5", 0.1) == 0.5
    assert resolve_delta_eps(0.0, 0.1) == 0.0
    with pytest.raises(ConfigError):
        resolve_delta_eps("square", 0.1)
    with pytest.raises(ConfigError):
        resolve_delta_eps(-1.0, 0.1)


def test_scheme_params_validation():
    with pytest.raises(ConfigError):
        SchemeParams(eps=-0.1)
    with pytest.raises(ConfigError):
        SchemeParams(max_iters=0)


def test_filippov_matches_single_domain_when_sides_agree(coarse_grid):
    side = {"c0": 1.0, "c1": -1.0, "c2": 1.0}
    problem = parametric_problem(1, 1.0, 1.0, CONTROL, side, side)
    params = SchemeParams(tol_fp=1e-13)
    mixed = solve_filippov(problem, MixingProfile(0.1), coarse_grid, params=params)
    single = solve_single_domain(problem, 1, coarse_grid, tol_fp=1e-13)
    assert mixed.kind == "filippov"
    assert np.max(np.abs(mixed.values - single.values)) <= 1e-9


def test_filippov_push_push_is_zero(coarse_grid):
    problem = builtin_problem("push_push", 1.0)
    field = solve_filippov(problem, MixingProfile(0.05), coarse_grid, "closed_form", (0.0, 0.0))
    assert np.max(np.abs(field.values)) <= 1e-7


def test_filippov_pull_pull_approaches_u_minus(coarse_grid):
    problem = builtin_problem("pull_pull", 1.0)
    refs = closed_form_evaluators("pull_pull", 1.0)
    df = sweep(problem, "filippov", [0.2, 0.1, 0.05], coarse_grid, references=refs)
    assert list(df.columns[:4]) == ["eps", "scheme", "sup_err_Uminus", "sup_err_Uplus"]
    errors = df["sup_err_Uminus"].to_numpy()
    assert np.all(np.diff(errors) < 0)
    assert errors[-1] <= 0.3
    assert np.all(df["sup_err_Uplus"] > 0.5)


def test_viscous_constant_hamiltonian_is_exact(coarse_grid):
    side = {"c0": 2.0}
    problem = parametric_problem(1, 0.5, 1.0, CONTROL, side, side)
    field = solve_viscous(problem, 0.1, coarse_grid, bc=(4.0, 4.0))
    assert field.kind == "viscous"
    assert np.allclose(field.values, 4.0, atol=1e-12)
    assert field.meta["iterations"] == 1


def test_viscous_push_push_is_zero(coarse_grid):
    field = solve_viscous(builtin_problem("push_push", 1.0), 0.1, coarse_grid, bc=(0.0, 0.0))
    assert np.max(np.abs(field.values)) <= 1e-12


def test_viscous_stays_above_u_plus(coarse_grid):
    refs = closed_form_evaluators("pull_pull", 1.0)
    bc = boundary_values("viscous", refs, coarse_grid.xmax)
    field = solve_viscous(builtin_problem("pull_pull", 1.0), 0.05, coarse_grid, bc)
    assert np.min(field.values - refs["U_plus"](coarse_grid.nodes)) >= -5e-3
    assert field.meta["bc"] == list(bc)


def test_viscous_rejects_unstable_step(coarse_grid):
    params = SchemeParams(pseudo_dt=1.0)
    with pytest.raises(ConfigError):
        solve_viscous(builtin_problem("pull_pull", 1.0), 0.1, coarse_grid, params=params)
    with pytest.raises(ConfigError):
        solve_viscous(builtin_problem("pull_pull", 1.0), 0.0, coarse_grid)


def test_combined_without_viscosity_is_filippov(coarse_grid):
    problem = builtin_problem("pull_pull", 1.0)
    refs = closed_form_evaluators("pull_pull", 1.0)
    combined = solve_combined(problem, 0.1, 0.0, grid=coarse_grid, references=refs)
    filippov = solve_filippov(problem, MixingProfile(0.1), coarse_grid)
    assert combined.meta["reduced"]
    assert combined.meta["exploratory"]
    assert np.array_equal(combined.values, filippov.values)
    assert {"dist_U_minus", "dist_U_plus"} <= set(combined.meta)


def test_combined_profile_width_must_match(coarse_grid):
    with pytest.raises(ConfigError):
        solve_combined(builtin_problem("pull_pull"), 0.1, "cube", MixingProfile(0.2), coarse_grid)


def test_sweep_validation(coarse_grid):
    problem = builtin_problem("pull_pull")
    with pytest.raises(ConfigError):
        sweep(problem, "upwind", [0.1], coarse_grid)
    with pytest.raises(ConfigError):
        sweep(problem, "filippov", [], coarse_grid)
    with pytest.raises(ConfigError):
        sweep(problem, "combined", [0.1], coarse_grid, delta_eps="square")


def test_boundary_values_per_scheme():
    refs = closed_form_evaluators("pull_pull", 1.0)
    assert boundary_values("filippov", refs, 3.0) == pytest.approx((refs["U_minus"](-3.0), refs["U_minus"](3.0)))
    assert boundary_values("viscous", refs, 3.0) == pytest.approx((4.0, 4.0))
    assert boundary_values("combined", refs, 3.0) is None
    assert boundary_values("filippov", None, 3.0) is None


@pytest.mark.slow
def test_viscous_pull_pull_approaches_u_plus(fine_grid):
    refs = closed_form_evaluators("pull_pull", 1.0)
    df = sweep(builtin_problem("pull_pull", 1.0), "viscous", [0.1, 0.05, 0.02], fine_grid, references=refs, jobs=2)
    errors = df["sup_err_Uplus"].to_numpy()
    assert np.all(np.diff(errors) < 0)
    assert np.all(df["min_diff_Uplus"] >= -5e-3)
    assert np.all(df["sup_err_Uminus"] > 0.5)


@pytest.mark.slow
def test_filippov_pull_pull_fine_grid(fine_grid):
    refs = closed_form_evaluators("pull_pull", 1.0)
    df = sweep(builtin_problem("pull_pull", 1.0), "filippov", [0.2, 0.1, 0.05], fine_grid, references=refs, jobs=2)
    errors = df["sup_err_Uminus"].to_numpy()
    assert np.all(np.diff(errors) < 0)
    assert errors[-1] <= 0.15
