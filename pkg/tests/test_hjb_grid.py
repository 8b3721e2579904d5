import numpy as np
import pytest

from twodomain.errors import ConfigError, EmptyControlSetError, SolverError
from twodomain.hjb_grid import (
    Grid1D,
    ValueField,
    assemble_structure,
    dpp_residual,
    far_conditions,
    field_bounds,
    solve_controlled_line,
    solve_dirichlet_halfline,
    solve_single_domain,
    solve_state_constraint,
)
from twodomain.problem import builtin_problem, sampled_bounds
from twodomain.verify import closed_form, closed_form_evaluators


def test_grid_layout():
    grid = Grid1D(3.0, 0.5)
    assert grid.n == 6
    assert grid.nodes[grid.zero_index] == 0.0
    assert grid.nodes[0] == -3.0 and grid.nodes[-1] == 3.0
    assert grid.nodes[grid.half(1)][0] == 0.0
    assert grid.nodes[grid.half(2)][-1] == 0.0
    with pytest.raises(ConfigError):
        Grid1D(3.0, 0.007)
    with pytest.raises(ConfigError):
        Grid1D(3.0, -0.1)


def test_value_field_is_read_only(coarse_grid):
    field = ValueField(coarse_grid, np.zeros(coarse_grid.nodes.size), "U_minus")
    assert not field.values.flags.writeable
    with pytest.raises(ConfigError):
        ValueField(coarse_grid, np.zeros(3), "U_minus")
    with pytest.raises(ConfigError):
        ValueField(coarse_grid, np.zeros(coarse_grid.nodes.size), "unknown")


def test_kernel_constant_cost():
    nodes = np.linspace(0.0, 1.0, 11)
    drift = np.zeros((11, 1))
    cost = np.full((11, 1), 2.0)
    u, meta = solve_controlled_line(nodes, 0.5, drift, cost)
    assert np.allclose(u, 4.0, atol=1e-12)
    assert meta["iterations"] <= 2


def test_kernel_residual_contracts():
    nodes = np.linspace(0.0, 1.0, 51)
    drift = np.tile([-1.0, 0.0, 1.0], (51, 1))
    cost = 1.0 + drift + nodes[:, None]
    admissible, fixed = far_conditions(drift, "state_constraint")
    _, meta = solve_controlled_line(nodes, 1.0, drift, cost, admissible, fixed)
    trace = np.array(meta["trace"])
    a = meta["contraction"]
    assert np.all(trace[1:] <= a * trace[:-1] + 1e-14)
    assert trace[-1] <= 1e-10


def test_kernel_reports_empty_control_sets():
    nodes = np.linspace(0.0, 1.0, 5)
    drift = np.zeros((5, 1))
    admissible = np.ones((5, 1), dtype=bool)
    admissible[2] = False
    with pytest.raises(EmptyControlSetError):
        solve_controlled_line(nodes, 1.0, drift, drift, admissible)


def test_kernel_gives_up_with_trace():
    nodes = np.linspace(0.0, 1.0, 11)
    drift = np.tile([-1.0, 1.0], (11, 1))
    with pytest.raises(SolverError) as info:
        solve_controlled_line(nodes, 1.0, drift, 1.0 + drift, max_iters=3)
    assert len(info.value.trace) == 3


def test_far_conditions_closed_form_needs_values():
    drift = np.tile([-1.0, 1.0], (4, 1))
    with pytest.raises(ConfigError):
        far_conditions(drift, "closed_form")
    with pytest.raises(ConfigError):
        far_conditions(drift, "periodic")
    admissible, fixed = far_conditions(drift, "closed_form", (1.0, 2.0))
    assert fixed == {0: 1.0, 3: 2.0}
    assert admissible.all()


def test_dirichlet_state_constraint_problem(coarse_grid):
    problem = builtin_problem("state_constraint", 1.0)
    far = float(np.exp(-3.0) / 2.0)
    field = solve_dirichlet_halfline(problem, 1, 0.5, coarse_grid, "closed_form", far)
    assert field.values[0] == 0.5
    assert np.max(np.abs(field.values - np.exp(-field.x) / 2.0)) <= 2e-2


def test_dirichlet_pull_pull(coarse_grid):
    problem = builtin_problem("pull_pull", 1.0)
    field = solve_dirichlet_halfline(problem, 1, 0.0, coarse_grid)
    assert np.max(np.abs(field.values - (1.0 + field.x - np.exp(-field.x)))) <= 2e-2
    mirror = solve_dirichlet_halfline(problem, 2, 0.0, coarse_grid)
    assert np.allclose(mirror.values[::-1], field.values, atol=1e-9)


def test_dirichlet_is_monotone_in_boundary_value(coarse_grid):
    problem = builtin_problem("pull_pull", 1.0)
    low = solve_dirichlet_halfline(problem, 1, 0.5, coarse_grid)
    high = solve_dirichlet_halfline(problem, 1, 0.6, coarse_grid)
    assert np.all(high.values >= low.values - 1e-9)


def test_dirichlet_rejects_non_finite_boundary(coarse_grid):
    with pytest.raises(ConfigError):
        solve_dirichlet_halfline(builtin_problem("sc"), 1, np.nan, coarse_grid)


@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
def test_state_constraint_value_at_zero(coarse_grid, lam):
    problem = builtin_problem("push_push", lam)
    for side in (1, 2):
        field = solve_state_constraint(problem, side, coarse_grid)
        assert field.kind == f"U_SC{side}"
        assert field.value_at_zero == pytest.approx(1.0 / lam, abs=2e-2)


def test_single_domain_with_identical_sides(coarse_grid):
    problem = builtin_problem("push_push", 1.0)
    field = solve_single_domain(problem, 1, coarse_grid)
    # Free leftward drift until the far end, where only staying put is cheap
    assert field.values[coarse_grid.zero_index] == pytest.approx(np.exp(-3.0), abs=1e-2)
    assert field.values[0] == pytest.approx(1.0, abs=1e-9)


def test_structure_pull_pull(coarse_grid):
    problem = builtin_problem("pull_pull", 1.0)
    refs = closed_form_evaluators("pull_pull", 1.0)
    minus, plus = assemble_structure(problem, coarse_grid, "closed_form", refs)
    assert minus.value_at_zero == 0.0
    assert plus.value_at_zero - minus.value_at_zero == pytest.approx(1.0, abs=2e-2)
    assert minus.meta["structure"]["attained"] == ["u_H"]
    assert set(plus.meta["structure"]["attained"]) == {"u_H_reg", "U_SC1", "U_SC2"}
    assert not minus.meta["uniqueness"]
    x = coarse_grid.nodes
    assert np.max(np.abs(minus.values - closed_form("pull_pull", 1.0, "U_minus", x))) <= 2e-2
    assert np.max(np.abs(plus.values - (np.abs(x) + 1.0))) <= 2e-2
    assert np.all(minus.values <= plus.values + 1e-12)


def test_structure_state_constraint(coarse_grid):
    problem = builtin_problem("state_constraint", 1.0)
    refs = closed_form_evaluators("state_constraint", 1.0)
    minus, plus = assemble_structure(problem, coarse_grid, "closed_form", refs)
    assert minus.meta["uniqueness"]
    assert minus.meta["structure"]["summary"].endswith("via U_SC1=U_SC2 (tie)")
    assert np.max(np.abs(minus.values - plus.values)) <= 1e-12
    assert np.max(np.abs(minus.values - np.exp(-np.abs(coarse_grid.nodes)) / 2.0)) <= 2e-2


def test_structure_shares_far_condition_when_closed_form_missing(coarse_grid):
    # pull_pull with lambda > 1 has no closed form for U_minus
    problem = builtin_problem("pull_pull", 2.0)
    refs = closed_form_evaluators("pull_pull", 2.0)
    assert "U_minus" not in refs
    minus, plus = assemble_structure(problem, coarse_grid, "closed_form", refs)
    assert minus.meta["far_bc"] == "state_constraint"
    assert plus.meta["far_bc"] == "state_constraint"
    assert np.max(minus.values - plus.values) <= 1e-8


def test_structure_rejects_higher_dimension(coarse_grid):
    from twodomain.problem import parametric_problem

    coefs = {"c0": 1.0}
    problem = parametric_problem(2, 1.0, 1.0, {"min": -1.0, "max": 1.0, "resolution": 1.0}, coefs, coefs)
    with pytest.raises(ConfigError):
        assemble_structure(problem, coarse_grid)


def test_dpp_residual_pull_pull(coarse_grid):
    problem = builtin_problem("pull_pull", 1.0)
    refs = closed_form_evaluators("pull_pull", 1.0)
    minus, plus = assemble_structure(problem, coarse_grid, "closed_form", refs)
    samples = [-0.75, 0.0, 0.5]
    report = dpp_residual(minus, problem, 0.1, samples)
    assert report.max_violation <= 5 * coarse_grid.h
    assert list(report.frame["x"]) == samples
    regular = dpp_residual(plus, problem, 0.1, samples, regular_only=True)
    assert regular.max_violation <= 5 * coarse_grid.h


@pytest.mark.slow
def test_structure_reproduces_closed_forms(fine_grid):
    x = fine_grid.nodes
    for name, lam, tol in (("state_constraint", 1.0, 1e-2), ("push_push", 1.0, 2e-2), ("pull_pull", 1.0, 1e-2)):
        refs = closed_form_evaluators(name, lam)
        minus, plus = assemble_structure(builtin_problem(name, lam), fine_grid, "closed_form", refs)
        assert np.max(np.abs(minus.values - refs["U_minus"](x))) <= tol
        assert np.max(np.abs(plus.values - refs["U_plus"](x))) <= tol
    refs = closed_form_evaluators("pull_pull", 2.0)
    _, plus = assemble_structure(builtin_problem("pull_pull", 2.0), fine_grid, "closed_form", refs)
    assert plus.value_at_zero == pytest.approx(0.25, abs=1e-2)


def test_dpp_residual_default_samples_include_interface(coarse_grid):
    problem = builtin_problem("pull_pull", 1.0)
    refs = closed_form_evaluators("pull_pull", 1.0)
    _, plus = assemble_structure(problem, coarse_grid, "closed_form", refs)
    report = dpp_residual(plus, problem, 0.1)
    assert 0.0 in set(report.frame["x"])
    assert len(report.frame) == 11
    # A costless singular slide at x = 0 beats U_plus(0) = 1 by 1 - exp(-tau)
    assert report.min_violation < -0.05
    away = report.frame[report.frame["x"] != 0.0]
    assert away["violation"].abs().max() <= 5 * coarse_grid.h


def test_field_bounds_over_nodes(coarse_grid):
    problem = builtin_problem("pull_pull", 1.0)
    assert field_bounds(problem, coarse_grid) == sampled_bounds(problem, coarse_grid.nodes[:, None])
    m_b, m = field_bounds(problem, coarse_grid)
    assert m_b == pytest.approx(1.0)
    assert m > 0.0
