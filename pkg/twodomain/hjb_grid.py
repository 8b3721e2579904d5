"""
1-D semi-Lagrangian solvers for the discounted HJB equations of each side.

The value is the fixed point of

    u(x) = min_a { D l(x, a) + (1 - lambda D) I[u](x + D b(x, a)) }

with characteristic step D = h / max(1, max|b|) and linear interpolation I.
The weight a foot puts on its own node is eliminated algebraically, which
leaves the fixed point unchanged and keeps the contraction factor below
1 - lambda D.

U- and U+ are assembled from the half-line solves: the value at 0 is the
smallest of the interface value and the two state-constraint values, and
each side is then a Dirichlet problem with that boundary value.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
import pandas as pd

from twodomain.errors import ConfigError, EmptyControlSetError, SolverError
from twodomain.interface import interface_control_set, interface_value
from twodomain.problem import TwoDomainProblem, sampled_bounds
from twodomain.trajectory import ControlSchedule, Segment, classify, integrate

logger = logging.getLogger(__name__)

KINDS = (
    "U_minus",
    "U_plus",
    "U_SC1",
    "U_SC2",
    "dirichlet",
    "filippov",
    "viscous",
    "combined",
    "single_domain",
)

FAR_BCS = ("closed_form", "state_constraint")


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on [-xmax, xmax] with node 0 exactly at x = 0."""

    xmax: float = 3.0
    h: float = 1e-3

    def __post_init__(self):
        if not (np.isfinite(self.h) and self.h > 0 and np.isfinite(self.xmax) and self.xmax > 0):
            raise ConfigError(f"Grid needs h > 0 and xmax > 0, got h={self.h}, xmax={self.xmax}.")
        ratio = self.xmax / self.h
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio) or round(ratio) < 2:
            raise ConfigError(f"xmax / h must be an integer >= 2, got {ratio}.")

    @property
    def n(self) -> int:
        """Number of cells on each half-line."""
        return int(round(self.xmax / self.h))

    @property
    def nodes(self) -> np.ndarray:
        return self.h * np.arange(-self.n, self.n + 1)

    @property
    def zero_index(self) -> int:
        return self.n

    def half(self, side: int) -> slice:
        """Slice of the closed half-line of a side (side 1: x >= 0)."""
        if side == 1:
            return slice(self.n, None)
        if side == 2:
            return slice(0, self.n + 1)
        raise ConfigError(f"Side must be 1 or 2, got {side}.")

    def to_dict(self) -> dict:
        return {"xmax": self.xmax, "h": self.h}


@dataclass(frozen=True, eq=False)
class ValueField:
    """Value samples on a grid (or on one closed half of it) with provenance."""

    grid: Grid1D
    values: np.ndarray
    kind: str
    meta: dict = field(default_factory=dict)
    side: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"Unknown field kind '{self.kind}'.")
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.x.shape:
            raise ConfigError(f"Field has {values.size} values for {self.x.size} nodes.")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def x(self) -> np.ndarray:
        nodes = self.grid.nodes
        return nodes if self.side is None else nodes[self.grid.half(self.side)]

    def at(self, x) -> np.ndarray | float:
        """Linear interpolation, clamped at the ends of the field."""
        out = np.interp(x, self.x, self.values)
        return float(out) if np.ndim(out) == 0 else out

    @property
    def value_at_zero(self) -> float:
        return self.at(0.0)

    def lipschitz_quotient(self) -> float:
        return float(np.max(np.abs(np.diff(self.values))) / self.grid.h)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"x": self.x, "value": self.values})


def _side_tables(problem: TwoDomainProblem, side: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    velocities, costs = problem.side(side).tables(x[:, None])
    return velocities[:, :, 0], costs


def solve_controlled_line(
    nodes: np.ndarray,
    lam: float,
    drift: np.ndarray,
    cost: np.ndarray,
    admissible: np.ndarray | None = None,
    fixed: Mapping[int, float] | None = None,
    tol_fp: float = 1e-10,
    max_iters: int | None = None,
    label: str = "Kernel",
) -> tuple[np.ndarray, dict]:
    """
    Semi-Lagrangian value iteration over precomputed tables.

    Parameters
    ----------
    nodes : np.ndarray
        Uniform nodes, shape (n,).
    lam : float
        Discount rate.
    drift, cost : np.ndarray
        Velocity and running cost per node and control, shape (n, K).
    admissible : np.ndarray, optional
        Boolean mask (n, K) of allowed controls. Default all.
    fixed : dict, optional
        Node index -> clamped value.
    tol_fp : float, optional
        Stop when the sup of the update is <= tol_fp. Default 1e-10.
    max_iters : int, optional
        Iteration cap; defaults to what the contraction needs from a unit
        residual to 1e-16 plus ten sweeps of the grid.
    label : str, optional
        Prefix of log messages.

    Returns
    -------
    values : np.ndarray
        Fixed point on the nodes.
    meta : dict
        iterations, residual, char_step, contraction and the residual trace.
    """
    n = nodes.size
    h = float(nodes[1] - nodes[0])
    if admissible is None:
        admissible = np.ones(drift.shape, dtype=bool)
    fixed = dict(fixed or {})
    for i, v in fixed.items():
        if not np.isfinite(v):
            raise ConfigError(f"{label} - clamped value at node {i} is not finite.")
    free = np.ones(n, dtype=bool)
    free[list(fixed)] = False
    empty = free & ~admissible.any(axis=1)
    if np.any(empty):
        raise EmptyControlSetError(
            f"{label} - no admissible control at x={nodes[np.flatnonzero(empty)[0]]:g}"
        )

    speed = float(np.max(np.abs(drift[admissible]))) if admissible.any() else 0.0
    step = h / max(1.0, speed)
    a = 1.0 - lam * step
    if not 0.0 < a < 1.0:
        raise ConfigError(f"{label} - lambda * step = {lam * step:g} must lie in (0, 1); refine h.")

    idx = np.arange(n)[:, None]
    foot = np.clip(nodes[:, None] + step * drift, nodes[0], nodes[-1])
    j = np.clip(np.floor((foot - nodes[0]) / h).astype(int), 0, n - 2)
    w = np.clip((foot - nodes[j]) / h, 0.0, 1.0)
    self_weight = np.where(j == idx, 1.0 - w, 0.0) + np.where(j + 1 == idx, w, 0.0)
    denom = 1.0 - a * self_weight
    base = np.where(admissible, step * cost / denom, np.inf)
    c0 = np.where(admissible & (j != idx), a * (1.0 - w) / denom, 0.0)
    c1 = np.where(admissible & (j + 1 != idx), a * w / denom, 0.0)

    # Start above the solution so the iterates decrease monotonically
    top = float(np.max(np.where(admissible, cost, -np.inf))) / lam
    u = np.full(n, max([top] + list(fixed.values())))
    for i, v in fixed.items():
        u[i] = v
    fixed_idx = np.array(list(fixed), dtype=int)
    fixed_val = np.array(list(fixed.values()), dtype=float)

    if max_iters is None:
        max_iters = int(math.ceil(math.log(1e-16) / math.log(a))) + 10 * n
    trace = []
    best = np.inf
    for it in range(1, max_iters + 1):
        new = np.min(base + c0 * u[j] + c1 * u[j + 1], axis=1)
        if fixed_idx.size:
            new[fixed_idx] = fixed_val
        residual = float(np.max(np.abs(new - u)))
        u = new
        trace.append(residual)
        if not np.isfinite(residual) or residual > 1.5 * best + 1e-12:
            raise SolverError(f"{label} - fixed-point iteration diverged at iteration {it}", trace[-50:])
        best = min(best, residual)
        if residual <= tol_fp:
            break
    else:
        raise SolverError(
            f"{label} - residual {residual:.2e} above {tol_fp:.1e} after {max_iters} iterations",
            trace[-50:],
        )

    logger.info("%s - converged in %d iterations (residual %.1e)", label, it, residual)
    meta = {
        "iterations": it,
        "residual": residual,
        "char_step": step,
        "contraction": a,
        "trace": trace,
    }
    return u, meta


def far_conditions(
    drift: np.ndarray,
    far_bc: str,
    far_values: tuple[float | None, float | None] = (None, None),
    ends: tuple[int | None, int | None] = (0, -1),
) -> tuple[np.ndarray, dict]:
    """
    Admissibility mask and clamps for the far ends of a line.

    Parameters
    ----------
    drift : np.ndarray
        Velocity table (n, K).
    far_bc : str
        "closed_form" clamps the far nodes to `far_values`;
        "state_constraint" keeps only inward controls there.
    far_values : tuple, optional
        Values at the left and right far ends.
    ends : tuple, optional
        Which ends are far ends (index 0 and/or -1); None skips one.

    Returns
    -------
    admissible, fixed
    """
    if far_bc not in FAR_BCS:
        raise ConfigError(f"Unknown far boundary condition '{far_bc}'. Options are {FAR_BCS}.")
    n = drift.shape[0]
    admissible = np.ones(drift.shape, dtype=bool)
    fixed = {}
    for end, value, outward in zip(ends, far_values, (-1.0, 1.0)):
        if end is None:
            continue
        i = end % n
        if far_bc == "closed_form":
            if value is None:
                raise ConfigError("closed_form far boundary needs a far value.")
            fixed[i] = float(value)
        else:
            admissible[i] = outward * drift[i] <= 0.0
    return admissible, fixed


def solve_dirichlet_halfline(
    problem: TwoDomainProblem,
    side: int,
    boundary_value: float,
    grid: Grid1D,
    far_bc: str = "state_constraint",
    far_value: float | None = None,
    tol_fp: float = 1e-10,
    max_iters: int | None = None,
) -> ValueField:
    """
    Exit-time Dirichlet problem on the closed half-line of a side.

    Parameters
    ----------
    problem : TwoDomainProblem
        1-D problem.
    side : int
        1 (x >= 0) or 2 (x <= 0).
    boundary_value : float
        Value clamped at x = 0.
    grid : Grid1D
        Grid on [-L, L].
    far_bc : str, optional
        "state_constraint" (inward controls at the far node) or
        "closed_form" (clamp to `far_value`).
    far_value : float, optional
        Far value for "closed_form".

    Returns
    -------
    ValueField
        Kind "dirichlet" on the half-line.
    """
    _require_1d(problem)
    if not np.isfinite(boundary_value):
        raise ConfigError("Dirichlet boundary value must be finite.")
    x = grid.nodes[grid.half(side)]
    drift, cost = _side_tables(problem, side, x)
    zero, far = (0, -1) if side == 1 else (-1, 0)
    ends = (None, far) if side == 1 else (far, None)
    values = (None, far_value) if side == 1 else (far_value, None)
    admissible, fixed = far_conditions(drift, far_bc, values, ends)
    fixed[zero % x.size] = float(boundary_value)
    u, meta = solve_controlled_line(
        x, problem.lam, drift, cost, admissible, fixed, tol_fp, max_iters, f"Dirichlet - side {side}"
    )
    meta.update({"side": side, "boundary_value": float(boundary_value), "far_bc": far_bc})
    return ValueField(grid, u, "dirichlet", meta, side=side)


def solve_state_constraint(
    problem: TwoDomainProblem,
    side: int,
    grid: Grid1D,
    far_bc: str = "state_constraint",
    far_value: float | None = None,
    tol_fp: float = 1e-10,
    max_iters: int | None = None,
) -> ValueField:
    """
    Value of staying in the closed half-line of a side forever.

    At x = 0 only controls whose foot stays in the half-line are allowed;
    the far node follows `far_bc` as in `solve_dirichlet_halfline`.
    """
    _require_1d(problem)
    x = grid.nodes[grid.half(side)]
    drift, cost = _side_tables(problem, side, x)
    zero, far = (0, -1) if side == 1 else (-1, 0)
    ends = (None, far) if side == 1 else (far, None)
    values = (None, far_value) if side == 1 else (far_value, None)
    admissible, fixed = far_conditions(drift, far_bc, values, ends)
    inward = 1.0 if side == 1 else -1.0
    admissible[zero] = inward * drift[zero] >= 0.0
    if not admissible[zero].any():
        raise EmptyControlSetError(f"State constraint - side {side} - no admissible control at x=0")
    u, meta = solve_controlled_line(
        x, problem.lam, drift, cost, admissible, fixed, tol_fp, max_iters, f"State constraint - side {side}"
    )
    meta.update({"side": side, "far_bc": far_bc})
    return ValueField(grid, u, f"U_SC{side}", meta, side=side)


def solve_single_domain(
    problem: TwoDomainProblem,
    side: int,
    grid: Grid1D,
    far_bc: str = "state_constraint",
    far_values: tuple[float | None, float | None] = (None, None),
    tol_fp: float = 1e-10,
    max_iters: int | None = None,
) -> ValueField:
    """One side's dynamics and cost used on the whole line [-L, L]."""
    _require_1d(problem)
    x = grid.nodes
    drift, cost = _side_tables(problem, side, x)
    admissible, fixed = far_conditions(drift, far_bc, far_values)
    u, meta = solve_controlled_line(
        x, problem.lam, drift, cost, admissible, fixed, tol_fp, max_iters, f"Single domain - side {side}"
    )
    meta.update({"side": side, "far_bc": far_bc})
    return ValueField(grid, u, "single_domain", meta)


@dataclass(frozen=True)
class StructureDecision:
    """Which candidate gives the value at 0 of U- or U+."""

    kind: str
    candidates: dict
    minimum: float
    attained: tuple
    tie_tol: float

    def summary(self) -> str:
        symbol = "U⁻" if self.kind == "U_minus" else "U⁺"
        tie = " (tie)" if len(self.attained) > 1 else ""
        return f"{symbol}(0)={self.minimum:.2g} via {'='.join(self.attained)}{tie}"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "candidates": self.candidates,
            "minimum": self.minimum,
            "attained": list(self.attained),
            "tie_tol": self.tie_tol,
            "summary": self.summary(),
        }


def decide(kind: str, candidates: dict, tie_tol: float) -> StructureDecision:
    """Minimum of the candidates; all within `tie_tol` of it are reported as attaining."""
    minimum = min(candidates.values())
    attained = tuple(k for k, v in candidates.items() if v <= minimum + tie_tol)
    return StructureDecision(kind, dict(candidates), float(minimum), attained, float(tie_tol))


def uniqueness_holds(minus: StructureDecision, plus: StructureDecision, tie_tol: float) -> bool:
    """u_H(0) = u_H^reg(0), or u_H(0) >= min(U_SC1(0), U_SC2(0)): then U- = U+."""
    u_h = minus.candidates["u_H"]
    u_h_reg = plus.candidates["u_H_reg"]
    sc = min(minus.candidates["U_SC1"], minus.candidates["U_SC2"])
    return abs(u_h - u_h_reg) <= tie_tol or u_h >= sc - tie_tol


def assemble_structure(
    problem: TwoDomainProblem,
    grid: Grid1D,
    far_bc: str = "state_constraint",
    references: Mapping[str, Callable] | None = None,
    tie_tol: float | None = None,
    tol_fp: float = 1e-10,
    max_iters: int | None = None,
) -> tuple[ValueField, ValueField]:
    """
    Assemble U- and U+ from half-line solves.

    Parameters
    ----------
    problem : TwoDomainProblem
        1-D problem.
    grid : Grid1D
        Grid on [-L, L].
    far_bc : str, optional
        "state_constraint" or "closed_form". With "closed_form" the far value
        of each solve is read from `references` by field kind. When one of
        U_SC1, U_SC2, U_minus, U_plus is missing there, every solve falls
        back to "state_constraint" so that both fields share one far
        condition.
    references : dict, optional
        Field kind -> callable x -> value (e.g. the closed forms of `verify`).
    tie_tol : float, optional
        Candidates within tie_tol of the minimum count as attaining it.
        Default is 10 h.

    Returns
    -------
    U_minus, U_plus : ValueField
        Whole-line fields; node 0 holds exactly the structure minimum. The
        decisions are in meta["structure"].
    """
    _require_1d(problem)
    tie_tol = 10.0 * grid.h if tie_tol is None else float(tie_tol)
    references = dict(references or {})
    L = grid.xmax
    if far_bc not in FAR_BCS:
        raise ConfigError(f"Unknown far boundary condition '{far_bc}'. Options are {FAR_BCS}.")
    missing = [k for k in ("U_SC1", "U_SC2", "U_minus", "U_plus") if k not in references]
    if far_bc == "closed_form" and missing:
        logger.warning("Structure - no closed form for %s, all far boundaries use state constraint", missing)
        far_bc = "state_constraint"

    def _far(kind, x_far):
        if far_bc != "closed_form":
            return "state_constraint", None
        return "closed_form", float(references[kind](x_far))

    sc = {}
    for side, x_far in ((1, L), (2, -L)):
        bc, value = _far(f"U_SC{side}", x_far)
        sc[side] = solve_state_constraint(problem, side, grid, bc, value, tol_fp, max_iters)
    sc_zero = {1: float(sc[1].values[0]), 2: float(sc[2].values[-1])}

    u_h = interface_value(problem, 0.0, regular_only=False)
    u_h_reg = interface_value(problem, 0.0, regular_only=True)

    out = []
    decisions = {}
    for kind, key, iv in (("U_minus", "u_H", u_h), ("U_plus", "u_H_reg", u_h_reg)):
        decision = decide(kind, {key: iv.value, "U_SC1": sc_zero[1], "U_SC2": sc_zero[2]}, tie_tol)
        decisions[kind] = decision
        halves = {}
        consistency = {}
        for side, x_far in ((1, L), (2, -L)):
            bc, value = _far(kind, x_far)
            dirichlet = solve_dirichlet_halfline(
                problem, side, decision.minimum, grid, bc, value, tol_fp, max_iters
            )
            if f"U_SC{side}" in decision.attained:
                gap = float(np.max(np.abs(dirichlet.values - sc[side].values)))
                consistency[f"side{side}"] = gap
                if gap > tie_tol:
                    logger.warning(
                        "Structure - %s side %d - Dirichlet and state-constraint fields differ by %.2e",
                        kind, side, gap,
                    )
                halves[side] = np.array(sc[side].values)
            else:
                halves[side] = np.array(dirichlet.values)
        values = np.concatenate([halves[2][:-1], halves[1]])
        values[grid.zero_index] = decision.minimum
        logger.info("Structure - %s", decision.summary())
        meta = {
            "structure": decision.to_dict(),
            "consistency": consistency,
            "far_bc": far_bc,
            "minimizer": iv.minimizer.to_dict(),
        }
        out.append(ValueField(grid, values, kind, meta))
    out[0].meta["uniqueness"] = out[1].meta["uniqueness"] = uniqueness_holds(
        decisions["U_minus"], decisions["U_plus"], tie_tol
    )
    return out[0], out[1]


def _require_1d(problem: TwoDomainProblem) -> None:
    if problem.dim != 1:
        raise ConfigError(f"Grid solvers are 1-D; the problem has dimension {problem.dim}.")


@dataclass
class DppReport:
    """Per-sample comparison of a field with its one-step dynamic programming bound."""

    frame: pd.DataFrame
    tau: float

    @property
    def max_violation(self) -> float:
        return float(self.frame["violation"].abs().max())

    @property
    def min_violation(self) -> float:
        return float(self.frame["violation"].min())

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "max_violation": self.max_violation,
            "min_violation": self.min_violation,
            "samples": self.frame.to_dict(orient="records"),
        }


def _one_step_schedules(problem: TwoDomainProblem, x: float, regular_only: bool, tau: float, dt: float):
    """Schedules over [0, tau] from x: constant controls, hit-then-slide, slides and exits on H."""
    interface = interface_control_set(problem, 0.0, regular_only=regular_only)
    slides = [Segment.fixed(ic.alpha1, ic.alpha2, ic.mu) for ic in interface]
    a1, a2 = problem.side1.controls, problem.side2.controls
    if x == 0.0:
        origin = np.zeros((1, 1))
        d1 = problem.side1.tables(origin)[0][0, :, 0]
        d2 = problem.side2.tables(origin)[0][0, :, 0]
        out = [ControlSchedule.of(s) for s in slides]
        j2, j1 = int(np.argmax(d2)), int(np.argmin(d1))
        out += [ControlSchedule.of(Segment.sliding(a1[k], a2[j2])) for k in np.flatnonzero(d1 > 0) if d2[j2] > 0]
        out += [ControlSchedule.of(Segment.sliding(a1[j1], a2[k])) for k in np.flatnonzero(d2 < 0) if d1[j1] < 0]
        return out
    side = 1 if x > 0 else 2
    own = a1 if side == 1 else a2
    out = []
    for alpha in own:
        pair = (alpha, a2[0]) if side == 1 else (a1[0], alpha)
        approach = Segment.sliding(*pair, until_hit=True)
        probe = integrate(problem, [x], ControlSchedule.of(approach), tau, dt)
        if np.any(probe.labels == "H"):
            out += [ControlSchedule.of(approach, s) for s in slides]
        else:
            out.append(ControlSchedule.of(approach))
    return out


def dpp_residual(
    field: ValueField,
    problem: TwoDomainProblem,
    tau: float = 0.1,
    sample_states=None,
    regular_only: bool = False,
    dt: float | None = None,
) -> DppReport:
    """
    One-step dynamic programming check of a field.

    For each sample x the best of (cost over [0, tau] + exp(-lambda tau)
    field(X(tau))) over the one-step schedules is compared with field(x).
    The violation best - field(x) is negative when some schedule beats the
    field.

    Parameters
    ----------
    field : ValueField
        Solved field.
    problem : TwoDomainProblem
        Problem the field belongs to.
    tau : float, optional
        Step length. Default is 0.1.
    sample_states : array_like, optional
        1-D sample points. Default is 10 points spread over [-1, 1] plus
        x = 0.
    regular_only : bool, optional
        Restrict slides to regular mixed controls and drop singular paths.
    dt : float, optional
        Integration step. Default is tau / 100.

    Returns
    -------
    DppReport
    """
    _require_1d(problem)
    dt = tau / 100.0 if dt is None else dt
    if sample_states is None:
        lo, hi = max(-1.0, field.x[0]), min(1.0, field.x[-1])
        sample_states = np.linspace(lo, hi, 10)
        if lo <= 0.0 <= hi:
            # Sliding strategies only act from the interface
            sample_states = np.union1d(sample_states, [0.0])
    discount = math.exp(-problem.lam * tau)
    rows = []
    for x in np.atleast_1d(np.asarray(sample_states, dtype=float)):
        best, best_name = np.inf, ""
        for schedule in _one_step_schedules(problem, float(x), regular_only, tau, dt):
            traj = integrate(problem, [x], schedule, tau, dt)
            if regular_only and classify(traj) == "singular":
                continue
            value = traj.total_cost + discount * field.at(traj.states[-1, 0])
            if value < best:
                best = value
                best_name = str(schedule.to_dict()["segments"])
        ref = field.at(x)
        rows.append({"x": float(x), "field": ref, "best": best, "violation": best - ref, "schedule": best_name})
    report = DppReport(pd.DataFrame(rows), tau)
    logger.info(
        "DPP - %s - max |violation| %.2e, min violation %.2e",
        field.kind, report.max_violation, report.min_violation,
    )
    return report


def field_bounds(problem: TwoDomainProblem, grid: Grid1D) -> tuple[float, float]:
    """Sampled (M_b, M) over the grid nodes."""
    return sampled_bounds(problem, grid.nodes[:, None])
