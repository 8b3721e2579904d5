"""
Controlled trajectories of the discontinuous system.

Off the hyperplane a trajectory follows the active side's dynamics with a
fixed-step RK4. A crossing is located by Brent's method on x_N along the
substep, then the state is snapped onto H. On H the motion slides with the
mixed velocity mu b_1 + (1 - mu) b_2, where mu is recomputed every step from
the normal drifts, or exits H on the side both drifts point to.

The discounted cost J = int_0^T exp(-lambda t) l(t) dt is accumulated step by
step with the running cost interpolated linearly inside each (sub)step and
the exponential weight integrated exactly.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd
from scipy.optimize import brentq
from tqdm import tqdm

from twodomain.errors import ConfigError
from twodomain.interface import ANY, interface_value, mixing_coefficient
from twodomain.problem import SideSpec, TwoDomainProblem, sampled_bounds

logger = logging.getLogger(__name__)

LABEL_OMEGA1 = "Omega1"
LABEL_OMEGA2 = "Omega2"
LABEL_H = "H"

# Events (crossings, exits) handled inside a single step before holding
MAX_EVENTS_PER_STEP = 8
# Breakpoint spacing for segments that only start on a hit
HIT_ONLY = 1e12


@dataclass(frozen=True, eq=False)
class Segment:
    """
    Controls in force on one interval of a schedule.

    Parameters
    ----------
    alpha1, alpha2 : array_like
        Controls used on Omega_1 and Omega_2 (and mixed on H).
    mu : float, optional
        Fixed mixing weight on H. Required unless `slide` is set.
    slide : bool, optional
        Recompute mu from the state on H.
    until_hit : bool, optional
        End the segment at the first contact with H.
    """

    alpha1: np.ndarray
    alpha2: np.ndarray
    mu: float | None = None
    slide: bool = False
    until_hit: bool = False

    def __post_init__(self):
        object.__setattr__(self, "alpha1", np.atleast_1d(np.asarray(self.alpha1, dtype=float)))
        object.__setattr__(self, "alpha2", np.atleast_1d(np.asarray(self.alpha2, dtype=float)))
        if self.slide:
            if self.mu is not None:
                raise ConfigError("A slide segment recomputes mu; do not give one.")
        elif self.mu is None or not (0.0 <= self.mu <= 1.0):
            raise ConfigError(f"Explicit segment needs mu in [0, 1], got {self.mu}.")

    @classmethod
    def fixed(cls, alpha1, alpha2, mu: float, until_hit: bool = False) -> "Segment":
        return cls(alpha1, alpha2, mu=float(mu), slide=False, until_hit=until_hit)

    @classmethod
    def sliding(cls, alpha1, alpha2, until_hit: bool = False) -> "Segment":
        return cls(alpha1, alpha2, mu=None, slide=True, until_hit=until_hit)

    def to_dict(self) -> dict:
        def _out(a):
            return float(a[0]) if a.size == 1 else a.tolist()

        if self.slide:
            out = {"slide": {"alpha1": _out(self.alpha1), "alpha2": _out(self.alpha2)}}
        else:
            out = {"alpha1": _out(self.alpha1), "alpha2": _out(self.alpha2), "mu": self.mu}
        if self.until_hit:
            out["until"] = "hit"
        return out


@dataclass(frozen=True, eq=False)
class ControlSchedule:
    """Piecewise-constant controls; segment i starts at breakpoints[i]."""

    breakpoints: np.ndarray
    segments: tuple

    def __post_init__(self):
        bp = np.atleast_1d(np.asarray(self.breakpoints, dtype=float))
        segments = tuple(self.segments)
        if bp.size == 0 or bp.size != len(segments):
            raise ConfigError("Schedule needs one breakpoint per segment.")
        if bp[0] != 0.0:
            raise ConfigError("Schedule breakpoints must start at 0.")
        if np.any(np.diff(bp) <= 0):
            raise ConfigError("Schedule breakpoints must be strictly increasing.")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "segments", segments)

    @classmethod
    def of(cls, *segments: Segment) -> "ControlSchedule":
        """Chain of segments; all but the last should end on a hit."""
        return cls(_chain(len(segments)), segments)

    def validate(self, problem: TwoDomainProblem) -> None:
        for k, seg in enumerate(self.segments):
            for i, alpha in ((1, seg.alpha1), (2, seg.alpha2)):
                if problem.side(i).control_set.index_of(alpha) is None:
                    raise ConfigError(
                        f"Segment {k}: control {alpha.tolist()} not in the side {i} control grid."
                    )

    def to_dict(self) -> dict:
        return {
            "breakpoints": self.breakpoints.tolist(),
            "segments": [s.to_dict() for s in self.segments],
        }


def _chain(n: int) -> np.ndarray:
    # Later segments start through hit events; their breakpoints are never reached
    return np.concatenate([[0.0], HIT_ONLY * np.arange(1, n)])


@dataclass(eq=False)
class Trajectory:
    """Time-discretized controlled path with its discounted cost."""

    times: np.ndarray
    states: np.ndarray
    labels: np.ndarray
    mus: np.ndarray
    step_costs: np.ndarray
    total_cost: float
    regular: bool
    max_normal_residual_on_H: float
    tail_bound: float
    discount: float
    violations: list = field(default_factory=list)
    schedule: ControlSchedule | None = None

    def to_frame(self) -> pd.DataFrame:
        """Columns t, x (x1..xN when N > 1), label, mu, step_cost."""
        data = {"t": self.times}
        if self.states.shape[1] == 1:
            data["x"] = self.states[:, 0]
        else:
            for j in range(self.states.shape[1]):
                data[f"x{j + 1}"] = self.states[:, j]
        data["label"] = self.labels
        data["mu"] = self.mus
        data["step_cost"] = np.append(self.step_costs, 0.0)
        return pd.DataFrame(data)

    def summary(self) -> dict:
        return {
            "x0": self.states[0].tolist(),
            "x_end": self.states[-1].tolist(),
            "horizon": float(self.times[-1]),
            "total_cost": self.total_cost,
            "tail_bound": self.tail_bound,
            "regular": self.regular,
            "classification": classify(self),
            "max_normal_residual_on_H": self.max_normal_residual_on_H,
            "violations": [{"t": t, "normal_residual": r} for t, r in self.violations],
        }


def discounted_increment(lam: float, t0: float, tau: float, l0: float, l1: float) -> float:
    """Integral of exp(-lam t) l(t) over [t0, t0 + tau] with l linear from l0 to l1."""
    if tau <= 0.0:
        return 0.0
    z = lam * tau
    e0 = math.exp(-lam * t0)
    a = -math.expm1(-z) / lam
    # (1 - exp(-z) (1 + z)) / (lam^2 tau)
    g = (-math.expm1(-z) - z * math.exp(-z)) / (lam * lam * tau)
    return e0 * (l0 * (a - g) + l1 * g)


def _rk4(side: SideSpec, x: np.ndarray, alpha: np.ndarray, dt: float) -> np.ndarray:
    if side.state_independent:
        return x + dt * side.velocity(x, alpha)
    k1 = side.velocity(x, alpha)
    k2 = side.velocity(x + 0.5 * dt * k1, alpha)
    k3 = side.velocity(x + 0.5 * dt * k2, alpha)
    k4 = side.velocity(x + dt * k3, alpha)
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _rk4_mixed(problem: TwoDomainProblem, x, a1, a2, mu: float, dt: float) -> np.ndarray:
    def f(y):
        return mu * problem.side1.velocity(y, a1) + (1.0 - mu) * problem.side2.velocity(y, a2)

    if problem.side1.state_independent and problem.side2.state_independent:
        return x + dt * f(x)
    k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


class _Integrator:
    """Mutable state of one `integrate` call."""

    def __init__(self, problem, schedule, snap_tol, normal_tol):
        self.problem = problem
        self.schedule = schedule
        self.snap_tol = snap_tol
        self.normal_tol = normal_tol
        self.lam = problem.lam
        self.index = 0
        self.regular = True
        self.max_residual = 0.0
        self.violations = []
        self.max_cost = 0.0

    @property
    def segment(self) -> Segment:
        return self.schedule.segments[self.index]

    def sync(self, t: float) -> None:
        bp = self.schedule.breakpoints
        while self.index + 1 < bp.size and t >= bp[self.index + 1] - 1e-12:
            self.index += 1

    def on_hit(self) -> None:
        if self.segment.until_hit and self.index + 1 < len(self.schedule.segments):
            self.index += 1

    def label(self, x: np.ndarray) -> str:
        if abs(x[-1]) <= self.snap_tol:
            return LABEL_H
        return LABEL_OMEGA1 if x[-1] > 0 else LABEL_OMEGA2

    def _cost(self, side: int, x, alpha) -> float:
        value = self.problem.side(side).running_cost(x, alpha)
        self.max_cost = max(self.max_cost, abs(value))
        return value

    def _mixed_cost(self, x, a1, a2, mu) -> float:
        return mu * self._cost(1, x, a1) + (1.0 - mu) * self._cost(2, x, a2)

    def advance(self, x: np.ndarray, t: float, duration: float):
        """Move x over [t, t + duration]; returns (state, cost, mu at start)."""
        remaining, t_cur, cost = duration, t, 0.0
        mu_start = np.nan
        first = True
        for _ in range(MAX_EVENTS_PER_STEP):
            if remaining <= 1e-15 * max(1.0, duration):
                return x, cost, mu_start
            if abs(x[-1]) <= self.snap_tol:
                x = x.copy()
                x[-1] = 0.0
                x, used, c, mu, exit_side = self._on_hyperplane(x, t_cur, remaining)
                if first and mu is not None:
                    mu_start = mu
                if exit_side is not None:
                    x, used, c2, hit = self._off_hyperplane(x, exit_side, t_cur, remaining)
                    c += c2
                    if hit:
                        self.on_hit()
            else:
                side = 1 if x[-1] > 0 else 2
                x, used, c, hit = self._off_hyperplane(x, side, t_cur, remaining)
                if hit:
                    self.on_hit()
            cost += c
            remaining -= used
            t_cur += used
            first = False

        if remaining > 1e-15 * max(1.0, duration):
            # Too many events in one step: hold position for the rest of it
            logger.warning(
                "Trajectory - %d events in one step at t=%.6g, holding the state for %.3g",
                MAX_EVENTS_PER_STEP, t_cur, remaining,
            )
            seg = self.segment
            if self.label(x) == LABEL_H:
                mu = 0.5 if seg.mu is None else seg.mu
                ell = self._mixed_cost(x, seg.alpha1, seg.alpha2, mu)
            else:
                side = 1 if x[-1] > 0 else 2
                ell = self._cost(side, x, seg.alpha1 if side == 1 else seg.alpha2)
            cost += discounted_increment(self.lam, t_cur, remaining, ell, ell)
        return x, cost, mu_start

    def _on_hyperplane(self, x, t, duration):
        """Slide on H, or report the side to leave to (time used is then 0)."""
        seg = self.segment
        p = self.problem
        d1 = p.side1.velocity(x, seg.alpha1)[-1]
        d2 = p.side2.velocity(x, seg.alpha2)[-1]
        if seg.slide:
            mu = mixing_coefficient(d1, d2)
            if mu is None:
                return x, 0.0, 0.0, None, 1 if d1 > 0 else 2
            if mu == ANY:
                l1 = self._cost(1, x, seg.alpha1)
                l2 = self._cost(2, x, seg.alpha2)
                mu = 1.0 if l1 <= l2 else 0.0
        else:
            mu = seg.mu
            normal = mu * d1 + (1.0 - mu) * d2
            if abs(normal) > self.normal_tol:
                self.violations.append((float(t), float(abs(normal))))
                if d1 > 0:
                    return x, 0.0, 0.0, mu, 1
                if d2 < 0:
                    return x, 0.0, 0.0, mu, 2
                # Neither side leaves: hold the mixed motion on H

        normal = abs(mu * d1 + (1.0 - mu) * d2)
        self.max_residual = max(self.max_residual, normal)
        if d1 > 0 and d2 < 0 and 0.0 < mu < 1.0:
            self.regular = False
        l_start = self._mixed_cost(x, seg.alpha1, seg.alpha2, mu)
        x_new = _rk4_mixed(p, x, seg.alpha1, seg.alpha2, mu, duration)
        x_new[-1] = 0.0
        l_end = self._mixed_cost(x_new, seg.alpha1, seg.alpha2, mu)
        cost = discounted_increment(self.lam, t, duration, l_start, l_end)
        return x_new, duration, cost, mu, None

    def _off_hyperplane(self, x, side, t, duration):
        """Follow side dynamics; stop at the first contact with H."""
        seg = self.segment
        spec = self.problem.side(side)
        alpha = seg.alpha1 if side == 1 else seg.alpha2
        sign = 1.0 if side == 1 else -1.0
        started_on_h = abs(x[-1]) <= self.snap_tol
        l_start = self._cost(side, x, alpha)

        x_try = _rk4(spec, x, alpha, duration)
        n_try = sign * x_try[-1]
        if n_try > self.snap_tol or started_on_h:
            if started_on_h and n_try <= self.snap_tol:
                x_try[-1] = 0.0
            l_end = self._cost(side, x_try, alpha)
            return x_try, duration, discounted_increment(self.lam, t, duration, l_start, l_end), False

        if abs(x_try[-1]) <= self.snap_tol:
            theta, x_hit = 1.0, x_try
        else:
            # x_N changes sign over the substep
            theta = brentq(lambda s: _rk4(spec, x, alpha, s * duration)[-1], 0.0, 1.0, xtol=1e-15)
            x_hit = _rk4(spec, x, alpha, theta * duration)
        x_hit = x_hit.copy()
        x_hit[-1] = 0.0
        tau = theta * duration
        l_end = self._cost(side, x_hit, alpha)
        return x_hit, tau, discounted_increment(self.lam, t, tau, l_start, l_end), True


def integrate(
    problem: TwoDomainProblem,
    x0,
    schedule: ControlSchedule,
    horizon: float,
    dt: float = 1e-3,
    snap_tol: float = 1e-10,
    normal_tol: float = 1e-9,
) -> Trajectory:
    """
    Integrate a controlled trajectory under a schedule.

    Parameters
    ----------
    problem : TwoDomainProblem
        Problem data.
    x0 : array_like
        Initial state, shape (N,); a scalar is accepted in 1-D.
    schedule : ControlSchedule
        Controls to apply. Segments switch on the step grid, or at a hit for
        `until_hit` segments.
    horizon : float
        Final time T >= dt.
    dt : float, optional
        Step size. Default is 1e-3. When T is not a multiple of dt the last
        step is shorter.
    snap_tol : float, optional
        States with |x_N| <= snap_tol are on H. Default is 1e-10.
    normal_tol : float, optional
        Largest normal drift accepted for an explicit mu on H. Default 1e-9.

    Returns
    -------
    Trajectory
        Grid path, labels, per-step discounted costs and flags.
    """
    if not dt > 0 or not horizon >= dt:
        raise ConfigError(f"Need dt > 0 and horizon >= dt, got dt={dt}, horizon={horizon}.")
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    if x.shape != (problem.dim,) or not np.all(np.isfinite(x)):
        raise ConfigError(f"Initial state must be a finite vector of shape ({problem.dim},).")
    schedule.validate(problem)
    if abs(x[-1]) <= snap_tol:
        x[-1] = 0.0

    # The last step is shortened so the path ends exactly at T
    n_steps = int(math.ceil(horizon / dt - 1e-9))
    times = dt * np.arange(n_steps + 1)
    times[-1] = horizon
    states = np.empty((n_steps + 1, problem.dim))
    labels = np.empty(n_steps + 1, dtype=object)
    mus = np.full(n_steps + 1, np.nan)
    step_costs = np.empty(n_steps)

    run = _Integrator(problem, schedule, snap_tol, normal_tol)
    states[0] = x
    labels[0] = run.label(x)
    for k in range(n_steps):
        run.sync(times[k])
        x, step_costs[k], mus[k] = run.advance(x, times[k], times[k + 1] - times[k])
        states[k + 1] = x
        labels[k + 1] = run.label(x)

    # Tail of the cost beyond T, bounded with the costs seen at the end state
    _, end_cost = sampled_bounds(problem, states[-1][None, :])
    bound = max(run.max_cost, end_cost)
    tail = bound * math.exp(-problem.lam * times[-1]) / problem.lam
    return Trajectory(
        times=times,
        states=states,
        labels=labels.astype(str),
        mus=mus,
        step_costs=step_costs,
        total_cost=float(step_costs.sum()),
        regular=run.regular,
        max_normal_residual_on_H=run.max_residual,
        tail_bound=tail,
        discount=problem.lam,
        violations=run.violations,
        schedule=schedule,
    )


def cost(trajectory: Trajectory) -> float:
    """Discounted cost over [0, T]; the tail beyond T is `trajectory.tail_bound`."""
    return float(np.sum(trajectory.step_costs))


def classify(trajectory: Trajectory) -> str:
    """"singular" if some sliding step used a singular mixed control."""
    return "regular" if trajectory.regular else "singular"


@dataclass(frozen=True, eq=False)
class Strategy:
    name: str
    schedule: ControlSchedule


def _normal_drifts(problem: TwoDomainProblem, side: int, x: np.ndarray) -> np.ndarray:
    velocities, _ = problem.side(side).tables(x[None, :])
    return velocities[0, :, -1]


def strategy_family(
    problem: TwoDomainProblem, x0, regular_only: bool = False, family: str = "all"
) -> list[Strategy]:
    """
    1-D strategy family from x0.

    Families
    --------
    slide
        Drift to H with each control pointing at it, then the cheapest slide
        (the regular one too, unless `regular_only` keeps only that).
    state_constraint
        A constant control that never points at H; from H, leave into a side.
    never_cross
        Drift to H, then hold on the arrival side with its cheapest
        tangential control (mu = 1 on side 1, mu = 0 on side 2).
    """
    if problem.dim != 1:
        raise ConfigError("Strategy families are defined in 1-D only.")
    if family not in ("all", "slide", "state_constraint", "never_cross"):
        raise ConfigError(f"Unknown strategy family '{family}'.")
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    origin = np.zeros(1)
    a1, a2 = problem.side1.controls, problem.side2.controls
    d1, d2 = _normal_drifts(problem, 1, origin), _normal_drifts(problem, 2, origin)
    _, c1 = problem.side1.tables(origin[None, :])
    _, c2 = problem.side2.tables(origin[None, :])

    slides = [interface_value(problem, origin, regular_only=True).minimizer]
    if not regular_only:
        slides.insert(0, interface_value(problem, origin, regular_only=False).minimizer)

    # Cheapest zero-drift hold on each side, paired with a control keeping mu at the extreme
    holds = {}
    for side, d, c, other_d in ((1, d1, c1[0], d2), (2, d2, c2[0], d1)):
        zero = np.flatnonzero(np.abs(d) <= 1e-12)
        if zero.size:
            k = int(zero[np.argmin(c[zero])])
            j = int(np.argmax(other_d)) if side == 1 else int(np.argmin(other_d))
            holds[side] = (k, j)

    out = []
    on_h = abs(x0[-1]) <= 1e-12
    side = 1 if x0[-1] > 0 else 2
    toward = []
    if not on_h:
        dx = _normal_drifts(problem, side, x0)
        toward = np.flatnonzero(dx * (1.0 if side == 1 else -1.0) < 0)
        away = np.flatnonzero(dx * (1.0 if side == 1 else -1.0) >= 0)

    def _pair(a_side, a_other):
        return (a_side, a_other) if side == 1 else (a_other, a_side)

    if family in ("all", "slide"):
        for ic in slides:
            tag = "reg" if ic.regular else "mix"
            final = Segment.sliding(ic.alpha1, ic.alpha2)
            if on_h:
                out.append(Strategy(f"slide[{tag}]", ControlSchedule.of(final)))
                continue
            for k in toward:
                own = (a1 if side == 1 else a2)[k]
                other = ic.alpha2 if side == 1 else ic.alpha1
                approach = Segment.sliding(*_pair(own, other), until_hit=True)
                out.append(
                    Strategy(f"hit[{own[0]:g}]+slide[{tag}]", ControlSchedule.of(approach, final))
                )

    if family in ("all", "state_constraint"):
        if on_h:
            for k in np.flatnonzero(d1 > 0):
                j = int(np.argmax(d2))
                if d2[j] > 0:
                    out.append(Strategy(f"leave1[{a1[k][0]:g}]", ControlSchedule.of(Segment.sliding(a1[k], a2[j]))))
            for k in np.flatnonzero(d2 < 0):
                j = int(np.argmin(d1))
                if d1[j] < 0:
                    out.append(Strategy(f"leave2[{a2[k][0]:g}]", ControlSchedule.of(Segment.sliding(a1[j], a2[k]))))
        else:
            other = (a2 if side == 1 else a1)[0]
            for k in away:
                own = (a1 if side == 1 else a2)[k]
                out.append(
                    Strategy(f"constant[{own[0]:g}]", ControlSchedule.of(Segment.sliding(*_pair(own, other))))
                )

    if family in ("all", "never_cross"):
        targets = (1, 2) if on_h else (side,)
        for s in targets:
            if s not in holds:
                continue
            k, j = holds[s]
            if s == 1:
                hold = Segment.fixed(a1[k], a2[j], 1.0)
            else:
                hold = Segment.fixed(a1[j], a2[k], 0.0)
            if on_h:
                out.append(Strategy(f"hold{s}", ControlSchedule.of(hold)))
                continue
            for k2 in toward:
                own = (a1 if side == 1 else a2)[k2]
                approach = Segment.sliding(*_pair(own, (a2 if side == 1 else a1)[0]), until_hit=True)
                out.append(Strategy(f"hit[{own[0]:g}]+hold{s}", ControlSchedule.of(approach, hold)))
    return out


def default_horizon(problem: TwoDomainProblem, x0, tail_tol: float = 1e-6) -> float:
    """Horizon T with M exp(-lambda T) / lambda <= tail_tol, M sampled near x0."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    _, bound = sampled_bounds(problem, np.stack([x0, np.zeros_like(x0)]))
    bound = max(bound + 1.0, 1.0)
    return float(math.log(bound / (problem.lam * tail_tol)) / problem.lam)


def _run_strategy(args) -> dict:
    problem, x0, strategy, horizon, dt = args
    traj = integrate(problem, x0, strategy.schedule, horizon, dt)
    return {
        "name": strategy.name,
        "cost": traj.total_cost,
        "regular": traj.regular,
        "tail_bound": traj.tail_bound,
        "max_normal_residual_on_H": traj.max_normal_residual_on_H,
        "violations": len(traj.violations),
    }


def evaluate_strategies(
    problem: TwoDomainProblem,
    x0,
    regular_only: bool = False,
    family: str = "all",
    dt: float = 1e-3,
    horizon: float | None = None,
    jobs: int = 1,
    verbose: bool = False,
) -> pd.DataFrame:
    """
    Cost of every strategy of the family, one row per strategy.

    Parameters
    ----------
    problem : TwoDomainProblem
        1-D problem.
    x0 : float or array_like
        Initial state.
    regular_only : bool, optional
        Drop strategies whose trajectory slides with a singular control.
    family : str, optional
        "all", "slide", "state_constraint" or "never_cross".
    dt, horizon : float, optional
        Step and final time; the horizon defaults to `default_horizon`.
    jobs : int, optional
        Worker processes; 1 runs sequentially.
    verbose : bool, optional
        Show a progress bar.

    Returns
    -------
    pd.DataFrame
        Columns name, cost, regular, tail_bound, max_normal_residual_on_H,
        violations.
    """
    strategies = strategy_family(problem, x0, regular_only, family)
    if horizon is None:
        horizon = default_horizon(problem, x0)
    tasks = [(problem, x0, s, horizon, dt) for s in strategies]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(tqdm(pool.map(_run_strategy, tasks), total=len(tasks), disable=not verbose))
    else:
        rows = [_run_strategy(t) for t in tqdm(tasks, disable=not verbose)]
    df = pd.DataFrame(rows, columns=["name", "cost", "regular", "tail_bound", "max_normal_residual_on_H", "violations"])
    if regular_only:
        df = df[df["regular"]].reset_index(drop=True)
    return df


def best_of_strategies(
    problem: TwoDomainProblem,
    x0,
    lam: float | None = None,
    strategy_family: str = "all",
    dt: float = 1e-3,
    horizon: float | None = None,
    regular_only: bool = False,
    jobs: int = 1,
) -> float:
    """
    Smallest cost over the 1-D strategy family: an upper bound on U-(x0),
    or on U+(x0) with `regular_only`.
    """
    if lam is not None and lam != problem.lam:
        problem = replace(problem, discount=float(lam))
    df = evaluate_strategies(problem, x0, regular_only, strategy_family, dt, horizon, jobs)
    if df.empty:
        raise ConfigError(f"No strategy available from x0={x0}.")
    best = df.loc[df["cost"].idxmin()]
    logger.info("Strategies - x0=%s - best %.6g by %s", x0, best["cost"], best["name"])
    return float(best["cost"])
