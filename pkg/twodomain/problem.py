"""
Problem data for infinite-horizon control with dynamics and costs that jump
across the hyperplane H = {x_N = 0}.

Each side Omega_i (Omega_1 = {x_N > 0}, Omega_2 = {x_N < 0}) carries its own
dynamics b_i(x, a), running cost l_i(x, a) and finite control grid A_i. The
half-space Hamiltonians are

    H_i(x, u, p) = max_a { -b_i(x, a) . p + lambda * u - l_i(x, a) }
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
import pandas as pd
from scipy.spatial import ConvexHull, QhullError

from twodomain.errors import ConfigError

logger = logging.getLogger(__name__)

# Cost coefficients (c0, c1, c2, c3) of l(x, a) = c0 + c1 a + c2 exp(-|x|) + c3 |x|
DICT_BUILTINS = {
    "state_constraint": {"side1": (1.0, -1.0, 1.0, 0.0), "side2": (1.0, 1.0, 1.0, 0.0)},
    "push_push": {"side1": (1.0, 1.0, 0.0, 0.0), "side2": (1.0, -1.0, 0.0, 0.0)},
    "pull_pull": {"side1": (1.0, -1.0, 0.0, 1.0), "side2": (1.0, 1.0, 0.0, 1.0)},
}

DICT_ALIASES = {
    "state_constraint": "state_constraint",
    "sc": "state_constraint",
    "push_push": "push_push",
    "pushpush": "push_push",
    "pull_pull": "pull_pull",
    "pullpull": "pull_pull",
}


def normalize_name(name: str) -> str | None:
    """Map a builtin name or alias to its canonical key, None if unknown."""
    return DICT_ALIASES.get(str(name).strip().lower().replace("-", "_"))


@dataclass(frozen=True, eq=False)
class ControlSet:
    """Finite grid standing in for a compact control set.

    Parameters
    ----------
    points : array_like
        Control vectors, shape (K, N). A flat sequence is read as K scalar
        controls (N = 1).
    lower, upper : float
        Declared componentwise bounds of the set.
    """

    points: np.ndarray
    lower: float = -1.0
    upper: float = 1.0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ConfigError("Control set must be a nonempty list of control vectors.")
        if not np.all(np.isfinite(pts)):
            raise ConfigError("Control set contains non-finite entries.")
        if pts.min() < self.lower - 1e-12 or pts.max() > self.upper + 1e-12:
            raise ConfigError(
                f"Control points outside the declared bounds [{self.lower}, {self.upper}]."
            )
        if np.unique(pts, axis=0).shape[0] != pts.shape[0]:
            raise ConfigError("Control set contains duplicate points.")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def grid(
        cls, lower: float = -1.0, upper: float = 1.0, resolution: float = 1.0, dim: int = 1
    ) -> "ControlSet":
        """Uniform grid of [lower, upper]^dim with the given spacing."""
        if resolution <= 0 or upper <= lower:
            raise ConfigError("Control grid needs resolution > 0 and upper > lower.")
        steps = (upper - lower) / resolution
        k = int(round(steps))
        if abs(steps - k) > 1e-9 * max(1.0, steps):
            raise ConfigError(
                f"Resolution {resolution} does not divide the interval [{lower}, {upper}]."
            )
        axis = np.round(np.linspace(lower, upper, k + 1), 12)
        pts = np.array(list(itertools.product(axis, repeat=dim)), dtype=float)
        return cls(pts, lower=lower, upper=upper)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    def index_of(self, alpha, tol: float = 1e-12) -> int | None:
        """Index of the grid point equal to alpha, None if absent."""
        alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
        if alpha.shape != (self.dim,):
            return None
        hits = np.flatnonzero(np.all(np.abs(self.points - alpha) <= tol, axis=1))
        return int(hits[0]) if hits.size else None


@dataclass(frozen=True)
class ParametricDynamics:
    """b(x, a) = a. Broadcasts over leading axes of x and a."""

    def __call__(self, x: np.ndarray, alpha: np.ndarray) -> np.ndarray:
        shape = np.broadcast_shapes(np.shape(x), np.shape(alpha))
        return np.broadcast_to(alpha, shape).astype(float)


@dataclass(frozen=True)
class ParametricCost:
    """l(x, a) = c0 + c1 a_N + c2 exp(-|x|) + c3 |x|."""

    c0: float = 0.0
    c1: float = 0.0
    c2: float = 0.0
    c3: float = 0.0

    def __call__(self, x: np.ndarray, alpha: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(np.asarray(x, dtype=float), axis=-1)
        a = np.asarray(alpha, dtype=float)[..., -1]
        return self.c0 + self.c1 * a + self.c2 * np.exp(-r) + self.c3 * r

    def to_dict(self) -> dict:
        return {"c0": self.c0, "c1": self.c1, "c2": self.c2, "c3": self.c3}


@dataclass(frozen=True, eq=False)
class SideSpec:
    """Dynamics, running cost and control grid of one half-space.

    Both callables take states of shape (..., N) and controls of shape
    (..., N) and must broadcast over the leading axes. The declared bounds
    are optional; when given, `check_assumptions` compares them with the
    sampled values.
    """

    dynamics: Callable[[np.ndarray, np.ndarray], np.ndarray]
    cost: Callable[[np.ndarray, np.ndarray], np.ndarray]
    control_set: ControlSet
    speed_bound: float | None = None
    cost_bound: float | None = None
    lipschitz: float | None = None
    state_independent: bool = False

    @property
    def controls(self) -> np.ndarray:
        return self.control_set.points

    def velocity(self, x: np.ndarray, alpha: np.ndarray) -> np.ndarray:
        """Velocity b(x, a) for a single state and a single control."""
        return np.broadcast_to(self.dynamics(x, alpha), np.shape(x)).astype(float)

    def running_cost(self, x: np.ndarray, alpha: np.ndarray) -> float:
        return float(self.cost(x, alpha))

    def tables(self, states: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Velocities (n, K, N) and costs (n, K) over states (n, N) and all controls."""
        states = np.asarray(states, dtype=float)
        xs = states[:, None, :]
        al = self.controls[None, :, :]
        n, k, dim = states.shape[0], self.controls.shape[0], states.shape[1]
        velocities = np.broadcast_to(self.dynamics(xs, al), (n, k, dim)).astype(float)
        costs = np.broadcast_to(self.cost(xs, al), (n, k)).astype(float)
        return velocities, costs


@dataclass(frozen=True, eq=False)
class TwoDomainProblem:
    """Full two-domain problem.

    Parameters
    ----------
    dim : int
        State dimension N >= 1. The interface is x_N = 0.
    side1, side2 : SideSpec
        Data on Omega_1 = {x_N > 0} and Omega_2 = {x_N < 0}.
    discount : float
        Discount rate lambda > 0.
    controllability_radius : float
        delta > 0 such that the velocity hull contains B(0, delta).
    name : str
        Builtin key, or "custom".
    coefficients : dict, optional
        Parametric cost coefficients per side, kept for serialization.
    """

    dim: int
    side1: SideSpec
    side2: SideSpec
    discount: float
    controllability_radius: float = 1.0
    name: str = "custom"
    coefficients: dict | None = field(default=None)

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ConfigError(f"Dimension must be an integer >= 1, got {self.dim}.")
        if not np.isfinite(self.discount) or self.discount <= 0:
            raise ConfigError(f"Discount lambda must be > 0, got {self.discount}.")
        if not np.isfinite(self.controllability_radius) or self.controllability_radius <= 0:
            raise ConfigError(
                f"Controllability radius delta must be > 0, got {self.controllability_radius}."
            )
        for i, side in ((1, self.side1), (2, self.side2)):
            if side.control_set.dim != self.dim:
                raise ConfigError(
                    f"Side {i} controls have dimension {side.control_set.dim}, "
                    f"problem has dimension {self.dim}."
                )

    @property
    def lam(self) -> float:
        return float(self.discount)

    def side(self, i: int) -> SideSpec:
        if i == 1:
            return self.side1
        if i == 2:
            return self.side2
        raise ConfigError(f"Side must be 1 or 2, got {i}.")

    def to_dict(self) -> dict:
        """JSON-ready description (parametric family only)."""
        out = {
            "name": self.name,
            "dim": self.dim,
            "lambda": self.lam,
            "delta": self.controllability_radius,
        }
        if self.coefficients is not None:
            cs = self.side1.control_set
            pts = np.unique(cs.points[:, -1])
            resolution = float(pts[1] - pts[0]) if pts.size > 1 else 0.0
            out["control"] = {"min": cs.lower, "max": cs.upper, "resolution": resolution}
            out.update(self.coefficients)
        return out


class HamiltonianQuery(NamedTuple):
    """Point (x, u, p) at which a Hamiltonian is evaluated."""

    x: np.ndarray
    u: float
    p: np.ndarray


class HamiltonianValue(NamedTuple):
    value: float
    control: np.ndarray


def make_query(x, u: float, p, dim: int = 1) -> HamiltonianQuery:
    """Build a validated HamiltonianQuery, rejecting non-finite entries."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if x.shape != (dim,) or p.shape != (dim,):
        raise ConfigError(f"State and gradient must have shape ({dim},).")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(p)) and np.isfinite(u)):
        raise ConfigError("Hamiltonian query has non-finite entries.")
    return HamiltonianQuery(x, float(u), p)


def eval_hamiltonian(problem: TwoDomainProblem, side: int, q: HamiltonianQuery) -> HamiltonianValue:
    """
    Evaluate H_i(x, u, p) as a max over the finite control grid.

    Parameters
    ----------
    problem : TwoDomainProblem
        Problem data.
    side : int
        1 or 2.
    q : HamiltonianQuery
        Query point; see `make_query`.

    Returns
    -------
    HamiltonianValue
        The value and the maximizing control.
    """
    q = make_query(q.x, q.u, q.p, problem.dim)
    spec = problem.side(side)
    velocities, costs = spec.tables(q.x[None, :])
    terms = -velocities[0] @ q.p + problem.lam * q.u - costs[0]
    k = int(np.argmax(terms))
    return HamiltonianValue(float(terms[k]), spec.controls[k].copy())


def parametric_side(coefficients: dict, control_set: ControlSet) -> SideSpec:
    """Side of the b = a, l = c0 + c1 a + c2 exp(-|x|) + c3 |x| family."""
    try:
        cost = ParametricCost(*(float(coefficients.get(k, 0.0)) for k in ("c0", "c1", "c2", "c3")))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"Invalid cost coefficients {coefficients}: {exc}") from exc
    speed = float(np.max(np.linalg.norm(control_set.points, axis=1)))
    return SideSpec(
        dynamics=ParametricDynamics(),
        cost=cost,
        control_set=control_set,
        speed_bound=speed,
        lipschitz=0.0,
        state_independent=True,
    )


def parametric_problem(
    dim: int,
    lam: float,
    delta: float,
    control: dict,
    side1: dict,
    side2: dict,
    name: str = "custom",
) -> TwoDomainProblem:
    """Problem of the parametric family, as read from a problem JSON."""
    controls = ControlSet.grid(
        float(control.get("min", -1.0)),
        float(control.get("max", 1.0)),
        float(control.get("resolution", 1.0)),
        dim=int(dim),
    )
    spec1 = parametric_side(side1, controls)
    spec2 = parametric_side(side2, controls)
    return TwoDomainProblem(
        dim=int(dim),
        side1=spec1,
        side2=spec2,
        discount=float(lam),
        controllability_radius=float(delta),
        name=name,
        coefficients={"side1": spec1.cost.to_dict(), "side2": spec2.cost.to_dict()},
    )


def builtin_problem(name: str, lam: float = 1.0, control_resolution: float = 1.0) -> TwoDomainProblem:
    """
    One of the three 1-D examples: b_i = a with a in [-1, 1], delta = 1.

    Parameters
    ----------
    name : str
        "state_constraint", "push_push" or "pull_pull" (aliases "sc",
        "pushpush", "pullpull" accepted).
    lam : float, optional
        Discount rate. Default is 1.
    control_resolution : float, optional
        Grid spacing; 1 / resolution must be an integer so that -1, 0 and 1
        are grid points. Default is 1.

    Returns
    -------
    TwoDomainProblem
        The example problem.
    """
    key = normalize_name(name)
    if key is None:
        raise ConfigError(
            f"Unknown builtin problem '{name}'. Options are {sorted(DICT_BUILTINS)}."
        )
    k = 1.0 / control_resolution if control_resolution > 0 else np.inf
    if not np.isfinite(k) or abs(k - round(k)) > 1e-9:
        raise ConfigError(
            f"Control resolution {control_resolution} must divide 1 so that -1, 0, 1 are grid points."
        )
    coefs = DICT_BUILTINS[key]
    return parametric_problem(
        dim=1,
        lam=lam,
        delta=1.0,
        control={"min": -1.0, "max": 1.0, "resolution": control_resolution},
        side1=dict(zip(("c0", "c1", "c2", "c3"), coefs["side1"])),
        side2=dict(zip(("c0", "c1", "c2", "c3"), coefs["side2"])),
        name=key,
    )


def sampled_bounds(problem: TwoDomainProblem, states) -> tuple[float, float]:
    """Max velocity norm M_b and max |cost| M over states x controls, both sides."""
    states = np.asarray(states, dtype=float).reshape(-1, problem.dim)
    speed, cost = 0.0, 0.0
    for side in (problem.side1, problem.side2):
        velocities, costs = side.tables(states)
        speed = max(speed, float(np.linalg.norm(velocities, axis=-1).max()))
        cost = max(cost, float(np.abs(costs).max()))
    return speed, cost


def _ball_margin(velocities: np.ndarray, delta: float) -> float:
    """Signed distance by which B(0, delta) fits inside conv(velocities)."""
    if velocities.shape[1] == 1:
        v = velocities[:, 0]
        return float(min(-v.min(), v.max()) - delta)
    try:
        hull = ConvexHull(velocities)
    except (QhullError, ValueError):
        # Degenerate (flat) hull has empty interior
        return -float(delta)
    # Facet equations read normal . x + offset <= 0 inside, with unit normals
    return float(np.min(-hull.equations[:, -1]) - delta)


@dataclass
class AssumptionReport:
    """Outcome of `check_assumptions`."""

    speed_bound: float
    cost_bound: float
    lipschitz: dict
    samples: pd.DataFrame
    declared_ok: bool
    passed: bool

    def to_dict(self) -> dict:
        return {
            "speed_bound": self.speed_bound,
            "cost_bound": self.cost_bound,
            "lipschitz": self.lipschitz,
            "controllability": self.samples.to_dict(orient="records"),
            "declared_ok": self.declared_ok,
            "pass": self.passed,
        }


def check_assumptions(problem: TwoDomainProblem, state_samples, tol: float = 1e-9) -> AssumptionReport:
    """
    Sample boundedness, Lipschitz continuity and controllability.

    Parameters
    ----------
    problem : TwoDomainProblem
        Problem data.
    state_samples : array_like
        States, shape (n, N); scalars are accepted when N = 1.
    tol : float, optional
        Slack on the controllability ball and the declared bounds.

    Returns
    -------
    AssumptionReport
        Bounds M_b and M, Lipschitz quotients per side, a per-sample table
        of the ball margins and the overall verdict.
    """
    states = np.asarray(state_samples, dtype=float).reshape(-1, problem.dim)
    if states.shape[0] == 0:
        raise ConfigError("check_assumptions needs at least one state sample.")

    speed, cost = sampled_bounds(problem, states)
    delta = problem.controllability_radius
    rows = {"x": [s.tolist() if problem.dim > 1 else float(s[0]) for s in states]}
    lipschitz = {}
    declared_ok = True
    for i in (1, 2):
        side = problem.side(i)
        velocities, costs = side.tables(states)
        margins = np.array([_ball_margin(v, delta) for v in velocities])
        rows[f"margin{i}"] = margins
        rows[f"side{i}_ok"] = margins >= -tol

        # Lipschitz quotient in x, worst control, over all sample pairs
        quotient = 0.0
        if states.shape[0] > 1:
            dist = np.linalg.norm(states[:, None, :] - states[None, :, :], axis=-1)
            jump = np.linalg.norm(velocities[:, None] - velocities[None, :], axis=-1).max(axis=-1)
            mask = dist > 0
            if np.any(mask):
                quotient = float(np.max(jump[mask] / dist[mask]))
        lipschitz[f"side{i}"] = quotient

        side_speed = float(np.linalg.norm(velocities, axis=-1).max())
        side_cost = float(np.abs(costs).max())
        if side.speed_bound is not None and side_speed > side.speed_bound + tol:
            declared_ok = False
            logger.warning("Assumptions - side %d - speed %.3g exceeds declared M_b", i, side_speed)
        if side.cost_bound is not None and side_cost > side.cost_bound + tol:
            declared_ok = False
            logger.warning("Assumptions - side %d - cost %.3g exceeds declared M", i, side_cost)
        if side.lipschitz is not None and quotient > side.lipschitz + tol:
            declared_ok = False
            logger.warning("Assumptions - side %d - Lipschitz %.3g exceeds declared L", i, quotient)

    df = pd.DataFrame(rows)
    df["ok"] = df["side1_ok"] & df["side2_ok"]
    passed = bool(df["ok"].all()) and declared_ok
    logger.info(
        "Assumptions - M_b=%.3g M=%.3g - controllability %s", speed, cost, "ok" if passed else "FAILED"
    )
    return AssumptionReport(speed, cost, lipschitz, df, declared_ok, passed)
