"""
Regularized approximations of the two-domain problem on a 1-D grid.

- Filippov mixing: phi_eps(x) H1 + (1 - phi_eps(x)) H2 = 0, solved as one
  controlled problem over the pairs A1 x A2 with the semi-Lagrangian kernel.
- Vanishing viscosity: -eps u'' + H(x, u, u') = 0 by pseudo-time marching.
- Combined: -delta_eps u'' + phi_eps H1 + (1 - phi_eps) H2 = 0, also by
  pseudo-time marching. Exploratory.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np
import pandas as pd
from tqdm import tqdm

from twodomain.errors import ConfigError, SolverError
from twodomain.hjb_grid import Grid1D, ValueField, far_conditions, solve_controlled_line
from twodomain.problem import TwoDomainProblem

logger = logging.getLogger(__name__)

DICT_PROFILES = {
    "tanh": lambda s: 0.5 * (1.0 + np.tanh(s)),
    "arctan": lambda s: 0.5 + np.arctan(s) / np.pi,
}

SCHEMES = ("filippov", "viscous", "combined")

# Residual history is sampled every this many pseudo-time steps
HISTORY_EVERY = 1000


@dataclass(frozen=True)
class MixingProfile:
    """phi_eps(x) = phi(x / eps) with phi increasing from 0 to 1."""

    eps: float
    shape: str = "tanh"

    def __post_init__(self):
        if not np.isfinite(self.eps) or self.eps <= 0:
            raise ConfigError(f"Mixing width eps must be > 0, got {self.eps}.")
        if self.shape not in DICT_PROFILES:
            raise ConfigError(f"Unknown profile '{self.shape}'. Options are {list(DICT_PROFILES)}.")

    def __call__(self, x) -> np.ndarray:
        return DICT_PROFILES[self.shape](np.asarray(x, dtype=float) / self.eps)


@dataclass(frozen=True)
class SchemeParams:
    """Numerical parameters shared by the regularized solvers.

    `pseudo_dt`, `tol_fp` and `max_iters` default per solver when None.
    """

    eps: float
    delta_eps: float = 0.0
    pseudo_dt: float | None = None
    tol_fp: float | None = None
    max_iters: int | None = None

    def __post_init__(self):
        if not np.isfinite(self.eps) or self.eps <= 0:
            raise ConfigError(f"eps must be > 0, got {self.eps}.")
        if not np.isfinite(self.delta_eps) or self.delta_eps < 0:
            raise ConfigError(f"delta_eps must be >= 0, got {self.delta_eps}.")
        if self.pseudo_dt is not None and not self.pseudo_dt > 0:
            raise ConfigError(f"pseudo_dt must be > 0, got {self.pseudo_dt}.")
        if self.tol_fp is not None and not self.tol_fp > 0:
            raise ConfigError(f"tol_fp must be > 0, got {self.tol_fp}.")
        if self.max_iters is not None and self.max_iters < 1:
            raise ConfigError(f"max_iters must be >= 1, got {self.max_iters}.")


def resolve_delta_eps(delta_eps, eps: float) -> float:
    """Viscosity of the combined scheme: a number, "cube" (eps^3) or "sqrt" (eps^0.5)."""
    if isinstance(delta_eps, str):
        key = delta_eps.strip().lower()
        if key == "cube":
            return eps**3
        if key == "sqrt":
            return math.sqrt(eps)
        try:
            delta_eps = float(key)
        except ValueError:
            raise ConfigError(f"delta_eps must be a number, 'cube' or 'sqrt', got '{delta_eps}'.")
    delta_eps = float(delta_eps)
    if not np.isfinite(delta_eps) or delta_eps < 0:
        raise ConfigError(f"delta_eps must be >= 0, got {delta_eps}.")
    return delta_eps


def _require_1d(problem: TwoDomainProblem) -> None:
    if problem.dim != 1:
        raise ConfigError(f"Regularized schemes are 1-D; the problem has dimension {problem.dim}.")


def _tables(problem: TwoDomainProblem, x: np.ndarray):
    b1, l1 = problem.side1.tables(x[:, None])
    b2, l2 = problem.side2.tables(x[:, None])
    return b1[:, :, 0], l1, b2[:, :, 0], l2


def solve_filippov(
    problem: TwoDomainProblem,
    profile: MixingProfile,
    grid: Grid1D,
    far_bc: str = "state_constraint",
    far_values: tuple[float | None, float | None] = (None, None),
    params: SchemeParams | None = None,
) -> ValueField:
    """
    Filippov-mixed equation solved as one controlled problem on [-L, L].

    The mixed Hamiltonian is the sup over pairs (a1, a2) of the affine terms
    with drift phi b1 + (1 - phi) b2 and cost phi l1 + (1 - phi) l2, so the
    semi-Lagrangian kernel runs on the pair tables.

    Parameters
    ----------
    problem : TwoDomainProblem
        1-D problem.
    profile : MixingProfile
        phi_eps.
    grid : Grid1D
        Grid on [-L, L].
    far_bc : str, optional
        "state_constraint" or "closed_form" (then `far_values` at -L and L).
    params : SchemeParams, optional
        Only tol_fp and max_iters are used.

    Returns
    -------
    ValueField
        Kind "filippov".
    """
    _require_1d(problem)
    x = grid.nodes
    b1, l1, b2, l2 = _tables(problem, x)
    phi = profile(x)[:, None, None]
    n = x.size
    drift = (phi * b1[:, :, None] + (1.0 - phi) * b2[:, None, :]).reshape(n, -1)
    cost = (phi * l1[:, :, None] + (1.0 - phi) * l2[:, None, :]).reshape(n, -1)
    admissible, fixed = far_conditions(drift, far_bc, far_values)
    tol_fp = 1e-10 if params is None or params.tol_fp is None else params.tol_fp
    max_iters = None if params is None else params.max_iters
    u, meta = solve_controlled_line(
        x, problem.lam, drift, cost, admissible, fixed, tol_fp, max_iters, f"Filippov - eps {profile.eps:g}"
    )
    meta.update({"eps": profile.eps, "profile": profile.shape, "far_bc": far_bc})
    return ValueField(grid, u, "filippov", meta)


def _march(
    x: np.ndarray,
    h: float,
    lam: float,
    sides: list,
    weights: np.ndarray,
    delta: float,
    bc,
    pseudo_dt: float | None,
    tol_fp: float,
    max_iters: int,
    label: str,
) -> tuple[np.ndarray, dict]:
    """
    Explicit pseudo-time marching of u_t = delta u'' + sum_i w_i min_a (b p + l) - lambda u.

    `sides` holds (drift, cost) tables over the interior nodes; p is the
    forward difference where b > 0 and the backward one otherwise.
    """
    interior = slice(1, -1)
    speed = max(float(np.max(np.abs(b))) for b, _ in sides)
    limit = 1.0 / (2.0 * delta / h**2 + speed / h + lam)
    if pseudo_dt is None:
        pseudo_dt = 0.9 * limit
    elif pseudo_dt > limit:
        raise ConfigError(f"{label} - pseudo_dt {pseudo_dt:.3g} violates the CFL bound {limit:.3g}.")

    upwind = []
    for (b, cost), w in zip(sides, weights):
        forward = b > 0
        upwind.append((np.where(forward, b, 0.0), np.where(forward, 0.0, b), cost, w[interior]))

    if bc is None:
        u = np.zeros_like(x)
    else:
        left, right = float(bc[0]), float(bc[1])
        if not (np.isfinite(left) and np.isfinite(right)):
            raise ConfigError(f"{label} - boundary values must be finite.")
        u = np.interp(x, [x[0], x[-1]], [left, right])

    history = []
    for it in range(1, max_iters + 1):
        forward = (u[2:] - u[1:-1]) / h
        backward = (u[1:-1] - u[:-2]) / h
        rate = delta * (forward - backward) / h - lam * u[interior]
        for b_fwd, b_bwd, cost, w in upwind:
            rate += w * np.min(b_fwd * forward[:, None] + b_bwd * backward[:, None] + cost, axis=1)
        u[interior] += pseudo_dt * rate
        if bc is None:
            u[0] = 2.0 * u[1] - u[2]
            u[-1] = 2.0 * u[-2] - u[-3]
        residual = float(np.max(np.abs(rate)))
        if it % HISTORY_EVERY == 0:
            history.append(residual)
        if not np.isfinite(residual):
            raise SolverError(f"{label} - pseudo-time marching diverged at iteration {it}", history)
        if residual <= tol_fp:
            break
    else:
        raise SolverError(
            f"{label} - residual {residual:.2e} above {tol_fp:.1e} after {max_iters} iterations", history
        )
    logger.info("%s - converged in %d iterations (residual %.1e)", label, it, residual)
    return u, {"iterations": it, "residual": residual, "pseudo_dt": pseudo_dt, "history": history}


def _march_params(params: SchemeParams | None) -> tuple[float | None, float, int]:
    if params is None:
        return None, 1e-8, 2_000_000
    tol = 1e-8 if params.tol_fp is None else params.tol_fp
    iters = 2_000_000 if params.max_iters is None else params.max_iters
    return params.pseudo_dt, tol, iters


def solve_viscous(
    problem: TwoDomainProblem,
    eps: float,
    grid: Grid1D,
    bc: tuple[float, float] | None = None,
    params: SchemeParams | None = None,
) -> ValueField:
    """
    Steady state of u_t = eps u'' - H(x, u, u').

    Parameters
    ----------
    problem : TwoDomainProblem
        1-D problem. H is H1 for x > 0, H2 for x < 0 and their average at 0.
    eps : float
        Viscosity, > 0.
    grid : Grid1D
        Grid on [-L, L].
    bc : tuple, optional
        Dirichlet values at -L and L. None extrapolates linearly.
    params : SchemeParams, optional
        pseudo_dt (default 0.9 of the CFL bound), tol_fp (default 1e-8) and
        max_iters (default 2e6).

    Returns
    -------
    ValueField
        Kind "viscous"; meta holds iterations and the residual history.
    """
    _require_1d(problem)
    if not np.isfinite(eps) or eps <= 0:
        raise ConfigError(f"Viscosity eps must be > 0, got {eps}.")
    x = grid.nodes
    b1, l1, b2, l2 = _tables(problem, x[1:-1])
    w1 = np.where(x > 0, 1.0, np.where(x < 0, 0.0, 0.5))
    pseudo_dt, tol, iters = _march_params(params)
    u, meta = _march(
        x, grid.h, problem.lam, [(b1, l1), (b2, l2)], [w1, 1.0 - w1], eps, bc,
        pseudo_dt, tol, iters, f"Viscous - eps {eps:g}",
    )
    meta.update({"eps": eps, "bc": None if bc is None else list(map(float, bc))})
    return ValueField(grid, u, "viscous", meta)


def solve_combined(
    problem: TwoDomainProblem,
    eps: float,
    delta_eps,
    profile: MixingProfile | None = None,
    grid: Grid1D | None = None,
    bc: tuple[float, float] | None = None,
    params: SchemeParams | None = None,
    references: Mapping[str, Callable] | None = None,
) -> ValueField:
    """
    Filippov mixing plus a viscosity delta_eps. Exploratory.

    Parameters
    ----------
    problem : TwoDomainProblem
        1-D problem.
    eps : float
        Mixing width.
    delta_eps : float or str
        Viscosity, or "cube" / "sqrt" of eps. Zero reduces to
        `solve_filippov`.
    profile : MixingProfile, optional
        Default tanh profile with width eps.
    grid : Grid1D, optional
        Default Grid1D().
    bc : tuple, optional
        Dirichlet values at -L and L; None extrapolates linearly.
    references : dict, optional
        "U_minus" / "U_plus" callables; when given, meta reports the sup
        distance to each.

    Returns
    -------
    ValueField
        Kind "combined".
    """
    _require_1d(problem)
    grid = Grid1D() if grid is None else grid
    profile = MixingProfile(eps) if profile is None else profile
    if profile.eps != eps:
        raise ConfigError(f"Profile width {profile.eps} differs from eps {eps}.")
    delta = resolve_delta_eps(delta_eps, eps)
    x = grid.nodes

    if delta == 0.0:
        far_bc, far_values = ("state_constraint", (None, None)) if bc is None else ("closed_form", bc)
        reduced = solve_filippov(problem, profile, grid, far_bc, far_values, params)
        u = np.array(reduced.values)
        meta = dict(reduced.meta, reduced=True)
    else:
        b1, l1, b2, l2 = _tables(problem, x[1:-1])
        phi = profile(x)
        pseudo_dt, tol, iters = _march_params(params)
        u, meta = _march(
            x, grid.h, problem.lam, [(b1, l1), (b2, l2)], [phi, 1.0 - phi], delta, bc,
            pseudo_dt, tol, iters, f"Combined - eps {eps:g} delta {delta:.3g}",
        )
        meta.update({"reduced": False, "profile": profile.shape})
    meta.update({"eps": eps, "delta_eps": delta, "exploratory": True})
    for kind in ("U_minus", "U_plus"):
        if references and kind in references:
            meta[f"dist_{kind}"] = float(np.max(np.abs(u - references[kind](x))))
    return ValueField(grid, u, "combined", meta)


def _sweep_one(args) -> dict:
    problem, scheme, eps, grid, delta_eps, shape, bc, targets = args
    if scheme == "filippov":
        far_bc = "state_constraint" if bc is None else "closed_form"
        field = solve_filippov(problem, MixingProfile(eps, shape), grid, far_bc, bc or (None, None))
    elif scheme == "viscous":
        field = solve_viscous(problem, eps, grid, bc)
    else:
        field = solve_combined(problem, eps, delta_eps, MixingProfile(eps, shape), grid, bc)
    row = {"eps": eps, "scheme": scheme}
    for kind in ("U_minus", "U_plus"):
        target = targets.get(kind)
        column = "sup_err_Uminus" if kind == "U_minus" else "sup_err_Uplus"
        row[column] = np.nan if target is None else float(np.max(np.abs(field.values - target)))
    if "U_plus" in targets:
        row["min_diff_Uplus"] = float(np.min(field.values - targets["U_plus"]))
    row["iters"] = field.meta["iterations"]
    if scheme == "combined":
        row["delta_eps"] = field.meta["delta_eps"]
    return row


def boundary_values(scheme: str, references: Mapping[str, Callable] | None, xmax: float):
    """Far data per scheme: U- for Filippov, U+ for viscous, none for combined."""
    kind = {"filippov": "U_minus", "viscous": "U_plus"}.get(scheme)
    if not references or kind not in references:
        return None
    f = references[kind]
    return float(f(-xmax)), float(f(xmax))


def sweep(
    problem: TwoDomainProblem,
    scheme: str,
    eps_values,
    grid: Grid1D,
    delta_eps="cube",
    profile_shape: str = "tanh",
    references: Mapping[str, Callable] | None = None,
    jobs: int = 1,
    verbose: bool = False,
) -> pd.DataFrame:
    """
    Solve a scheme for each eps and measure the sup distance to U- and U+.

    Parameters
    ----------
    problem : TwoDomainProblem
        1-D problem.
    scheme : str
        "filippov", "viscous" or "combined".
    eps_values : iterable of float
        Widths, solved independently.
    grid : Grid1D
        Grid on [-L, L].
    delta_eps : float or str, optional
        Combined scheme viscosity, see `resolve_delta_eps`.
    profile_shape : str, optional
        Key of DICT_PROFILES.
    references : dict, optional
        "U_minus" / "U_plus" callables. Missing ones give NaN errors; they
        also set the far data (see `boundary_values`).
    jobs : int, optional
        Worker processes; 1 runs sequentially.
    verbose : bool, optional
        Show a progress bar.

    Returns
    -------
    pd.DataFrame
        Columns eps, scheme, sup_err_Uminus, sup_err_Uplus, iters; also
        min_diff_Uplus (smallest field - U+) when U+ is given, and delta_eps
        for the combined scheme.
    """
    if scheme not in SCHEMES:
        raise ConfigError(f"Unknown scheme '{scheme}'. Options are {SCHEMES}.")
    eps_values = [float(e) for e in eps_values]
    if not eps_values:
        raise ConfigError("Sweep needs at least one eps value.")
    if scheme == "combined":
        for e in eps_values:
            resolve_delta_eps(delta_eps, e)
    x = grid.nodes
    targets = {k: np.asarray(f(x), dtype=float) for k, f in (references or {}).items() if k in ("U_minus", "U_plus")}
    bc = boundary_values(scheme, references, grid.xmax)
    tasks = [(problem, scheme, e, grid, delta_eps, profile_shape, bc, targets) for e in eps_values]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(tqdm(pool.map(_sweep_one, tasks), total=len(tasks), disable=not verbose))
    else:
        rows = [_sweep_one(t) for t in tqdm(tasks, desc=scheme, disable=not verbose)]
    return pd.DataFrame(rows)
