"""
Interface controls on H = {x_N = 0}.

A pair (a1, a2) with a weight mu in [0, 1] is admissible on H when the mixed
velocity b_H = mu b_1 + (1 - mu) b_2 has zero normal component. The mixed
control is singular when both sides push away from H (b_1 . e_N > 0 and
b_2 . e_N < 0) and regular when b_1 . e_N <= 0 and b_2 . e_N >= 0.
"""

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from twodomain.errors import ConfigError, EmptyControlSetError
from twodomain.problem import TwoDomainProblem

logger = logging.getLogger(__name__)

# Returned by mixing_coefficient when both normal drifts vanish
ANY = "any"


def mixing_coefficient(d1: float, d2: float, tol: float = 0.0) -> float | str | None:
    """
    Weight mu with mu d1 + (1 - mu) d2 = 0.

    Parameters
    ----------
    d1, d2 : float
        Normal components b_1 . e_N and b_2 . e_N.
    tol : float, optional
        Drifts with absolute value <= tol count as zero. Default is 0.

    Returns
    -------
    float, "any" or None
        mu in [0, 1]; ANY when d1 = d2 = 0; None when both drifts share a
        strict sign.
    """
    if not (np.isfinite(d1) and np.isfinite(d2)):
        raise ConfigError("Normal drifts must be finite.")
    d1 = 0.0 if abs(d1) <= tol else float(d1)
    d2 = 0.0 if abs(d2) <= tol else float(d2)
    if d1 == 0.0 and d2 == 0.0:
        return ANY
    if d1 * d2 > 0:
        return None
    mu = -d2 / (d1 - d2)
    return min(max(mu, 0.0), 1.0)


@dataclass(frozen=True, eq=False)
class InterfaceControl:
    """Mixed control (alpha1, alpha2, mu) on the hyperplane."""

    alpha1: np.ndarray
    alpha2: np.ndarray
    mu: float
    normal_residual: float
    regular: bool
    d1: float = 0.0
    d2: float = 0.0

    @property
    def singular(self) -> bool:
        return self.d1 > 0 and self.d2 < 0

    def to_dict(self) -> dict:
        def _out(a):
            return float(a[0]) if a.size == 1 else a.tolist()

        return {
            "alpha1": _out(self.alpha1),
            "alpha2": _out(self.alpha2),
            "mu": self.mu,
            "regular": self.regular,
            "singular": self.singular,
        }


@dataclass(frozen=True)
class InterfaceValue:
    value: float
    minimizer: InterfaceControl
    regular_only: bool


class _InterfaceTable(NamedTuple):
    i1: np.ndarray
    i2: np.ndarray
    mu: np.ndarray
    velocity: np.ndarray
    cost: np.ndarray
    residual: np.ndarray
    regular: np.ndarray
    d1: np.ndarray
    d2: np.ndarray


def _on_hyperplane(problem: TwoDomainProblem, x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (problem.dim,) or not np.all(np.isfinite(x)):
        raise ConfigError(f"Interface state must be a finite vector of shape ({problem.dim},).")
    if abs(x[-1]) > 1e-12:
        raise ConfigError(f"Interface state must satisfy x_N = 0, got x_N = {x[-1]}.")
    x = x.copy()
    x[-1] = 0.0
    return x


def _interface_table(
    problem: TwoDomainProblem, x: np.ndarray, regular_only: bool, tol: float
) -> _InterfaceTable:
    """All admissible (a1, a2, mu) at x, vectorized over control pairs."""
    b1, c1 = problem.side1.tables(x[None, :])
    b2, c2 = problem.side2.tables(x[None, :])
    b1, c1, b2, c2 = b1[0], c1[0], b2[0], c2[0]
    k1, k2 = b1.shape[0], b2.shape[0]

    i1, i2 = np.meshgrid(np.arange(k1), np.arange(k2), indexing="ij")
    i1, i2 = i1.ravel(), i2.ravel()
    d1, d2 = b1[i1, -1], b2[i2, -1]
    z1 = np.where(np.abs(d1) <= tol, 0.0, d1)
    z2 = np.where(np.abs(d2) <= tol, 0.0, d2)

    both_zero = (z1 == 0.0) & (z2 == 0.0)
    feasible = (z1 * z2 <= 0) & ~both_zero
    with np.errstate(divide="ignore", invalid="ignore"):
        mu_feasible = np.clip(-z2 / (z1 - z2), 0.0, 1.0)

    # Cost is affine in mu, so mu in {0, 1} covers the both-zero pairs
    pair = np.concatenate([np.flatnonzero(feasible), np.flatnonzero(both_zero), np.flatnonzero(both_zero)])
    mu = np.concatenate(
        [mu_feasible[feasible], np.zeros(both_zero.sum()), np.ones(both_zero.sum())]
    )
    order = np.lexsort((mu, pair))
    pair, mu = pair[order], mu[order]

    j1, j2 = i1[pair], i2[pair]
    e1, e2 = d1[pair], d2[pair]
    velocity = mu[:, None] * b1[j1] + (1.0 - mu)[:, None] * b2[j2]
    cost = mu * c1[j1] + (1.0 - mu) * c2[j2]
    residual = np.abs(velocity[:, -1])
    regular = (e1 <= tol) & (e2 >= -tol)

    keep = residual <= max(tol, 1e-12)
    if regular_only:
        keep &= regular
    return _InterfaceTable(
        j1[keep], j2[keep], mu[keep], velocity[keep], cost[keep], residual[keep], regular[keep],
        e1[keep], e2[keep],
    )


def _control(problem: TwoDomainProblem, table: _InterfaceTable, k: int) -> InterfaceControl:
    return InterfaceControl(
        alpha1=problem.side1.controls[table.i1[k]].copy(),
        alpha2=problem.side2.controls[table.i2[k]].copy(),
        mu=float(table.mu[k]),
        normal_residual=float(table.residual[k]),
        regular=bool(table.regular[k]),
        d1=float(table.d1[k]),
        d2=float(table.d2[k]),
    )


def interface_control_set(
    problem: TwoDomainProblem, x=0.0, regular_only: bool = False, tol: float = 1e-12
) -> list[InterfaceControl]:
    """
    Enumerate A_0(x), or A_0^reg(x) when `regular_only`.

    Parameters
    ----------
    problem : TwoDomainProblem
        Problem data.
    x : array_like, optional
        State on H (x_N = 0). Default is the origin in 1-D.
    regular_only : bool, optional
        Keep only regular mixed controls.
    tol : float, optional
        Tolerance on the normal residual and on zero drifts.

    Returns
    -------
    list of InterfaceControl
        Possibly empty.
    """
    x = _on_hyperplane(problem, x)
    table = _interface_table(problem, x, regular_only, tol)
    return [_control(problem, table, k) for k in range(table.mu.size)]


def tangential_hamiltonian(
    problem: TwoDomainProblem,
    x,
    u: float,
    p_h=None,
    regular_only: bool = False,
    tol: float = 1e-12,
) -> float:
    """
    H_T (or H_T^reg) at a point of H.

    Parameters
    ----------
    problem : TwoDomainProblem
        Problem data.
    x : array_like
        State on H.
    u : float
        Value.
    p_h : array_like, optional
        Tangential gradient in R^(N-1); empty in 1-D.
    regular_only : bool, optional
        Use A_0^reg, giving H_T^reg.

    Returns
    -------
    float
        max over the interface controls of -b_H . (p_h, 0) + lambda u - l_H.
    """
    x = _on_hyperplane(problem, x)
    p_h = np.zeros(problem.dim - 1) if p_h is None else np.atleast_1d(np.asarray(p_h, dtype=float))
    if p_h.shape != (problem.dim - 1,) or not np.isfinite(u) or not np.all(np.isfinite(p_h)):
        raise ConfigError(f"Tangential gradient must be a finite vector of length {problem.dim - 1}.")
    table = _interface_table(problem, x, regular_only, tol)
    if table.mu.size == 0:
        raise EmptyControlSetError(f"A₀ empty at x={x.tolist()}")
    p = np.append(p_h, 0.0)
    return float(np.max(-table.velocity @ p + problem.lam * u - table.cost))


def interface_value(
    problem: TwoDomainProblem,
    x=0.0,
    regular_only: bool = False,
    tol: float = 1e-12,
    assume_zero_tangential_gradient: bool = False,
) -> InterfaceValue:
    """
    u_H (or u_H^reg): the cheapest mixed cost on H divided by lambda.

    In 1-D the tangential gradient is void. For N > 1 the value is only
    meaningful where a zero tangential gradient is imposed, which must be
    acknowledged with `assume_zero_tangential_gradient=True`.

    Ties in cost are broken by the smallest |alpha1| + |alpha2|, then by
    enumeration order.
    """
    if problem.dim > 1 and not assume_zero_tangential_gradient:
        raise ConfigError(
            "interface_value is defined in 1-D; for N > 1 pass assume_zero_tangential_gradient=True."
        )
    x = _on_hyperplane(problem, x)
    table = _interface_table(problem, x, regular_only, tol)
    if table.mu.size == 0:
        raise EmptyControlSetError(f"A₀ empty at x={x.tolist()}")

    effort = np.linalg.norm(problem.side1.controls[table.i1], axis=1) + np.linalg.norm(
        problem.side2.controls[table.i2], axis=1
    )
    best = table.cost.min()
    candidates = np.flatnonzero(table.cost <= best + 1e-12)
    k = int(candidates[np.argmin(effort[candidates])])
    minimizer = _control(problem, table, k)
    value = float(table.cost[k]) / problem.lam
    logger.debug(
        "Interface - %s - value %.6g at mu=%.3g", "regular" if regular_only else "all", value, minimizer.mu
    )
    return InterfaceValue(value, minimizer, regular_only)
