"""
Command-line entry point: `twodomain solve | interface | simulate | approx | verify`.

Exit codes are 0 on success, 1 on numerical failure (or a failed check in
`verify`) and 2 on configuration or parse errors.
"""

import logging
import os
import sys
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field

import pandas as pd
import typer

from twodomain.errors import ConfigError, SolverError, UncataloguedError
from twodomain.files import field_to_dict, load_problem, load_schedule, to_json, write_field, write_trajectory
from twodomain.hjb_grid import (
    Grid1D,
    assemble_structure,
    solve_dirichlet_halfline,
    solve_single_domain,
    solve_state_constraint,
)
from twodomain.interface import interface_value
from twodomain.problem import normalize_name
from twodomain.schemes import SCHEMES, sweep
from twodomain.trajectory import default_horizon, integrate
from twodomain.verify import closed_form_evaluators, run_suite

logger = logging.getLogger(__name__)

app = typer.Typer(help="Two-domain discontinuous HJB solvers.", add_completion=False)

FIELDS = ("structure", "dirichlet", "state_constraint", "single_domain")


@dataclass(frozen=True)
class RunConfig:
    """Resolved parameters of a run, embedded in every output."""

    command: str
    problem: str
    lam: float | None
    grid: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    output: str | None = None
    fmt: str = "json"

    def to_dict(self) -> dict:
        return asdict(self)


def _setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="[%(levelname)s] %(message)s",
        force=True,
    )


@contextmanager
def _exit_codes():
    try:
        yield
    except (ConfigError, UncataloguedError) as exc:
        typer.echo(f"[ERROR] {exc}", err=True)
        raise typer.Exit(code=2)
    except SolverError as exc:
        typer.echo(f"[ERROR] {exc}", err=True)
        raise typer.Exit(code=1)


def _emit(payload, output: str | None) -> None:
    text = to_json(payload)
    if output is None:
        typer.echo(text)
        return
    with open(output, "w", encoding="utf-8") as f:
        f.write(text + "\n")
    logger.info("Report written to %s", output)


def _references(problem):
    if normalize_name(problem.name) is None:
        return {}
    return closed_form_evaluators(problem.name, problem.lam)


def _parse_floats(text: str, label: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{label} must be a comma-separated list of numbers, got '{text}'.")
    if not values:
        raise ConfigError(f"{label} is empty.")
    return values


@app.command()
def solve(
    problem: str = typer.Option(..., "--problem", help="Builtin name or problem JSON."),
    lam: float = typer.Option(None, "--lambda", help="Discount rate (overrides the JSON)."),
    xmax: float = typer.Option(3.0, "--xmax"),
    h: float = typer.Option(1e-3, "--h"),
    resolution: float = typer.Option(1.0, "--resolution", help="Control grid spacing of builtins."),
    far_bc: str = typer.Option("auto", "--far-bc", help="auto, closed_form or state_constraint."),
    field_kind: str = typer.Option("structure", "--field", help=f"One of {FIELDS}."),
    side: int = typer.Option(1, "--side", help="Side of a half-line or single-domain solve."),
    boundary_value: float = typer.Option(None, "--boundary-value", help="Dirichlet value at 0."),
    output: str = typer.Option(None, "--output", help="Output path; stdout JSON when omitted."),
    fmt: str = typer.Option("csv", "--format", help="csv or json."),
    verbose: bool = typer.Option(False, "--verbose"),
):
    """Assemble U- and U+, or one half-line or single-domain field."""
    _setup_logging(verbose)
    with _exit_codes():
        if field_kind not in FIELDS:
            raise ConfigError(f"Unknown field '{field_kind}'. Options are {FIELDS}.")
        if far_bc not in ("auto", "closed_form", "state_constraint"):
            raise ConfigError(f"Unknown far boundary condition '{far_bc}'.")
        spec = load_problem(problem, lam, resolution)
        grid = Grid1D(xmax, h)
        refs = _references(spec)
        bc = far_bc
        if bc == "auto":
            bc = "closed_form" if refs else "state_constraint"
        config = RunConfig(
            "solve", problem, spec.lam, grid.to_dict(),
            {"far_bc": bc, "field": field_kind, "side": side, "resolution": resolution,
             "boundary_value": boundary_value},
            output, fmt,
        )

        if field_kind == "structure":
            minus, plus = assemble_structure(spec, grid, bc, refs)
            fields = [minus, plus]
            decision = "; ".join(
                [f.meta["structure"]["summary"] for f in fields]
            )
            typer.echo(decision, err=True)
        else:
            if side not in (1, 2):
                raise ConfigError(f"--side must be 1 or 2, got {side}.")
            far_x = grid.xmax if side == 1 else -grid.xmax
            if field_kind == "dirichlet":
                if boundary_value is None:
                    raise ConfigError("--field dirichlet needs --boundary-value.")
                # The far value depends on the boundary value, so no closed form applies
                fields = [solve_dirichlet_halfline(spec, side, boundary_value, grid)]
            elif field_kind == "state_constraint":
                ref = refs.get(f"U_SC{side}") if bc == "closed_form" else None
                fields = [solve_state_constraint(
                    spec, side, grid, bc if ref else "state_constraint", float(ref(far_x)) if ref else None
                )]
            else:
                fields = [solve_single_domain(spec, side, grid)]
            decision = None

        if output is None:
            _emit(
                {"config": config.to_dict(), "decision": decision,
                 "fields": [field_to_dict(f) for f in fields]},
                None,
            )
        elif len(fields) == 1:
            write_field(fields[0], output, fmt, config.to_dict())
        else:
            root, ext = os.path.splitext(output)
            for f in fields:
                write_field(f, f"{root}_{f.kind}{ext or '.' + fmt}", fmt, config.to_dict())


@app.command()
def interface(
    problem: str = typer.Option(..., "--problem"),
    lam: float = typer.Option(None, "--lambda"),
    resolution: float = typer.Option(1.0, "--resolution"),
    output: str = typer.Option(None, "--output"),
    verbose: bool = typer.Option(False, "--verbose"),
):
    """u_H(0) and u_H^reg(0) with their minimizing mixed controls."""
    _setup_logging(verbose)
    with _exit_codes():
        spec = load_problem(problem, lam, resolution)
        mixed = interface_value(spec, regular_only=False)
        regular = interface_value(spec, regular_only=True)
        config = RunConfig("interface", problem, spec.lam, {}, {"resolution": resolution}, output)
        _emit(
            {
                "u_H": mixed.value,
                "u_H_reg": regular.value,
                "minimizer": mixed.minimizer.to_dict(),
                "minimizer_reg": regular.minimizer.to_dict(),
                "config": config.to_dict(),
            },
            output,
        )


@app.command()
def simulate(
    problem: str = typer.Option(..., "--problem"),
    lam: float = typer.Option(None, "--lambda"),
    resolution: float = typer.Option(1.0, "--resolution"),
    x0: str = typer.Option(..., "--x0", help="Initial state, comma-separated when N > 1."),
    schedule: str = typer.Option(..., "--schedule", help="Schedule JSON."),
    horizon: float = typer.Option(None, "--T", help="Final time; default from the discount."),
    dt: float = typer.Option(1e-3, "--dt"),
    output: str = typer.Option(None, "--output", help="Trajectory CSV; summary JSON to stdout when omitted."),
    verbose: bool = typer.Option(False, "--verbose"),
):
    """Integrate one controlled trajectory."""
    _setup_logging(verbose)
    with _exit_codes():
        spec = load_problem(problem, lam, resolution)
        state = _parse_floats(x0, "--x0")
        plan = load_schedule(schedule)
        plan.validate(spec)
        T = default_horizon(spec, state) if horizon is None else horizon
        traj = integrate(spec, state, plan, T, dt)
        config = RunConfig(
            "simulate", problem, spec.lam, {},
            {"x0": state, "schedule": schedule, "T": T, "dt": dt, "resolution": resolution},
            output, "csv",
        )
        if output is None:
            _emit({"config": config.to_dict(), **traj.summary()}, None)
        else:
            write_trajectory(traj, output, config.to_dict())
            typer.echo(to_json(traj.summary()), err=True)


@app.command()
def approx(
    problem: str = typer.Option(..., "--problem"),
    lam: float = typer.Option(None, "--lambda"),
    scheme: str = typer.Option("filippov", "--scheme", help=f"One of {SCHEMES}."),
    eps: str = typer.Option("0.2,0.1,0.05", "--eps", help="Comma-separated widths."),
    delta_eps: str = typer.Option("cube", "--delta-eps", help="Number, 'cube' or 'sqrt' (combined only)."),
    profile: str = typer.Option("tanh", "--profile"),
    xmax: float = typer.Option(3.0, "--xmax"),
    h: float = typer.Option(5e-3, "--h"),
    jobs: int = typer.Option(1, "--jobs"),
    output: str = typer.Option(None, "--output", help="CSV when it ends in .csv, JSON otherwise."),
    verbose: bool = typer.Option(False, "--verbose"),
):
    """eps-sweep of a regularized scheme against the closed forms."""
    _setup_logging(verbose)
    with _exit_codes():
        spec = load_problem(problem, lam)
        values = _parse_floats(eps, "--eps")
        grid = Grid1D(xmax, h)
        df = sweep(spec, scheme, values, grid, delta_eps, profile, _references(spec), jobs, verbose)
        config = RunConfig(
            "approx", problem, spec.lam, grid.to_dict(),
            {"scheme": scheme, "eps": values, "delta_eps": delta_eps, "profile": profile},
            output,
        )
        records = df.astype(object).where(pd.notna(df), None).to_dict(orient="records")
        if output is not None and output.endswith(".csv"):
            with open(output, "w", encoding="utf-8", newline="") as f:
                f.write(f"# config: {to_json(config.to_dict(), indent=None)}\n")
                df.to_csv(f, index=False, float_format="%.12g")
        else:
            _emit({"config": config.to_dict(), "sweep": records}, output)


@app.command()
def verify(
    suite: str = typer.Option("examples", "--suite", help="examples, invariants, schemes or all."),
    h: float = typer.Option(1e-3, "--h"),
    xmax: float = typer.Option(3.0, "--xmax"),
    h_schemes: float = typer.Option(
        5e-3, "--h-schemes",
        help="Grid of the eps-sweeps. Quick default; pass 1e-3 for the full-resolution run.",
    ),
    dt: float = typer.Option(
        1e-3, "--dt",
        help="Trajectory step of the strategy oracle. Quick default; pass 1e-4 for the full-resolution run.",
    ),
    jobs: int = typer.Option(1, "--jobs"),
    output: str = typer.Option(None, "--output"),
    verbose: bool = typer.Option(False, "--verbose"),
):
    """Run a verification suite; exit 1 when a check fails."""
    _setup_logging(verbose)
    with _exit_codes():
        checks = run_suite(suite, h=h, xmax=xmax, h_schemes=h_schemes, dt=dt, jobs=jobs, verbose=verbose)
        config = RunConfig(
            "verify", "builtins", None, {"xmax": xmax, "h": h},
            {"suite": suite, "h_schemes": h_schemes, "dt": dt}, output,
        )
        failed = [c.name for c in checks if not c.passed]
        _emit({"config": config.to_dict(), "passed": not failed, "checks": [c.to_dict() for c in checks]}, output)
        if failed:
            typer.echo(f"[ERROR] Failed checks: {', '.join(failed)}", err=True)
            raise typer.Exit(code=1)


def main():
    app()


if __name__ == "__main__":
    sys.exit(main())
