"""
Problem and schedule JSON readers, and the CSV / JSON writers of fields and
trajectories. Every written file carries the resolved run configuration.
"""

import json
import logging
import os

import numpy as np

from twodomain.errors import ConfigError
from twodomain.hjb_grid import ValueField
from twodomain.problem import TwoDomainProblem, builtin_problem, normalize_name, parametric_problem
from twodomain.trajectory import ControlSchedule, Segment, Trajectory

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json")

# Per-iteration traces are summarized, not written out
META_SKIP = ("trace", "history")


def _default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def to_json(obj, indent: int | None = 2) -> str:
    """json.dumps with numpy scalars and arrays."""
    return json.dumps(obj, default=_default, indent=indent, ensure_ascii=False)


def _read_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Malformed JSON in {path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    except OSError as exc:
        raise ConfigError(f"Cannot read {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a JSON object.")
    return data


def problem_from_dict(data: dict, lam: float | None = None) -> TwoDomainProblem:
    """
    Problem from its JSON form.

    Either {"builtin": name, "lambda": ...} or the parametric family
    {"dim", "lambda", "delta", "control": {min, max, resolution},
    "side1": {c0, c1, c2, c3}, "side2": {...}}. `lam` overrides "lambda".
    """
    control = data.get("control", {})
    if not isinstance(control, dict):
        raise ConfigError(f"Problem JSON 'control' must be an object, got {control!r}.")
    if "builtin" in data:
        try:
            resolution = float(control.get("resolution", 1.0))
            lam = float(lam if lam is not None else data.get("lambda", 1.0))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"Invalid builtin problem JSON: {exc}") from exc
        return builtin_problem(data["builtin"], lam, resolution)
    missing = [k for k in ("side1", "side2") if k not in data]
    if missing:
        raise ConfigError(f"Problem JSON is missing {missing}.")
    if lam is None and "lambda" not in data:
        raise ConfigError("Problem JSON needs a 'lambda' (or pass one explicitly).")
    try:
        return parametric_problem(
            dim=int(data.get("dim", 1)),
            lam=float(lam if lam is not None else data["lambda"]),
            delta=float(data.get("delta", 1.0)),
            control=dict(control),
            side1=dict(data["side1"]),
            side2=dict(data["side2"]),
            name=str(data.get("name", "custom")),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"Invalid problem JSON: {exc}") from exc


def load_problem(source: str, lam: float | None = None, resolution: float | None = None) -> TwoDomainProblem:
    """
    Builtin name (or alias) or path to a problem JSON.

    Parameters
    ----------
    source : str
        "pullpull", "sc", ... or a file path.
    lam : float, optional
        Discount rate; overrides the file. Builtins default to 1.
    resolution : float, optional
        Control grid spacing of a builtin. Default is 1.
    """
    if normalize_name(source) is not None:
        return builtin_problem(source, 1.0 if lam is None else lam, 1.0 if resolution is None else resolution)
    if not os.path.isfile(source):
        raise ConfigError(f"'{source}' is neither a builtin problem nor an existing file.")
    return problem_from_dict(_read_json(source), lam)


def _segment_from_dict(data: dict) -> Segment:
    until = data.get("until")
    if until not in (None, "hit"):
        raise ConfigError(f"Segment 'until' must be 'hit', got '{until}'.")
    if "slide" in data:
        slide = data["slide"]
        return Segment.sliding(slide["alpha1"], slide["alpha2"], until_hit=until == "hit")
    return Segment.fixed(data["alpha1"], data["alpha2"], data["mu"], until_hit=until == "hit")


def schedule_from_dict(data: dict) -> ControlSchedule:
    """
    Schedule from {"segments": [...], "breakpoints": [...]}.

    A segment is {"alpha1", "alpha2", "mu"} or {"slide": {"alpha1", "alpha2"}},
    optionally with "until": "hit". Without breakpoints the segments are
    chained through hits.
    """
    if "segments" not in data or not data["segments"]:
        raise ConfigError("Schedule JSON needs a non-empty 'segments' list.")
    try:
        segments = [_segment_from_dict(s) for s in data["segments"]]
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ConfigError(f"Invalid schedule segment: {exc}") from exc
    if "breakpoints" not in data:
        return ControlSchedule.of(*segments)
    try:
        return ControlSchedule(data["breakpoints"], segments)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"Invalid schedule breakpoints: {exc}") from exc


def load_schedule(path: str) -> ControlSchedule:
    return schedule_from_dict(_read_json(path))


def _public_meta(meta: dict) -> dict:
    return {k: v for k, v in meta.items() if k not in META_SKIP}


def field_to_dict(field: ValueField, config: dict | None = None) -> dict:
    return {
        "kind": field.kind,
        "side": field.side,
        "grid": field.grid.to_dict(),
        "meta": _public_meta(field.meta),
        "config": config,
        "x": field.x,
        "values": field.values,
    }


def write_field(field: ValueField, path: str, fmt: str = "csv", config: dict | None = None) -> str:
    """
    Write a field as CSV (commented header, then x,value) or JSON.

    Returns
    -------
    str
        The path written.
    """
    if fmt not in FORMATS:
        raise ConfigError(f"Unknown format '{fmt}'. Options are {FORMATS}.")
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        if fmt == "json":
            f.write(to_json(field_to_dict(field, config)))
            f.write("\n")
        else:
            f.write(f"# kind: {field.kind}\n")
            f.write(f"# meta: {to_json(_public_meta(field.meta), indent=None)}\n")
            f.write(f"# config: {to_json(config, indent=None)}\n")
            field.to_frame().to_csv(f, index=False, float_format="%.12g")
    logger.info("Field %s written to %s", field.kind, path)
    return path


def write_trajectory(trajectory: Trajectory, path: str, config: dict | None = None) -> str:
    """Trajectory CSV: summary and config as comment lines, then one row per step."""
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(f"# summary: {to_json(trajectory.summary(), indent=None)}\n")
        if trajectory.schedule is not None:
            f.write(f"# schedule: {to_json(trajectory.schedule.to_dict(), indent=None)}\n")
        f.write(f"# config: {to_json(config, indent=None)}\n")
        trajectory.to_frame().to_csv(f, index=False, float_format="%.12g")
    logger.info("Trajectory written to %s", path)
    return path
