"""Scenario files: one YAML document describing a model, a grid, and a sweep.

Schema (dotted paths as reported in validation errors):

    model:
      stress_basis: affine | {degree: n}
      time_basis:   affine | {degree: n}
      beta:         [b_00, b_01, ..., b_10, ...]   stress-major coefficient order
      sigma1:       random-intercept standard deviation
      sigma2:       random-slope standard deviation
      rho:          intercept/slope correlation
      sigma_eps:    measurement error standard deviation
      x_u:          standardized use stress
      y0:           degradation threshold
    grid:   {J: subdivisions, k: measurements per unit}     (optional)
    sweep:  {variable, lo, hi, n, candidates[]}             (optional)
    output: {format: csv | json, path}                      (optional)

Parsing is not fail-fast: every detectable problem is collected and raised
in one ScenarioValidationError, each message prefixed with the field path.
"""

from __future__ import annotations

from dataclasses import dataclass

import yaml

from .errors import ScenarioValidationError, ValidationError
from .model import DegradationModel, ErrorSpec, PowerBasis, sigma_gamma_from_sd_corr
from .sweeps import ALL_CANDIDATES, SweepSpec
from .timeplan import GridSpec

__all__ = ["OutputSpec", "Scenario", "parse_scenario", "serialize_scenario", "load_scenario"]

_MODEL_KEYS = (
    "stress_basis",
    "time_basis",
    "beta",
    "sigma1",
    "sigma2",
    "rho",
    "sigma_eps",
    "x_u",
    "y0",
)
_SCALAR_MODEL_KEYS = ("sigma1", "sigma2", "rho", "sigma_eps", "x_u", "y0")


@dataclass(frozen=True)
class OutputSpec:
    format: str = "csv"
    path: str | None = None

    def __post_init__(self) -> None:
        if self.format not in ("csv", "json"):
            raise ValidationError(f"output format must be csv or json, got {self.format!r}")


@dataclass(frozen=True)
class Scenario:
    model: DegradationModel
    grid: GridSpec | None = None
    sweep: SweepSpec | None = None
    output: OutputSpec | None = None


def _is_number(v: object) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _number(section: dict, key: str, path: str, errors: list[str]) -> float | None:
    if key not in section:
        errors.append(f"{path}.{key}: required field is missing")
        return None
    v = section[key]
    if not _is_number(v):
        errors.append(f"{path}.{key}: expected a number, got {v!r}")
        return None
    return float(v)


def _basis(section: dict, key: str, errors: list[str]) -> PowerBasis | None:
    if key not in section:
        errors.append(f"model.{key}: required field is missing")
        return None
    v = section[key]
    if v == "affine":
        return PowerBasis(1)
    if isinstance(v, dict) and set(v) == {"degree"}:
        d = v["degree"]
        if isinstance(d, int) and not isinstance(d, bool) and d >= 1:
            return PowerBasis(d)
        errors.append(f"model.{key}.degree: expected a positive integer, got {d!r}")
        return None
    errors.append(f"model.{key}: expected 'affine' or {{degree: n}}, got {v!r}")
    return None


def _parse_model(doc: dict, errors: list[str]) -> DegradationModel | None:
    raw = doc.get("model")
    if raw is None:
        errors.append("model: required section is missing")
        return None
    if not isinstance(raw, dict):
        errors.append(f"model: expected a mapping, got {type(raw).__name__}")
        return None
    for key in raw:
        if key not in _MODEL_KEYS:
            errors.append(f"model.{key}: unknown field")

    stress = _basis(raw, "stress_basis", errors)
    time = _basis(raw, "time_basis", errors)
    scalars = {k: _number(raw, k, "model", errors) for k in _SCALAR_MODEL_KEYS}

    beta = raw.get("beta")
    if beta is None:
        errors.append("model.beta: required field is missing")
    elif not (isinstance(beta, list) and beta and all(_is_number(b) for b in beta)):
        errors.append(f"model.beta: expected a non-empty list of numbers, got {beta!r}")
        beta = None

    bad_range = False
    rho = scalars["rho"]
    if rho is not None and not (-1.0 <= rho <= 1.0):
        errors.append(f"model.rho: sigma_gamma.rho out of [-1,1], got {rho}")
        bad_range = True
    for k in ("sigma1", "sigma2", "sigma_eps"):
        v = scalars[k]
        if v is not None and v < 0.0:
            errors.append(f"model.{k}: standard deviation must be nonnegative, got {v}")
            bad_range = True

    if stress is not None and time is not None and beta is not None:
        if len(beta) != stress.dim * time.dim:
            errors.append(
                f"model.beta: expected {stress.dim * time.dim} coefficients for the "
                f"given bases, got {len(beta)}"
            )
            beta = None

    if (
        bad_range
        or stress is None
        or time is None
        or beta is None
        or any(v is None for v in scalars.values())
    ):
        return None
    try:
        return DegradationModel(
            stress_basis=stress,
            time_basis=time,
            beta=tuple(float(b) for b in beta),
            sigma_gamma=sigma_gamma_from_sd_corr(scalars["sigma1"], scalars["sigma2"], rho),
            error_spec=ErrorSpec(sigma_eps=scalars["sigma_eps"]),
            x_u=scalars["x_u"],
            y0=scalars["y0"],
        )
    except ValidationError as e:
        errors.append(f"model: {e}")
        return None


def _parse_grid(doc: dict, errors: list[str]) -> GridSpec | None:
    raw = doc.get("grid")
    if raw is None:
        return None
    if not isinstance(raw, dict):
        errors.append(f"grid: expected a mapping, got {type(raw).__name__}")
        return None
    for key in raw:
        if key not in ("J", "k"):
            errors.append(f"grid.{key}: unknown field")
    ok = True
    for key in ("J", "k"):
        if key not in raw:
            errors.append(f"grid.{key}: required field is missing")
            ok = False
        elif not isinstance(raw[key], int) or isinstance(raw[key], bool):
            errors.append(f"grid.{key}: expected an integer, got {raw[key]!r}")
            ok = False
    if not ok:
        return None
    try:
        return GridSpec(J=raw["J"], k=raw["k"])
    except ValidationError as e:
        errors.append(f"grid: {e}")
        return None


def _parse_sweep(doc: dict, errors: list[str]) -> SweepSpec | None:
    raw = doc.get("sweep")
    if raw is None:
        return None
    if not isinstance(raw, dict):
        errors.append(f"sweep: expected a mapping, got {type(raw).__name__}")
        return None
    for key in raw:
        if key not in ("variable", "lo", "hi", "n", "candidates"):
            errors.append(f"sweep.{key}: unknown field")
    variable = raw.get("variable")
    if variable is None:
        errors.append("sweep.variable: required field is missing")
    lo = _number(raw, "lo", "sweep", errors)
    hi = _number(raw, "hi", "sweep", errors)
    n = raw.get("n", 200)
    if not isinstance(n, int) or isinstance(n, bool):
        errors.append(f"sweep.n: expected an integer, got {n!r}")
        n = None
    candidates = raw.get("candidates", list(ALL_CANDIDATES))
    if not (isinstance(candidates, list) and all(isinstance(c, str) for c in candidates)):
        errors.append(f"sweep.candidates: expected a list of names, got {candidates!r}")
        candidates = None
    if variable is None or lo is None or hi is None or n is None or candidates is None:
        return None
    try:
        return SweepSpec(variable=variable, lo=lo, hi=hi, n_points=n, candidates=tuple(candidates))
    except ValidationError as e:
        errors.append(f"sweep: {e}")
        return None


def _parse_output(doc: dict, errors: list[str]) -> OutputSpec | None:
    raw = doc.get("output")
    if raw is None:
        return None
    if not isinstance(raw, dict):
        errors.append(f"output: expected a mapping, got {type(raw).__name__}")
        return None
    for key in raw:
        if key not in ("format", "path"):
            errors.append(f"output.{key}: unknown field")
    fmt = raw.get("format", "csv")
    path = raw.get("path")
    if path is not None and not isinstance(path, str):
        errors.append(f"output.path: expected a string, got {path!r}")
        return None
    try:
        return OutputSpec(format=fmt, path=path)
    except ValidationError as e:
        errors.append(f"output: {e}")
        return None


def parse_scenario(text: str) -> Scenario:
    """Parse and fully validate a scenario document.

    All problems are accumulated; the raised ScenarioValidationError lists
    every one with its field path.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ScenarioValidationError([f"syntax error{where}: {getattr(e, 'problem', e)}"]) from None
    if not isinstance(doc, dict):
        raise ScenarioValidationError([f"scenario: expected a mapping, got {type(doc).__name__}"])

    errors: list[str] = []
    for key in doc:
        if key not in ("model", "grid", "sweep", "output"):
            errors.append(f"{key}: unknown section")
    model = _parse_model(doc, errors)
    grid = _parse_grid(doc, errors)
    sweep = _parse_sweep(doc, errors)
    output = _parse_output(doc, errors)
    if errors or model is None:
        if not errors:
            errors.append("model: could not be constructed")
        raise ScenarioValidationError(errors)
    return Scenario(model=model, grid=grid, sweep=sweep, output=output)


def _basis_doc(basis: PowerBasis) -> object:
    return "affine" if basis.degree == 1 else {"degree": basis.degree}


def serialize_scenario(scenario: Scenario) -> str:
    """Inverse of parse_scenario up to semantic equality of the round trip."""
    m = scenario.model
    sg = m.sigma_gamma_matrix()
    s1 = float(sg[0, 0]) ** 0.5
    s2 = float(sg[1, 1]) ** 0.5
    rho = float(sg[0, 1]) / (s1 * s2) if s1 > 0.0 and s2 > 0.0 else 0.0
    doc: dict = {
        "model": {
            "stress_basis": _basis_doc(m.stress_basis),
            "time_basis": _basis_doc(m.time_basis),
            "beta": [float(b) for b in m.beta],
            "sigma1": s1,
            "sigma2": s2,
            "rho": rho,
            "sigma_eps": m.sigma_eps,
            "x_u": m.x_u,
            "y0": m.y0,
        }
    }
    if scenario.grid is not None:
        doc["grid"] = {"J": scenario.grid.J, "k": scenario.grid.k}
    if scenario.sweep is not None:
        sw = scenario.sweep
        doc["sweep"] = {
            "variable": sw.variable,
            "lo": sw.lo,
            "hi": sw.hi,
            "n": sw.n_points,
            "candidates": list(sw.candidates),
        }
    if scenario.output is not None:
        out: dict = {"format": scenario.output.format}
        if scenario.output.path is not None:
            out["path"] = scenario.output.path
        doc["output"] = out
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=False)


def load_scenario(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read())
