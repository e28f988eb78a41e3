"""Command line front end.

Subcommands:

    quantile              failure-time quantile under the scenario model
    optimize-time         constrained c-optimal repeated-measures time plan
    optimize-destructive  product design for one measurement per unit
    efficiency            nominal-point efficiencies of the benchmark plans
    sweep                 pi* and efficiency curves over a parameter range
    check                 score a design file against the optimal plan

Reports are `key,value` lines on standard output.  File outputs are written
atomically (temp file in the target directory, then rename) with floats in
shortest round-trip form, so identical inputs give identical bytes.

Exit codes: 0 success, 2 validation failure, 3 optimization finished without
an optimality certificate (outputs are still written).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time

import numpy as np

from .criteria import avar_median, c_criterion_time, efficiency, stress_extrapolation_factor
from .destructive import (
    VarianceFunction,
    c_criterion_single_obs,
    elfving_stress_design,
    elfving_time_design,
    numeric_destructive_time_design,
    product_design,
    weighted_f2,
)
from .errors import AdtPlanError, ScenarioValidationError, ValidationError
from .failure_time import median_failure_time, quantile
from .model import ApproximateDesign, DegradationModel, eval_delta
from .scenario import Scenario, load_scenario
from .sweeps import (
    ALL_CANDIDATES,
    CANDIDATE_TAU2,
    CANDIDATE_TAU6,
    CANDIDATE_ZETA_STAR,
    SweepSpec,
    default_sweep_spec,
    sweep_efficiency,
    uniform_time_design,
)
from .timeplan import GridSpec, OptimizerConfig, kkt_check, optimize_time_plan

__all__ = ["main"]

_EXIT_OK = 0
_EXIT_VALIDATION = 2
_EXIT_NOT_CERTIFIED = 3

_IDENTIFIABILITY_NOTE = (
    "k = 1 takes a single measurement per unit; the split between measurement "
    "error and the random intercept is then not estimable and must be known"
)


def _fmt(v: object) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _emit(key: str, value: object) -> None:
    sys.stdout.write(f"{key},{_fmt(value)}\n")


def _atomic_write(path: str, text: str) -> None:
    target = os.path.abspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(target), prefix=".tmp-adtplan-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _design_csv(rows: list[tuple[float, float, float, bool]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "weight", "sensitivity", "saturated"])
    for t, weight, sens, sat in rows:
        w.writerow([repr(float(t)), repr(float(weight)), repr(float(sens)), _fmt(sat)])
    return buf.getvalue()


def _sweep_csv(header: list[str], rows: list[list[float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def _design_json(rows: list[tuple[float, float, float, bool]]) -> str:
    return json.dumps(
        [
            {"t": t, "weight": weight, "sensitivity": sens, "saturated": sat}
            for t, weight, sens, sat in rows
        ],
        indent=2,
    ) + "\n"


def _sweep_json(header: list[str], rows: list[list[float]]) -> str:
    # NaN is not valid JSON; unreachable cells become null.
    clean = [[None if math.isnan(v) else float(v) for v in row] for row in rows]
    return json.dumps({"columns": header, "rows": clean}, indent=2) + "\n"


def _model_lines(model: DegradationModel) -> None:
    d1, d2 = eval_delta(model)
    var = VarianceFunction(model)
    _emit("delta_1", float(d1))
    _emit("delta_2", float(d2))
    _emit("t_median", median_failure_time(model))
    _emit("sigma_at_0", var.sigma(0.0))
    _emit("sigma_at_1", var.sigma(1.0))
    _emit("ratio", var.ratio_end_over_start())


def _resolve_t_star(args: argparse.Namespace, model: DegradationModel) -> float:
    if getattr(args, "t_star", None) is not None:
        return args.t_star
    return median_failure_time(model)


def _read_design_csv(path: str) -> ApproximateDesign:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"t", "weight"} <= set(reader.fieldnames):
            raise ValidationError(f"{path}: design CSV needs 't' and 'weight' columns")
        rows = [(float(r["t"]), float(r["weight"])) for r in reader]
    if not rows:
        raise ValidationError(f"{path}: design CSV has no rows")
    rows.sort()
    total = math.fsum(w for _, w in rows)
    if abs(total - 1.0) > 1e-6:
        raise ValidationError(f"{path}: design weights sum to {total!r}, not 1")
    return ApproximateDesign(
        points=tuple(t for t, _ in rows),
        weights=tuple(w / total for _, w in rows),
    )


def _out_path(args: argparse.Namespace, scenario: Scenario) -> str | None:
    if getattr(args, "out", None):
        return args.out
    if scenario.output is not None:
        return scenario.output.path
    return None


def _out_format(scenario: Scenario) -> str:
    return scenario.output.format if scenario.output is not None else "csv"


def cmd_quantile(args: argparse.Namespace, scenario: Scenario) -> int:
    model = scenario.model
    res = quantile(args.alpha, model)
    _emit("command", "quantile")
    _emit("alpha", args.alpha)
    _model_lines(model)
    _emit("t_alpha", res.t_alpha)
    _emit("exists", res.exists)
    return _EXIT_OK


def cmd_optimize_time(args: argparse.Namespace, scenario: Scenario) -> int:
    model = scenario.model
    if scenario.grid is None:
        raise ValidationError("scenario has no grid section; optimize-time needs grid.J and grid.k")
    grid = scenario.grid
    t_star = _resolve_t_star(args, model)
    cfg = OptimizerConfig() if args.max_iters is None else OptimizerConfig(max_iters=args.max_iters)
    start = time.perf_counter()
    design, cert = optimize_time_plan(grid, model, t_star, cfg)
    elapsed = time.perf_counter() - start

    _emit("command", "optimize-time")
    _model_lines(model)
    _emit("t_star", t_star)
    _emit("grid_J", grid.J)
    _emit("grid_k", grid.k)
    if grid.k == 1:
        _emit("note", _IDENTIFIABILITY_NOTE)
    report = c_criterion_time(design, model, t_star)
    _emit("criterion_total", report.criterion_total)
    _emit("criterion_fixed", report.criterion_fixed)
    _emit("criterion_random", report.criterion_random)
    xi = elfving_stress_design(model)
    _emit("stress_factor", stress_extrapolation_factor(xi, model))
    _emit("avar_median", avar_median(xi, design, model))
    _emit("certified", cert.certified)
    _emit("kkt_violation", cert.max_violation)
    _emit("iterations", cert.iterations)
    _emit("support_size", len(design.points))
    _emit("elapsed_s", round(elapsed, 6))

    path = _out_path(args, scenario)
    if path is not None:
        check = kkt_check(design, grid, model, t_star)
        sens = dict(zip(grid.points().tolist(), check.sensitivity))
        cap = grid.cap
        rows = [
            (t, w, sens[t], w >= cap - 1e-9)
            for t, w in zip(design.points, design.weights)
        ]
        text = _design_json(rows) if _out_format(scenario) == "json" else _design_csv(rows)
        _atomic_write(path, text)
        _emit("out", path)
    return _EXIT_OK if cert.certified else _EXIT_NOT_CERTIFIED


def cmd_optimize_destructive(args: argparse.Namespace, scenario: Scenario) -> int:
    model = scenario.model
    t_star = _resolve_t_star(args, model)
    xi = elfving_stress_design(model)
    certified = True
    if model.time_basis.is_affine:
        tau = elfving_time_design(model, t_star)
        iterations = 0
    else:
        grid = scenario.grid if scenario.grid is not None else GridSpec(J=400, k=1)
        if grid.k != 1:
            raise ValidationError("destructive plans take one measurement per unit; use grid.k = 1")
        tau, cert = numeric_destructive_time_design(model, t_star, grid)
        certified = cert.certified
        iterations = cert.iterations

    zeta = product_design(xi, tau)
    _emit("command", "optimize-destructive")
    _model_lines(model)
    _emit("t_star", t_star)
    _emit("note", _IDENTIFIABILITY_NOTE)
    _emit("w_star", xi.weights[1] if model.x_u < 0.0 else xi.weights[0])
    _emit("pi_star", tau.weights[-1])
    for (x, t), wt in zeta.combined:
        _emit(f"zeta_{repr(float(x))}_{repr(float(t))}", wt)
    _emit("criterion_single_obs", c_criterion_single_obs(zeta, model, t_star))
    _emit("certified", certified)
    if iterations:
        _emit("iterations", iterations)

    path = _out_path(args, scenario)
    if path is not None:
        M = sum(
            w * np.outer(weighted_f2(t, model), weighted_f2(t, model))
            for t, w in zip(tau.points, tau.weights)
        )
        c = model.time_basis.evaluate(t_star)
        Minv_c = np.linalg.solve(M, c)
        denom = float(c @ Minv_c)
        rows = []
        for t, w in zip(tau.points, tau.weights):
            sens = float(weighted_f2(t, model) @ Minv_c) ** 2 / denom
            rows.append((t, w, sens, w >= 1.0 - 1e-9))
        text = _design_json(rows) if _out_format(scenario) == "json" else _design_csv(rows)
        _atomic_write(path, text)
        _emit("out", path)
    return _EXIT_OK if certified else _EXIT_NOT_CERTIFIED


def cmd_efficiency(args: argparse.Namespace, scenario: Scenario) -> int:
    model = scenario.model
    t_star = _resolve_t_star(args, model)
    xi = elfving_stress_design(model)
    local = product_design(xi, elfving_time_design(model, t_star))
    crit_local = c_criterion_single_obs(local, model, t_star)
    _emit("command", "efficiency")
    _model_lines(model)
    _emit("t_star", t_star)
    _emit("criterion_optimal", crit_local)
    for name, key in (
        (CANDIDATE_ZETA_STAR, "eff_zeta_star"),
        (CANDIDATE_TAU2, "eff_tau2"),
        (CANDIDATE_TAU6, "eff_tau6"),
    ):
        if name == CANDIDATE_ZETA_STAR:
            cand = local
        elif name == CANDIDATE_TAU2:
            cand = product_design(xi, uniform_time_design(2))
        else:
            cand = product_design(xi, uniform_time_design(6))
        _emit(key, crit_local / c_criterion_single_obs(cand, model, t_star))
    return _EXIT_OK


def cmd_sweep(args: argparse.Namespace, scenario: Scenario) -> int:
    model = scenario.model
    if scenario.sweep is not None:
        spec = scenario.sweep
    elif args.variable is not None:
        spec = default_sweep_spec(args.variable)
    else:
        raise ValidationError("scenario has no sweep section; pass --variable t_median|sigma_ratio")
    start = time.perf_counter()
    result = sweep_efficiency(spec, model)
    elapsed = time.perf_counter() - start

    _emit("command", "sweep")
    _emit("variable", spec.variable)
    _emit("n_points", spec.n_points)
    _emit("nominal_t_median", result.nominal_t_median)
    _emit("nominal_ratio", result.nominal_ratio)
    _emit("unreachable_rows", sum(1 for r in result.rows if not r.reachable))
    _emit("elapsed_s", round(elapsed, 6))

    path = _out_path(args, scenario)
    if path is not None:
        col = {name: i for i, name in enumerate(spec.candidates)}
        rows = []
        for r in result.rows:
            effs = [
                r.efficiencies[col[name]] if name in col else math.nan
                for name in ALL_CANDIDATES
            ]
            rows.append([r.abscissa, r.pi_star, *effs])
        header = ["abscissa", "pi_star", "eff_zeta_star", "eff_tau2", "eff_tau6"]
        if _out_format(scenario) == "json":
            text = _sweep_json(header, rows)
        else:
            text = _sweep_csv(header, rows)
        _atomic_write(path, text)
        _emit("out", path)
    return _EXIT_OK


def cmd_check(args: argparse.Namespace, scenario: Scenario) -> int:
    model = scenario.model
    if scenario.grid is None:
        raise ValidationError("scenario has no grid section; check needs grid.J and grid.k")
    grid = scenario.grid
    t_star = _resolve_t_star(args, model)
    design = _read_design_csv(args.design)
    cert = kkt_check(design, grid, model, t_star)
    optimal, opt_cert = optimize_time_plan(grid, model, t_star)

    _emit("command", "check")
    _model_lines(model)
    _emit("t_star", t_star)
    _emit("design", args.design)
    _emit("criterion_total", c_criterion_time(design, model, t_star).criterion_total)
    _emit("kkt_violation", cert.max_violation)
    _emit("kkt_pass", cert.certified)
    _emit("efficiency", efficiency(design, optimal, model, t_star))
    _emit("reference_certified", opt_cert.certified)
    return _EXIT_OK if opt_cert.certified else _EXIT_NOT_CERTIFIED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adtplan",
        description="Optimal measurement-time planning for accelerated degradation tests.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--scenario", required=True, help="scenario file (YAML)")
        return p

    p = add("quantile", "failure-time quantile of the scenario model")
    p.add_argument("--alpha", type=float, default=0.5, help="probability level (default 0.5)")

    p = add("optimize-time", "c-optimal repeated-measures time plan on the scenario grid")
    p.add_argument("--t-star", type=float, default=None, help="target time (default: median)")
    p.add_argument("--out", default=None, help="write the design table here")
    p.add_argument("--max-iters", type=int, default=None, help="iteration budget override")

    p = add("optimize-destructive", "product design for one measurement per unit")
    p.add_argument("--t-star", type=float, default=None, help="target time (default: median)")
    p.add_argument("--out", default=None, help="write the marginal time design here")

    p = add("efficiency", "benchmark-plan efficiencies at the nominal parameters")
    p.add_argument("--t-star", type=float, default=None, help="target time (default: median)")

    p = add("sweep", "pi* and efficiency curves over a parameter range")
    p.add_argument("--out", default=None, help="write the sweep table here")
    p.add_argument(
        "--variable",
        choices=("t_median", "sigma_ratio"),
        default=None,
        help="sweep variable when the scenario has no sweep section",
    )

    p = add("check", "score a design file against the optimal plan")
    p.add_argument("--design", required=True, help="design CSV with t,weight columns")
    p.add_argument("--t-star", type=float, default=None, help="target time (default: median)")

    return parser


_HANDLERS = {
    "quantile": cmd_quantile,
    "optimize-time": cmd_optimize_time,
    "optimize-destructive": cmd_optimize_destructive,
    "efficiency": cmd_efficiency,
    "sweep": cmd_sweep,
    "check": cmd_check,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioValidationError as e:
        for msg in e.errors:
            sys.stderr.write(f"error: {msg}\n")
        return _EXIT_VALIDATION
    except OSError as e:
        sys.stderr.write(f"error: {e}\n")
        return _EXIT_VALIDATION
    try:
        return _HANDLERS[args.subcommand](args, scenario)
    except AdtPlanError as e:
        sys.stderr.write(f"error: {e}\n")
        return _EXIT_VALIDATION
    except OSError as e:
        sys.stderr.write(f"error: {e}\n")
        return _EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
