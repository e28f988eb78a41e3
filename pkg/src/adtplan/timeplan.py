"""Constrained c-optimal time plans on a grid.

Minimizes the fixed-effect extrapolation criterion f2(t*)' M2_0(tau)^-1 f2(t*)
over approximate designs tau on the grid {j/J} subject to the per-point
weight cap 1/k (no time point can receive more than one of the k
measurements per unit).  The random-effect part of the criterion does not
depend on the design, so the same weights minimize the total criterion, and
the optimal plan is free of the random-coefficient covariance altogether:
the optimizer reads only the time basis, the error standard deviation, the
grid, and the extrapolation time.

Algorithm: multiplicative weight updates pi_j <- pi_j (phi_j / phibar)^lambda
followed by Euclidean projection onto the capped simplex, with a certified
active-set polish that solves the few non-saturated weights exactly.  A
first-order (KKT) certificate is attached to every result: at the optimum
the sensitivity phi must be largest on saturated points, constant on
interior points, and smallest on zero-weight points.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import brentq

from .errors import InfeasibleDesignError, ValidationError
from .model import ApproximateDesign, DegradationModel

__all__ = [
    "GridSpec",
    "OptimizerConfig",
    "OptimalityCertificate",
    "project_capped_simplex",
    "optimize_capped_weights",
    "optimize_time_plan",
    "kkt_check",
    "round_to_exact",
    "two_point_extrapolation_design",
]

# Consecutive near-zero relative improvements before the loop declares a stall.
_STALL_LIMIT = 100
_STALL_REL_CHANGE = 1e-14
# Relative slack used by the monotone-descent acceptance rule.
_DESCENT_SLACK = 1e-13
# Raw iterations between cheap structure-polish attempts.
_POLISH_PERIOD = 25


@dataclass(frozen=True, slots=True)
class GridSpec:
    """Equidistant candidate grid {j/J : j = 0..J} with per-point cap 1/k.

    Feasibility requires k <= J + 1 (the grid has J + 1 points, so k of them
    must be able to carry weight 1/k each); identifiability additionally
    needs k at least the basis dimension, which is checked where the model
    is known.
    """

    J: int
    k: int

    def __post_init__(self) -> None:
        if not isinstance(self.J, int) or self.J < 1:
            raise ValidationError(f"J must be a positive integer, got {self.J!r}")
        if not isinstance(self.k, int) or self.k < 1:
            raise ValidationError(f"k must be a positive integer, got {self.k!r}")
        if self.k > self.J + 1:
            raise InfeasibleDesignError(
                f"cap 1/{self.k} over {self.J + 1} grid points cannot carry total weight 1"
            )

    def points(self) -> np.ndarray:
        # j/J element-wise keeps the pretty decimal values (0.05, 0.85, ...).
        return np.arange(self.J + 1) / self.J

    @property
    def cap(self) -> float:
        return 1.0 / self.k


@dataclass(frozen=True, slots=True)
class OptimizerConfig:
    max_iters: int = 100_000
    tol: float = 1e-7
    damping: float = 1.0

    def __post_init__(self) -> None:
        if not isinstance(self.max_iters, int) or self.max_iters < 1:
            raise ValidationError(f"max_iters must be a positive integer, got {self.max_iters!r}")
        if not (self.tol > 0.0):
            raise ValidationError(f"tol must be positive, got {self.tol}")
        if not (0.0 < self.damping <= 1.0):
            raise ValidationError(f"damping must be in (0, 1], got {self.damping}")


@dataclass(frozen=True)
class OptimalityCertificate:
    """First-order optimality evidence for a capped-grid design.

    sensitivity holds phi at every grid point; the index sets partition the
    grid by weight (at cap / zero / strictly between).  max_violation is the
    largest breach of the required ordering

        min(phi on saturated) >= phi on interior (all equal) >= max(phi on zero),

    and the certificate passes when it does not exceed tol.
    """

    max_violation: float
    saturated_set: tuple[int, ...]
    interior_set: tuple[int, ...]
    zero_set: tuple[int, ...]
    sensitivity: tuple[float, ...]
    tol: float
    iterations: int = 0

    @property
    def certified(self) -> bool:
        return self.max_violation <= self.tol


def project_capped_simplex(v: np.ndarray, cap: float) -> np.ndarray:
    """Euclidean projection onto {w : 0 <= w_j <= cap, sum w = 1}.

    Water-filling: the projection is clip(v - theta, 0, cap) for the theta
    making the total equal one; theta is found by bisection (the total is
    non-increasing in theta).
    """
    v = np.asarray(v, dtype=float)
    n = v.size
    if n * cap < 1.0 - 1e-12:
        raise InfeasibleDesignError(f"cap {cap} over {n} points cannot reach total weight 1")
    lo, hi = v.min() - cap, v.max()
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.clip(v - mid, 0.0, cap).sum() >= 1.0:
            lo = mid
        else:
            hi = mid
    w = np.clip(v - lo, 0.0, cap)
    # Spread the bisection residual over coordinates that are strictly inside,
    # so the total is exact and boundary values stay exactly 0 or cap.
    free = (w > 0.0) & (w < cap)
    resid = 1.0 - w.sum()
    if np.any(free):
        w[free] += resid / free.sum()
        np.clip(w, 0.0, cap, out=w)
    return w


class _CappedCProblem:
    """Minimize c' M(w)^-1 c, M(w) = sum_j w_j v_j v_j', over the capped simplex."""

    def __init__(self, vectors: np.ndarray, c: np.ndarray, cap: float):
        self.V = np.asarray(vectors, dtype=float)
        self.c = np.asarray(c, dtype=float)
        if self.V.ndim != 2 or self.V.shape[1] != self.c.size:
            raise ValidationError("vectors must be rows of the same dimension as c")
        self.n, self.p = self.V.shape
        self.cap = float(cap)

    def criterion_and_sensitivity(self, w: np.ndarray) -> tuple[float, np.ndarray | None]:
        """Criterion value and per-point sensitivity phi; (inf, None) if singular.

        phi_j = (c' M^-1 v_j)^2 / (c' M^-1 c), normalized so sum_j w_j phi_j = 1.
        """
        M = (self.V * w[:, None]).T @ self.V
        try:
            factor = cho_factor(0.5 * (M + M.T), lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            return math.inf, None
        Minv_c = cho_solve(factor, self.c, check_finite=False)
        crit = float(self.c @ Minv_c)
        if not (crit > 0.0) or not math.isfinite(crit):
            return math.inf, None
        b = self.V @ Minv_c
        return crit, b * b / crit

    def criterion(self, w: np.ndarray) -> float:
        return self.criterion_and_sensitivity(w)[0]


def _classify(w: np.ndarray, cap: float, weight_tol: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    saturated = w >= cap - weight_tol
    zero = (w <= weight_tol) & ~saturated
    interior = ~saturated & ~zero
    return saturated, interior, zero


def _ordering_violation(phi: np.ndarray, saturated: np.ndarray, interior: np.ndarray, zero: np.ndarray) -> float:
    v = 0.0
    if interior.any():
        phi_int = phi[interior]
        v = max(v, float(phi_int.max() - phi_int.min()))
        if zero.any():
            v = max(v, float(phi[zero].max() - phi_int.min()))
        if saturated.any():
            v = max(v, float(phi_int.max() - phi[saturated].min()))
    if saturated.any() and zero.any():
        v = max(v, float(phi[zero].max() - phi[saturated].min()))
    return max(v, 0.0)


def _certificate(
    w: np.ndarray, phi: np.ndarray, cap: float, tol: float, iterations: int
) -> OptimalityCertificate:
    saturated, interior, zero = _classify(w, cap, tol)
    return OptimalityCertificate(
        max_violation=_ordering_violation(phi, saturated, interior, zero),
        saturated_set=tuple(np.flatnonzero(saturated).tolist()),
        interior_set=tuple(np.flatnonzero(interior).tolist()),
        zero_set=tuple(np.flatnonzero(zero).tolist()),
        sensitivity=tuple(phi.tolist()),
        tol=tol,
        iterations=iterations,
    )


def _pair_transfer(problem: _CappedCProblem, w: np.ndarray, a: int, b: int) -> np.ndarray | None:
    """Optimal redistribution of the joint mass of points a and b.

    The criterion restricted to this one degree of freedom is smooth and
    convex with derivative proportional to phi_b - phi_a, so the interior
    optimum is the root of the sensitivity difference; otherwise an endpoint
    wins.  Returns the improved weight vector, or None if nothing beats w.
    """
    mass = w[a] + w[b]
    if mass <= 0.0:
        return None
    lo = max(0.0, mass - problem.cap)
    hi = min(problem.cap, mass)
    if hi - lo <= 1e-15:
        return None

    def with_split(wa: float) -> np.ndarray:
        out = w.copy()
        out[a] = wa
        out[b] = mass - wa
        return out

    def phi_gap(wa: float) -> float:
        crit, phi = problem.criterion_and_sensitivity(with_split(wa))
        if phi is None:
            # Singular along the segment; signal no usable gap.
            return math.nan
        return float(phi[a] - phi[b])

    eps = 1e-12 * max(1.0, hi - lo)
    g_lo, g_hi = phi_gap(lo + eps), phi_gap(hi - eps)
    candidates = [lo, hi]
    if math.isfinite(g_lo) and math.isfinite(g_hi) and g_lo > 0.0 > g_hi:
        # Moving weight toward a helps while phi_a > phi_b; the optimum
        # equalizes the sensitivities.
        root = brentq(phi_gap, lo + eps, hi - eps, xtol=1e-15)
        candidates.append(float(root))
    best_w, best_crit = None, problem.criterion(w)
    for wa in candidates:
        cand = with_split(wa)
        crit = problem.criterion(cand)
        if crit < best_crit * (1.0 - 1e-15):
            best_w, best_crit = cand, crit
    return best_w


def _solve_on_support(problem: _CappedCProblem, support: np.ndarray, w_start: np.ndarray) -> np.ndarray:
    """Cyclic pair-transfer descent restricted to the given support.

    Exact for the common one-free-pair structure; for larger interior sets it
    converges as coordinate descent on a smooth convex objective.
    """
    w = w_start.copy()
    idx = np.flatnonzero(support)
    for _ in range(40):
        improved = False
        for a, b in itertools.combinations(idx.tolist(), 2):
            cand = _pair_transfer(problem, w, a, b)
            if cand is not None:
                w = cand
                improved = True
        if not improved:
            break
    return w


def _polish(
    problem: _CappedCProblem,
    w: np.ndarray,
    crit: float,
    phi: np.ndarray,
    tol: float,
) -> tuple[np.ndarray, float, np.ndarray] | None:
    """Try to jump to an exactly-structured optimum near the current iterate.

    Builds candidate active sets (top-k by sensitivity and weight-threshold
    supports with KKT-driven augmentation), solves the free weights by pair
    transfers, and returns the best candidate that does not increase the
    criterion.  None if no candidate helps.
    """
    cap = problem.cap
    n = problem.n
    k_slots = int(round(1.0 / cap)) if abs(round(1.0 / cap) * cap - 1.0) < 1e-9 else None
    order = np.argsort(-phi, kind="stable")

    candidate_weights: list[np.ndarray] = []

    def saturated_start(sat_idx: Sequence[int], free_idx: Sequence[int]) -> np.ndarray:
        out = np.zeros(n)
        for j in sat_idx:
            out[j] = cap
        remaining = 1.0 - cap * len(sat_idx)
        if remaining < -1e-12 or (len(free_idx) == 0 and abs(remaining) > 1e-9):
            return out  # infeasible start; criterion will reject it
        if free_idx:
            out[list(free_idx)] = remaining / len(free_idx)
        elif sat_idx:
            # Put the rounding residual on the lowest-sensitivity saturated point.
            j_last = sat_idx[-1]
            out[j_last] += remaining
        return out

    if k_slots is not None and k_slots <= n:
        # Vertex design: the k highest-sensitivity points at cap.
        candidate_weights.append(saturated_start(order[:k_slots].tolist(), []))
        # k-1 saturated plus one free pair drawn from the next candidates.
        sat = order[: k_slots - 1].tolist()
        pool = order[k_slots - 1 : k_slots + 3].tolist()
        for a, b in itertools.combinations(pool, 2):
            start = saturated_start(sat, [a, b])
            candidate_weights.append(_solve_on_support(problem, _mask(n, sat + [a, b]), start))

    # Support detected from the iterate's weights at several thresholds,
    # refined by pair transfers; outside KKT violations pull points in.
    # Wide supports are skipped: pair descent would be slow there and the
    # optimal structure keeps at most a couple of non-saturated points.
    max_support = max(12, (k_slots or 0) + 4)
    for frac in (1e-2, 1e-4):
        support = w > cap * frac
        if support.sum() < problem.p or support.sum() * cap < 1.0 - 1e-12:
            continue
        if support.sum() > max_support:
            continue
        idx = np.flatnonzero(support)
        start = np.zeros(n)
        start[idx] = project_capped_simplex(w[idx], cap)
        refined = _solve_on_support(problem, support, start)
        for _ in range(3):
            crit_r, phi_r = problem.criterion_and_sensitivity(refined)
            if phi_r is None:
                break
            saturated, interior, zero = _classify(refined, cap, tol)
            if _ordering_violation(phi_r, saturated, interior, zero) <= tol:
                break
            outside = np.flatnonzero(zero)
            if outside.size == 0:
                break
            worst = outside[int(np.argmax(phi_r[outside]))]
            level = phi_r[interior].max() if interior.any() else phi_r[saturated].min()
            if phi_r[worst] <= level:
                break
            support = support.copy()
            support[worst] = True
            refined = _solve_on_support(problem, support, refined)
        candidate_weights.append(refined)

    best: tuple[np.ndarray, float, np.ndarray] | None = None
    best_key: tuple[int, float] | None = None
    for cand in candidate_weights:
        cand_crit, cand_phi = problem.criterion_and_sensitivity(cand)
        if cand_phi is None or cand_crit > crit * (1.0 + _DESCENT_SLACK):
            continue
        saturated, interior, zero = _classify(cand, cap, tol)
        violation = _ordering_violation(cand_phi, saturated, interior, zero)
        key = (0 if violation <= tol else 1, cand_crit)
        if best_key is None or key < best_key:
            best, best_key = (cand, cand_crit, cand_phi), key
    if best is not None and (best_key[0] == 0 or best[1] < crit * (1.0 - 1e-14)):
        return best
    return None


def _mask(n: int, idx: Sequence[int]) -> np.ndarray:
    out = np.zeros(n, dtype=bool)
    out[list(idx)] = True
    return out


def optimize_capped_weights(
    vectors: np.ndarray,
    c: np.ndarray,
    cap: float,
    cfg: OptimizerConfig = OptimizerConfig(),
    callback: Callable[[int, float, np.ndarray], None] | None = None,
) -> tuple[np.ndarray, OptimalityCertificate]:
    """Minimize c' (sum_j w_j v_j v_j')^-1 c subject to 0 <= w <= cap, sum w = 1.

    Generic engine shared by the time-plan and destructive-design fronts;
    rows of ``vectors`` are the candidate regression vectors v_j.  Returns
    the weight vector over all candidates together with its certificate.
    ``callback(iteration, criterion, weights)`` is invoked once per accepted
    iterate, which test suites use to watch feasibility and monotonicity.
    """
    problem = _CappedCProblem(vectors, c, cap)
    n = problem.n
    if n * cap < 1.0 - 1e-12:
        raise InfeasibleDesignError(f"cap {cap} over {n} candidate points cannot reach total weight 1")

    w = np.full(n, 1.0 / n)
    crit, phi = problem.criterion_and_sensitivity(w)
    if phi is None:
        raise InfeasibleDesignError(
            "the candidate set does not span the target direction; criterion is singular at the uniform start"
        )
    if callback is not None:
        callback(0, crit, w.copy())

    stall = 0
    iteration = 0
    while iteration < cfg.max_iters:
        iteration += 1

        accepted = False
        lam = cfg.damping
        for _ in range(60):
            # phibar = sum w phi = 1 by the normalization of phi.
            trial = project_capped_simplex(w * np.power(phi, lam), problem.cap)
            trial_crit, trial_phi = problem.criterion_and_sensitivity(trial)
            if trial_phi is not None and trial_crit <= crit * (1.0 + _DESCENT_SLACK):
                accepted = True
                break
            lam *= 0.5
        if accepted:
            rel_change = abs(crit - trial_crit) / max(crit, 1e-300)
            w, crit, phi = trial, trial_crit, trial_phi
            if callback is not None:
                callback(iteration, crit, w.copy())
            stall = stall + 1 if rel_change <= _STALL_REL_CHANGE else 0
        else:
            stall += 1

        saturated, interior, zero = _classify(w, problem.cap, cfg.tol)
        if _ordering_violation(phi, saturated, interior, zero) <= cfg.tol:
            break

        stopping = stall >= _STALL_LIMIT or iteration >= cfg.max_iters
        if stopping or iteration % _POLISH_PERIOD == 0:
            polished = _polish(problem, w, crit, phi, cfg.tol)
            if polished is not None:
                w, crit, phi = polished
                if callback is not None:
                    callback(iteration, crit, w.copy())
                saturated, interior, zero = _classify(w, problem.cap, cfg.tol)
                if _ordering_violation(phi, saturated, interior, zero) <= cfg.tol:
                    break
                # The polish made progress; give the loop another lease.
                stall = 0
                stopping = iteration >= cfg.max_iters
        if stopping:
            break

    return w, _certificate(w, phi, problem.cap, cfg.tol, iteration)


def _time_problem(model: DegradationModel, grid_points: np.ndarray, t_star: float) -> tuple[np.ndarray, np.ndarray]:
    # Only the time basis and the error level enter: the optimal plan is
    # free of the random-coefficient covariance.
    sigma_eps = model.sigma_eps
    vectors = model.time_basis.evaluate_many(grid_points) / sigma_eps
    c = model.time_basis.evaluate(t_star)
    return vectors, c


def optimize_time_plan(
    grid: GridSpec,
    model: DegradationModel,
    t_star: float,
    cfg: OptimizerConfig = OptimizerConfig(),
    callback: Callable[[int, float, np.ndarray], None] | None = None,
) -> tuple[ApproximateDesign, OptimalityCertificate]:
    """Constrained c-optimal time plan on the grid, with certificate.

    The returned design keeps only the points with nonzero weight; the
    certificate's index sets and sensitivity refer to the full grid.  A
    failed certificate (max_violation > tol) marks a non-converged run; the
    best iterate found is still returned.
    """
    # k = 1 is the unconstrained sentinel (cap 1, destructive-style single
    # measurements); identifiability then rests on the support found, not
    # on the per-unit measurement count.
    if grid.k != 1 and grid.k < model.p2:
        raise InfeasibleDesignError(
            f"k = {grid.k} measurements cannot identify a basis of dimension {model.p2}"
        )
    if not (t_star > 0.0):
        raise ValidationError(f"t_star must be positive, got {t_star}")
    pts = grid.points()
    vectors, c = _time_problem(model, pts, t_star)
    w, cert = optimize_capped_weights(vectors, c, grid.cap, cfg, callback)
    keep = w > 0.0
    design = ApproximateDesign(points=tuple(pts[keep]), weights=tuple(w[keep]))
    return design, cert


def _design_on_grid(design: ApproximateDesign, grid_points: np.ndarray) -> np.ndarray:
    w = np.zeros(grid_points.size)
    for t, wt in zip(design.points, design.weights):
        hits = np.flatnonzero(np.abs(grid_points - t) <= 1e-9)
        if hits.size != 1:
            raise ValidationError(f"design point {t} is not a grid point")
        w[hits[0]] = wt
    return w


def kkt_check(
    design: ApproximateDesign,
    grid: GridSpec,
    model: DegradationModel,
    t_star: float,
    tol: float = 1e-7,
) -> OptimalityCertificate:
    """First-order optimality certificate of a grid-supported design.

    Violations are reported in the certificate, never raised: a failed check
    is a legitimate answer about a suboptimal design.
    """
    pts = grid.points()
    vectors, c = _time_problem(model, pts, t_star)
    problem = _CappedCProblem(vectors, c, grid.cap)
    w = _design_on_grid(design, pts)
    crit, phi = problem.criterion_and_sensitivity(w)
    if phi is None:
        raise InfeasibleDesignError("design information is singular for the target direction")
    return _certificate(w, phi, grid.cap, tol, iterations=0)


def round_to_exact(
    design: ApproximateDesign,
    k: int,
    model: DegradationModel,
    t_star: float,
) -> ApproximateDesign:
    """Exact k-point plan (weights 1/k) from a capped approximate plan.

    Keeps every saturated point and fills the remaining slots from the
    partial-weight points: all assignments are enumerated when at most two
    points are partial, otherwise slots are filled greedily by sensitivity.
    Ties prefer the smallest support change, then lexicographic order.
    """
    if k < 1:
        raise ValidationError(f"k must be a positive count, got {k}")
    if k < model.time_basis.dim:
        raise ValidationError(
            f"an exact plan with k={k} distinct times cannot identify a "
            f"{model.time_basis.dim}-dimensional time effect"
        )
    cap = 1.0 / k
    ts, ws = design.as_arrays()
    if np.any(ws > cap + 1e-12):
        raise InfeasibleDesignError(f"design weight exceeds the cap 1/{k}")

    sat_tol = 1e-9
    saturated = ws >= cap - sat_tol
    partial = (ws > sat_tol) & ~saturated
    n_slots = k - int(saturated.sum())
    if n_slots < 0:
        raise InfeasibleDesignError(f"more than {k} points already saturated at 1/{k}")
    candidates = np.flatnonzero(partial)
    if candidates.size < n_slots:
        raise InfeasibleDesignError(
            f"only {int(saturated.sum()) + candidates.size} candidate points for {k} slots"
        )

    def exact_design(chosen: Sequence[int]) -> ApproximateDesign:
        idx = sorted(np.flatnonzero(saturated).tolist() + list(chosen))
        pts = tuple(float(ts[i]) for i in idx)
        wts = [cap] * len(idx)
        wts[-1] = 1.0 - cap * (len(idx) - 1)  # absorb float residual
        return ApproximateDesign(points=pts, weights=tuple(wts))

    if n_slots == 0:
        if partial.any():
            # All slots saturated; drop stray partial mass (infeasible input
            # shapes were rejected above, so this only trims roundoff).
            return exact_design([])
        return design

    if candidates.size <= 2:
        choices = list(itertools.combinations(candidates.tolist(), n_slots))
    else:
        # Greedy by sensitivity at the input design.
        vectors, c = _time_problem(model, ts, t_star)
        problem = _CappedCProblem(vectors, c, cap)
        _, phi = problem.criterion_and_sensitivity(ws)
        if phi is None:
            raise InfeasibleDesignError("design information is singular for the target direction")
        ranked = sorted(candidates.tolist(), key=lambda i: (-phi[i], ts[i]))
        choices = [tuple(sorted(ranked[:n_slots]))]

    from .criteria import c_criterion_time  # local import to avoid a cycle

    def score(choice: tuple[int, ...]) -> tuple[float, int, tuple[float, ...]]:
        cand = exact_design(choice)
        crit = c_criterion_time(cand, model, t_star).criterion_total
        input_support = {float(t) for t, w in zip(ts, ws) if w > sat_tol}
        sym_diff = len(input_support.symmetric_difference(cand.points))
        return (crit, sym_diff, cand.points)

    best_choice = min(choices, key=score)
    return exact_design(best_choice)


def two_point_extrapolation_design(model: DegradationModel, t_star: float) -> ApproximateDesign:
    """Unconstrained c-optimal plan for affine paths: endpoints {0, 1} only.

    pi(1) = t*/(2 t* - 1), pi(0) = (t* - 1)/(2 t* - 1); requires t* >= 1
    (extrapolation beyond the horizon).  Decays to one point at t* = 1 and
    approaches the balanced design as t* grows.
    """
    if not model.time_basis.is_affine:
        raise ValidationError("closed-form two-point plan requires the affine time basis")
    if not model.error_spec.is_homoscedastic:
        raise ValidationError("closed-form two-point plan requires homoscedastic errors")
    if t_star < 1.0:
        raise ValidationError(
            f"t_star = {t_star} < 1 is interpolation; use the grid optimizer instead"
        )
    pi1 = t_star / (2.0 * t_star - 1.0)
    return ApproximateDesign(points=(0.0, 1.0), weights=(1.0 - pi1, pi1))
