"""c-optimal designs for destructive testing: one measurement per unit.

With a single observation per unit the random coefficients cannot be
separated from the measurement error, and each observation at (x, t) has
variance sigma^2(t) = f2(t)' Sigma_gamma f2(t) + sigma_eps^2.  Rescaling by
sigma(t) turns the problem into a standard c-optimal one for the weighted
regression function f2_tilde(t) = f2(t)/sigma(t); for affine bases Elfving's
theorem gives closed-form two-point marginal designs in time and in stress,
and their product is optimal for estimating the median failure time in the
combined model.

Note on identifiability: planning with k = 1 presumes the variance split
between sigma_eps and the random intercept is known from elsewhere; a
single measurement per unit cannot estimate both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import (
    DegenerateVarianceError,
    OutOfRegimeError,
    SingularDesignError,
    ValidationError,
)
from .failure_time import sigma_u2
from .model import ApproximateDesign, DegradationModel, kron_vec
from .timeplan import GridSpec, OptimalityCertificate, OptimizerConfig, optimize_capped_weights

__all__ = [
    "VarianceFunction",
    "ProductDesign",
    "weighted_f2",
    "pi_star_from_ratio",
    "elfving_time_design",
    "elfving_stress_design",
    "product_design",
    "info_single_obs",
    "c_criterion_single_obs",
    "elfving_brute_force_oracle",
    "numeric_destructive_time_design",
]


@dataclass(frozen=True)
class VarianceFunction:
    """Single-observation variance sigma^2(t) = f2(t)' Sigma_gamma f2(t) + sigma_eps^2.

    Positivity on [0, 1] is checked at construction; for the affine basis the
    quadratic is minimized in closed form, otherwise on a fine grid.
    """

    model: DegradationModel

    def __post_init__(self) -> None:
        m = self.model
        _ = m.sigma_eps  # destructive planning needs a scalar error level
        if m.time_basis.is_affine:
            sg = m.sigma_gamma_matrix()
            ts = [0.0, 1.0]
            if sg[1, 1] > 0.0:
                t_min = -sg[0, 1] / sg[1, 1]
                if 0.0 < t_min < 1.0:
                    ts.append(t_min)
        else:
            ts = np.linspace(0.0, 1.0, 513).tolist()
        if min(self.sigma2(t) for t in ts) <= 0.0:
            raise DegenerateVarianceError("variance function is not positive on [0,1]")

    def sigma2(self, t: float) -> float:
        return sigma_u2(t, self.model) + self.model.sigma_eps**2

    def sigma(self, t: float) -> float:
        return math.sqrt(self.sigma2(t))

    def ratio_end_over_start(self) -> float:
        """sigma(1)/sigma(0), the heteroscedasticity ratio of the horizon."""
        return self.sigma(1.0) / self.sigma(0.0)


@dataclass(frozen=True)
class ProductDesign:
    """Cross-product of a stress design and a time design.

    combined lists ((x, t), weight) pairs in lexicographic (x, t) order with
    weight equal to the product of the marginal weights.
    """

    stress_design: ApproximateDesign
    time_design: ApproximateDesign
    combined: tuple[tuple[tuple[float, float], float], ...]

    def __post_init__(self) -> None:
        total = math.fsum(w for _, w in self.combined)
        if abs(total - 1.0) > 1e-12:
            raise ValidationError(f"combined weights must sum to 1, got {total!r}")
        for (x, t), w in self.combined:
            expected = self.stress_design.weight_of(x) * self.time_design.weight_of(t)
            if abs(w - expected) > 1e-12:
                raise ValidationError(
                    f"combined weight at ({x}, {t}) is {w}, not the product of marginals {expected}"
                )


def weighted_f2(t: float, model: DegradationModel) -> np.ndarray:
    """Weighted marginal regression function f2(t)/sigma(t)."""
    s2 = sigma_u2(t, model) + model.sigma_eps**2
    if s2 <= 0.0:
        raise DegenerateVarianceError(f"sigma({t}) = 0; weighted basis undefined")
    return model.time_basis.evaluate(t) / math.sqrt(s2)


def pi_star_from_ratio(t_star: float, ratio: float) -> float:
    """Optimal endpoint weight pi* as a function of the ratio sigma(1)/sigma(0).

    pi* = t* r / (t* r + t* - 1); the two-point Elfving design depends on the
    variance function only through this ratio.  Strictly increasing in r and
    strictly decreasing in t*, with limit r/(1 + r) as t* grows.
    """
    if not (t_star > 1.0):
        raise OutOfRegimeError(f"two-point extrapolation needs t_star > 1, got {t_star}")
    if not (ratio > 0.0):
        raise ValidationError(f"variance ratio must be positive, got {ratio}")
    return t_star * ratio / (t_star * ratio + t_star - 1.0)


def elfving_time_design(model: DegradationModel, t_star: float) -> ApproximateDesign:
    """c-optimal destructive time design for affine paths: endpoints {0, 1}.

    pi* = t* sigma(1) / (t* sigma(1) + (t* - 1) sigma(0)) at t = 1.  Requires
    t* > 1; for t* inside the horizon the Elfving ray leaves through a vertex
    and the grid optimizer should be used instead.
    """
    if not model.time_basis.is_affine:
        raise ValidationError("Elfving time design requires the affine time basis")
    if not (t_star > 1.0):
        raise OutOfRegimeError(
            f"t_star = {t_star} <= 1 is out of the extrapolation regime; "
            "use numeric_destructive_time_design"
        )
    var = VarianceFunction(model)
    pi1 = pi_star_from_ratio(t_star, var.ratio_end_over_start())
    return ApproximateDesign(points=(0.0, 1.0), weights=(1.0 - pi1, pi1))


def elfving_stress_design(model: DegradationModel) -> ApproximateDesign:
    """c-optimal marginal stress design on {0, 1} for extrapolation to x_u.

    Weight |x_u|/(|x_u| + |1 - x_u|) at x = 1 for x_u < 0, mirrored for
    x_u > 1.  A use condition inside [0, 1] is not extrapolation and is
    rejected.
    """
    if not model.stress_basis.is_affine:
        raise ValidationError("Elfving stress design requires the affine stress basis")
    x_u = model.x_u
    if 0.0 <= x_u <= 1.0:
        raise OutOfRegimeError(
            f"x_u = {x_u} lies inside the standardized stress region; no extrapolation design"
        )
    if x_u < 0.0:
        w1 = abs(x_u) / (abs(x_u) + abs(1.0 - x_u))
        return ApproximateDesign(points=(0.0, 1.0), weights=(1.0 - w1, w1))
    w0 = (x_u - 1.0) / ((x_u - 1.0) + x_u)
    return ApproximateDesign(points=(0.0, 1.0), weights=(w0, 1.0 - w0))


def product_design(xi: ApproximateDesign, tau: ApproximateDesign) -> ProductDesign:
    """Cross-product design with multiplied weights, (x, t) lexicographic."""
    combined = tuple(
        ((x, t), wx * wt)
        for x, wx in zip(xi.points, xi.weights)
        for t, wt in zip(tau.points, tau.weights)
    )
    return ProductDesign(stress_design=xi, time_design=tau, combined=combined)


def info_single_obs(design: ProductDesign, model: DegradationModel) -> np.ndarray:
    """Normalized single-observation information of a destructive design.

    M(zeta) = sum_i eta_i f1(x_i) f1(x_i)' kron f2~(t_i) f2~(t_i)'.
    """
    p = model.p1 * model.p2
    M = np.zeros((p, p))
    for (x, t), w in design.combined:
        if w == 0.0:
            continue
        v = kron_vec(model.stress_basis.evaluate(x), weighted_f2(t, model))
        M += w * np.outer(v, v)
    return 0.5 * (M + M.T)


def c_criterion_single_obs(design: ProductDesign, model: DegradationModel, t_star: float) -> float:
    """c' M(zeta)^-1 c for c = f1(x_u) kron f2(t*), the destructive criterion."""
    M = info_single_obs(design, model)
    c = kron_vec(model.stress_basis.evaluate(model.x_u), model.time_basis.evaluate(t_star))
    try:
        factor = cho_factor(M, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        raise SingularDesignError(
            "single-observation information is singular; design does not identify all coefficients"
        ) from None
    return float(c @ cho_solve(factor, c, check_finite=False))


def elfving_brute_force_oracle(model: DegradationModel, t_star: float, grid_n: int) -> ApproximateDesign:
    """Best two-point weighted time design by exhaustive support search.

    For every support pair (a, b) on a grid_n-point grid the target vector is
    expanded as c = alpha v_a + beta v_b in the weighted basis; the c-optimal
    weights are then |alpha| : |beta| with criterion value (|alpha| + |beta|)^2.
    Validation oracle for the closed-form Elfving constructions; quadratic in
    grid_n, so test-sized grids only.
    """
    if grid_n < 2:
        raise ValidationError(f"grid_n must be at least 2, got {grid_n}")
    if model.time_basis.dim != 2:
        raise ValidationError("two-point oracle applies to two-parameter time bases")
    ts = np.arange(grid_n) / (grid_n - 1)
    vs = np.array([weighted_f2(t, model) for t in ts])
    c = model.time_basis.evaluate(t_star)
    best: tuple[float, int, int, float] | None = None
    for i in range(grid_n):
        for j in range(i + 1, grid_n):
            A = np.column_stack([vs[i], vs[j]])
            det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
            if abs(det) < 1e-14:
                continue
            alpha = (c[0] * A[1, 1] - c[1] * A[0, 1]) / det
            beta = (A[0, 0] * c[1] - A[1, 0] * c[0]) / det
            value = (abs(alpha) + abs(beta)) ** 2
            if best is None or value < best[0] * (1.0 - 1e-15):
                w_i = abs(alpha) / (abs(alpha) + abs(beta))
                best = (value, i, j, w_i)
    if best is None:
        raise SingularDesignError("no support pair spans the target direction")
    _, i, j, w_i = best
    return ApproximateDesign(points=(float(ts[i]), float(ts[j])), weights=(w_i, 1.0 - w_i))


def numeric_destructive_time_design(
    model: DegradationModel,
    t_star: float,
    grid: GridSpec | None = None,
    cfg: OptimizerConfig = OptimizerConfig(),
) -> tuple[ApproximateDesign, OptimalityCertificate]:
    """Destructive time design by grid optimization on the weighted basis.

    General path for bases without an Elfving closed form: the capped-grid
    engine runs with cap 1 (no repeated-measures constraint) on f2~(t).  On
    affine models this reproduces elfving_time_design up to grid resolution.
    """
    if grid is None:
        grid = GridSpec(J=400, k=1)
    if grid.k != 1:
        raise ValidationError(
            f"destructive designs are uncapped; grid must have k=1, got k={grid.k}"
        )
    pts = grid.points()
    vectors = np.array([weighted_f2(t, model) for t in pts])
    c = model.time_basis.evaluate(t_star)
    w, cert = optimize_capped_weights(vectors, c, 1.0, cfg)
    keep = w > 0.0
    return ApproximateDesign(points=tuple(pts[keep]), weights=tuple(w[keep])), cert
