"""Information matrices and the c-optimality criterion for the median.

For product-type designs zeta = xi kron tau the asymptotic variance of the
estimated median failure time factorizes,

    aVar(t_hat) ~ f1(x_u)' M1(xi)^-1 f1(x_u) * f2(t*)' M2(tau)^-1 f2(t*),

so only the marginal time criterion has to be minimized.  The mixed-model
inverse information obeys the decomposition

    M2(tau)^-1 = M2_0(tau)^-1 + Sigma_gamma,

with M2_0 the fixed-effect information, which is what makes the optimal
time plan independent of the random-effect covariance.

Normalization convention: approximate-design information is reported per
observation, M2_0(tau) = sigma_eps^-2 sum_j pi_j f2(t_j) f2(t_j)'.  The
k-scaled total-information variant for exact k-point plans is available as
a separate accessor.  Criterion values are reported up to the positive
constant c0^2 that multiplies the whole variance; it cancels in every
efficiency and argmin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import SingularDesignError, ValidationError
from .failure_time import median_failure_time, sigma_u2
from .model import ApproximateDesign, DegradationModel

__all__ = [
    "TimeInfoMatrices",
    "CriterionReport",
    "info_time_fixed",
    "info_time_fixed_total",
    "inv_info_time_mixed",
    "time_info_matrices",
    "c_criterion_time",
    "info_stress",
    "stress_extrapolation_factor",
    "avar_median",
    "efficiency",
    "extrapolation_time",
]


@dataclass(frozen=True)
class TimeInfoMatrices:
    """Marginal time-design information, fixed-effect and mixed, plus the criterion split."""

    M2: np.ndarray
    M2_0: np.ndarray
    criterion_fixed: float
    criterion_random: float

    @property
    def criterion_total(self) -> float:
        return self.criterion_fixed + self.criterion_random


@dataclass(frozen=True)
class CriterionReport:
    """Criterion value at the extrapolation time t_star, split into parts.

    criterion_total = criterion_fixed + criterion_random, where the random
    part f2(t*)' Sigma_gamma f2(t*) does not depend on the design.
    stress_factor is filled only by avar_median.
    """

    criterion_total: float
    criterion_fixed: float
    criterion_random: float
    t_star: float
    stress_factor: float | None = None


def _deficient_direction(mat: np.ndarray, names: list[str]) -> str:
    """Human-readable description of the near-null direction of a singular matrix."""
    eigvals, eigvecs = np.linalg.eigh(0.5 * (mat + mat.T))
    v = eigvecs[:, int(np.argmin(eigvals))]
    # Flip sign so the leading nonzero coefficient is positive.
    lead = next((c for c in v if abs(c) > 1e-12), 1.0)
    if lead < 0:
        v = -v
    terms = [f"{c:+.3g}*{n}" for c, n in zip(v, names) if abs(c) > 1e-9]
    return " ".join(terms) if terms else "(numerically zero matrix)"


def _basis_names(dim: int, var: str) -> list[str]:
    return ["1"] + [var if j == 1 else f"{var}^{j}" for j in range(1, dim)]


def _spd_solve(mat: np.ndarray, rhs: np.ndarray, var: str) -> np.ndarray:
    """Solve mat @ x = rhs for symmetric positive definite mat.

    No pseudo-inverse fallback: a singular design is a modeling error and is
    reported as such, naming the deficient basis direction.  A rank-deficient
    moment matrix can slip past Cholesky on rounding noise, so conditioning is
    checked explicitly; 1e-10 relative sits orders of magnitude above rounding
    and below any design that genuinely spans the basis.
    """
    eigvals = np.linalg.eigvalsh(0.5 * (mat + mat.T))
    if eigvals[0] <= 1e-10 * max(eigvals[-1], 0.0):
        names = _basis_names(mat.shape[0], var)
        raise SingularDesignError(
            "information matrix is singular; design does not identify the "
            f"direction {_deficient_direction(mat, names)}"
        )
    factor = cho_factor(0.5 * (mat + mat.T), lower=True, check_finite=False)
    return cho_solve(factor, rhs, check_finite=False)


def info_time_fixed(design: ApproximateDesign, model: DegradationModel) -> np.ndarray:
    """Per-observation fixed-effect information of a time plan.

    M2_0(tau) = sigma_eps^-2 sum_j pi_j f2(t_j) f2(t_j)'.  With a full error
    covariance only exact equal-weight plans are meaningful, and the result
    is F2' Sigma_eps^-1 F2 / k.
    """
    ts, ws = design.as_arrays()
    F2 = model.time_basis.evaluate_many(ts)
    if model.error_spec.is_homoscedastic:
        M = (F2 * ws[:, None]).T @ F2 / model.sigma_eps**2
    else:
        k = ts.size
        if not np.allclose(ws, 1.0 / k, atol=1e-12):
            raise ValidationError(
                "a full error covariance requires an exact design with equal weights 1/k"
            )
        Sigma_eps = model.error_spec.matrix(k)
        M = F2.T @ np.linalg.solve(Sigma_eps, F2) / k
    return 0.5 * (M + M.T)


def info_time_fixed_total(design: ApproximateDesign, model: DegradationModel, k: int) -> np.ndarray:
    """Total fixed-effect information of an exact k-point plan (k-scaled variant)."""
    if k < 1:
        raise ValidationError(f"k must be a positive count, got {k}")
    return k * info_time_fixed(design, model)


def inv_info_time_mixed(design: ApproximateDesign, model: DegradationModel) -> np.ndarray:
    """Inverse mixed-model information M2^-1 = M2_0^-1 + Sigma_gamma."""
    M2_0 = info_time_fixed(design, model)
    inv_fixed = _spd_solve(M2_0, np.eye(model.p2), "t")
    out = inv_fixed + model.sigma_gamma_matrix()
    return 0.5 * (out + out.T)


def time_info_matrices(design: ApproximateDesign, model: DegradationModel, t_star: float) -> TimeInfoMatrices:
    """Bundle of both marginal information matrices and the criterion split at t_star."""
    M2_0 = info_time_fixed(design, model)
    f2 = model.time_basis.evaluate(t_star)
    inv_fixed = _spd_solve(M2_0, np.eye(model.p2), "t")
    M2_inv = inv_fixed + model.sigma_gamma_matrix()
    return TimeInfoMatrices(
        M2=np.linalg.inv(M2_inv),
        M2_0=M2_0,
        criterion_fixed=float(f2 @ inv_fixed @ f2),
        criterion_random=float(f2 @ model.sigma_gamma_matrix() @ f2),
    )


def c_criterion_time(design: ApproximateDesign, model: DegradationModel, t_star: float) -> CriterionReport:
    """Marginal c-criterion f2(t*)' M2^-1 f2(t*) of a time plan, split into parts."""
    if not (t_star > 0.0):
        raise ValidationError(f"t_star must be positive, got {t_star}")
    M2_0 = info_time_fixed(design, model)
    f2 = model.time_basis.evaluate(t_star)
    fixed = float(f2 @ _spd_solve(M2_0, f2, "t"))
    random = sigma_u2(t_star, model)
    return CriterionReport(
        criterion_total=fixed + random,
        criterion_fixed=fixed,
        criterion_random=random,
        t_star=float(t_star),
    )


def info_stress(design: ApproximateDesign, model: DegradationModel) -> np.ndarray:
    """Per-unit stress information M1(xi) = sum_i w_i f1(x_i) f1(x_i)'."""
    xs, ws = design.as_arrays()
    F1 = model.stress_basis.evaluate_many(xs)
    M = (F1 * ws[:, None]).T @ F1
    return 0.5 * (M + M.T)


def stress_extrapolation_factor(xi: ApproximateDesign, model: DegradationModel) -> float:
    """f1(x_u)' M1(xi)^-1 f1(x_u), the stress part of the product variance."""
    M1 = info_stress(xi, model)
    f1u = model.stress_basis.evaluate(model.x_u)
    return float(f1u @ _spd_solve(M1, f1u, "x"))


def avar_median(xi: ApproximateDesign, tau: ApproximateDesign, model: DegradationModel) -> float:
    """Asymptotic variance of the estimated median, up to the constant c0^2.

    Product of the stress extrapolation factor f1(x_u)' M1(xi)^-1 f1(x_u)
    and the marginal time criterion at t* = median failure time.
    """
    t_star = median_failure_time(model)
    time_part = c_criterion_time(tau, model, t_star)
    return stress_extrapolation_factor(xi, model) * time_part.criterion_total


def efficiency(
    candidate: ApproximateDesign,
    reference_optimal: ApproximateDesign,
    model: DegradationModel,
    t_star: float,
) -> float:
    """c-efficiency of a candidate time plan against an optimal reference.

    Ratio of criterion_total values with the reference in the numerator; at
    most 1 whenever the reference really is optimal.  Scale-free: any
    constant multiplying both criterion values cancels.
    """
    ref = c_criterion_time(reference_optimal, model, t_star).criterion_total
    cand = c_criterion_time(candidate, model, t_star).criterion_total
    return ref / cand


def extrapolation_time(model: DegradationModel, alpha: float = 0.5) -> float:
    """Failure-time quantile used as the design extrapolation target.

    Only the median is supported: for alpha != 0.5 the criterion would need
    the sensitivity of the path variance to the covariance parameters, which
    this planning model does not carry.
    """
    if alpha != 0.5:
        raise ValidationError(
            f"design criteria are defined for the median only (alpha = 0.5); got alpha = {alpha}. "
            "Quantile estimation itself is available for any level via adtplan.quantile."
        )
    return median_failure_time(model)
