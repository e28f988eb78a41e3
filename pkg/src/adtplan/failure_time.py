"""Soft-failure time distribution under use conditions.

A unit fails when its mean degradation path crosses the threshold y0.  With
Gaussian random coefficients the failure time T satisfies

    P(T <= t) = Phi(h(t)),    h(t) = (mu(t) - y0) / sigma_u(t),

where mu(t) = f2(t)' delta is the aggregate path at the use stress and
sigma_u^2(t) = f2(t)' Sigma_gamma f2(t) its between-unit variance.  For the
affine basis mu is a straight line and the median has the closed form
(y0 - delta_1) / delta_2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr, ndtri

from .errors import (
    DegenerateVarianceError,
    IndeterminateMarginError,
    NonMonotoneMarginError,
    NoPositiveMedianError,
    ValidationError,
)
from .model import DegradationModel, eval_delta

__all__ = [
    "QuantileResult",
    "mu_aggregate",
    "sigma_u2",
    "sigma_u",
    "h",
    "failure_cdf",
    "median_failure_time",
    "quantile",
]

# Root search keeps doubling the bracket's right end until it passes this.
_BRACKET_LIMIT = 1.0e6
# Residual tolerance on h(t_alpha) - z_alpha.
_H_TOL = 1.0e-10
# Grid size for the numerical monotonicity check used when rho < 0.
_MONOTONE_GRID = 1024


@dataclass(frozen=True)
class QuantileResult:
    """Outcome of a quantile solve.

    t_alpha is NaN when exists is False (the requested probability level is
    outside the range of the failure-time distribution).  bounds_used records
    the bracket handed to the root finder; for closed-form solutions both
    ends equal the solution.
    """

    t_alpha: float
    exists: bool
    bounds_used: tuple[float, float]


def mu_aggregate(t: float, model: DegradationModel) -> float:
    """Mean degradation at time t under use conditions, f2(t)' delta."""
    return float(model.time_basis.evaluate(t) @ eval_delta(model))


def sigma_u2(t: float, model: DegradationModel) -> float:
    """Between-unit variance of the path at time t, f2(t)' Sigma_gamma f2(t)."""
    f2 = model.time_basis.evaluate(t)
    val = float(f2 @ model.sigma_gamma_matrix() @ f2)
    # Sigma_gamma is non-negative definite; clip roundoff noise.
    return max(val, 0.0)


def sigma_u(t: float, model: DegradationModel) -> float:
    return math.sqrt(sigma_u2(t, model))


def h(t: float, model: DegradationModel) -> float:
    """Standardized margin (mu(t) - y0) / sigma_u(t).

    Undefined where the path variance vanishes: raises
    DegenerateVarianceError when the margin is nonzero there, and
    IndeterminateMarginError for the 0/0 case.
    """
    s = sigma_u(t, model)
    margin = mu_aggregate(t, model) - model.y0
    if s == 0.0:
        if margin == 0.0:
            raise IndeterminateMarginError(f"sigma_u({t}) = 0 and mu({t}) = y0: margin is 0/0")
        raise DegenerateVarianceError(f"sigma_u({t}) = 0 while mu({t}) != y0")
    return margin / s


def failure_cdf(t: float, model: DegradationModel) -> float:
    """P(T <= t) = Phi(h(t))."""
    return float(ndtr(h(t, model)))


def median_failure_time(model: DegradationModel) -> float:
    """First time the aggregate path reaches the threshold.

    Closed form (y0 - delta_1) / delta_2 for the affine time basis; general
    bases fall back to the quantile solver at alpha = 0.5.
    """
    delta = eval_delta(model)
    if model.time_basis.is_affine:
        d1, d2 = float(delta[0]), float(delta[1])
        if d2 <= 0.0 or d1 >= model.y0:
            raise NoPositiveMedianError(
                f"no positive median: need delta_2 > 0 and delta_1 < y0, got delta = ({d1}, {d2}), y0 = {model.y0}"
            )
        return (model.y0 - d1) / d2
    result = quantile(0.5, model)
    if not result.exists:
        raise NoPositiveMedianError("aggregate path never reaches the threshold")
    return result.t_alpha


def _verify_increasing(model: DegradationModel, lo: float, hi: float) -> None:
    """Sample h on [lo, hi] and require strict increase.

    Monotonicity of h is guaranteed for affine paths with rho >= 0; for
    negative correlation (or richer bases) it can fail, in which case the
    quantile root may not be unique and we refuse rather than guess.
    """
    ts = np.linspace(lo, hi, _MONOTONE_GRID)
    vals = np.array([h(t, model) for t in ts])
    if np.any(np.diff(vals) <= 0.0):
        raise NonMonotoneMarginError(
            f"h is not strictly increasing on [{lo}, {hi}]; quantile root may not be unique"
        )


def _needs_monotonicity_check(model: DegradationModel) -> bool:
    if not model.time_basis.is_affine:
        return True
    return model.sigma_gamma_matrix()[0, 1] < 0.0


def quantile(alpha: float, model: DegradationModel) -> QuantileResult:
    """Solve h(t_alpha) = z_alpha for the failure-time quantile.

    Levels outside the open window (Phi(h(0)), lim sup Phi(h(t))) have no
    solution and are reported with exists=False instead of an exception.
    """
    if not (0.0 < alpha < 1.0):
        raise ValidationError(f"alpha must be in (0,1), got {alpha}")
    z = float(ndtri(alpha))
    h0 = h(0.0, model)
    if z <= h0:
        return QuantileResult(t_alpha=math.nan, exists=False, bounds_used=(0.0, 0.0))

    if model.time_basis.is_affine:
        delta = eval_delta(model)
        d1, d2 = float(delta[0]), float(delta[1])
        sg = model.sigma_gamma_matrix()
        s2_slope = math.sqrt(max(sg[1, 1], 0.0))
        if s2_slope == 0.0:
            # Random intercept only: h(t) = (d1 + d2 t - y0) / sigma1 is a line.
            if d2 <= 0.0:
                return QuantileResult(t_alpha=math.nan, exists=False, bounds_used=(0.0, 0.0))
            s1 = math.sqrt(sg[0, 0])
            t_alpha = (model.y0 - d1 + z * s1) / d2
            if t_alpha <= 0.0:
                return QuantileResult(t_alpha=math.nan, exists=False, bounds_used=(0.0, 0.0))
            return QuantileResult(t_alpha=t_alpha, exists=True, bounds_used=(t_alpha, t_alpha))
        # With a random slope h is bounded: h(t) -> d2 / sigma2 as t -> inf.
        if z >= d2 / s2_slope:
            return QuantileResult(t_alpha=math.nan, exists=False, bounds_used=(0.0, 0.0))

    lo, hi = 0.0, 1.0
    while h(hi, model) < z:
        hi *= 2.0
        if hi > _BRACKET_LIMIT:
            return QuantileResult(t_alpha=math.nan, exists=False, bounds_used=(lo, hi))

    if _needs_monotonicity_check(model):
        _verify_increasing(model, lo, hi)

    root = brentq(lambda t: h(t, model) - z, lo, hi, xtol=1e-14)
    if abs(h(root, model) - z) > _H_TOL:
        raise NonMonotoneMarginError(f"root residual {abs(h(root, model) - z)} exceeds {_H_TOL}")
    return QuantileResult(t_alpha=float(root), exists=True, bounds_used=(lo, hi))
