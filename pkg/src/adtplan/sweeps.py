"""Sensitivity sweeps for destructive c-optimal plans.

Tabulates the optimal endpoint weight pi* and the efficiency of fixed
candidate plans as the median failure time or the heteroscedasticity ratio
sigma(1)/sigma(0) moves away from its nominal value.  Efficiency of a
candidate zeta at a true parameter value theta is

    eff(zeta; theta) = c' M(zeta*_theta)^-1 c / c' M(zeta)^-1 c

in the single-observation model, where zeta*_theta is locally optimal at
theta.  Ratio sweeps vary the ratio through the correlation rho under the
convention sigma1^2 = sigma2^2 + sigma_eps^2, which reaches only a bounded
ratio interval; rows outside it carry pi* (a function of the ratio alone)
but no efficiencies, and are flagged.

Sweep points are mutually independent; rows are ordered by abscissa.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .destructive import (
    VarianceFunction,
    ProductDesign,
    c_criterion_single_obs,
    elfving_stress_design,
    elfving_time_design,
    pi_star_from_ratio,
    product_design,
)
from .errors import OutOfRegimeError, ValidationError
from .failure_time import median_failure_time
from .model import ApproximateDesign, DegradationModel, sigma_gamma_from_sd_corr

__all__ = [
    "CANDIDATE_ZETA_STAR",
    "CANDIDATE_TAU2",
    "CANDIDATE_TAU6",
    "ALL_CANDIDATES",
    "SweepSpec",
    "SweepRow",
    "SweepResult",
    "uniform_time_design",
    "vary_ratio_via_rho",
    "reachable_ratio_interval",
    "sweep_pi_star",
    "sweep_efficiency",
    "default_sweep_spec",
]

CANDIDATE_ZETA_STAR = "zeta_star_nominal"
CANDIDATE_TAU2 = "xi_tau2"
CANDIDATE_TAU6 = "xi_tau6"
ALL_CANDIDATES = (CANDIDATE_ZETA_STAR, CANDIDATE_TAU2, CANDIDATE_TAU6)

_VARIABLES = ("t_median", "sigma_ratio")


@dataclass(frozen=True)
class SweepSpec:
    """What to sweep, over which range, and which candidate plans to score.

    held_fixed pins the complementary parameter: the target median for
    sigma_ratio sweeps, the variance ratio for t_median sweeps.  None means
    the model's own nominal value.
    """

    variable: str
    lo: float
    hi: float
    n_points: int = 200
    held_fixed: float | None = None
    candidates: tuple[str, ...] = ALL_CANDIDATES

    def __post_init__(self) -> None:
        if self.variable not in _VARIABLES:
            raise ValidationError(
                f"sweep variable must be one of {_VARIABLES}, got {self.variable!r}"
            )
        if not (self.lo < self.hi):
            raise ValidationError(f"sweep range needs lo < hi, got [{self.lo}, {self.hi}]")
        if self.n_points < 2:
            raise ValidationError(f"sweep needs at least 2 points, got {self.n_points}")
        if self.variable == "t_median" and not (self.lo > 1.0):
            raise ValidationError(
                f"median sweeps need lo > 1 (extrapolation regime), got lo = {self.lo}"
            )
        if self.lo <= 0.0:
            raise ValidationError(f"sweep range must be positive for log spacing, got lo = {self.lo}")
        unknown = [c for c in self.candidates if c not in ALL_CANDIDATES]
        if unknown:
            raise ValidationError(f"unknown candidates {unknown}; choose from {ALL_CANDIDATES}")

    def abscissae(self) -> np.ndarray:
        return np.geomspace(self.lo, self.hi, self.n_points)


@dataclass(frozen=True)
class SweepRow:
    abscissa: float
    pi_star: float
    efficiencies: tuple[float, ...]
    reachable: bool = True


@dataclass(frozen=True)
class SweepResult:
    """Ordered sweep rows plus the nominal markers they are measured against."""

    spec: SweepSpec
    rows: tuple[SweepRow, ...]
    nominal_t_median: float
    nominal_ratio: float

    def __post_init__(self) -> None:
        for row in self.rows:
            if not (0.0 < row.pi_star < 1.0):
                raise ValidationError(f"pi_star out of (0,1) at abscissa {row.abscissa}: {row.pi_star}")
            for eff in row.efficiencies:
                if math.isnan(eff):
                    if row.reachable:
                        raise ValidationError(f"NaN efficiency on unflagged row at {row.abscissa}")
                    continue
                if not (0.0 < eff <= 1.0 + 1e-9):
                    raise ValidationError(f"efficiency out of (0,1] at abscissa {row.abscissa}: {eff}")

    def column(self, name: str) -> np.ndarray:
        if name == "abscissa":
            return np.array([r.abscissa for r in self.rows])
        if name == "pi_star":
            return np.array([r.pi_star for r in self.rows])
        try:
            idx = self.spec.candidates.index(name)
        except ValueError:
            raise KeyError(name) from None
        return np.array([r.efficiencies[idx] if idx < len(r.efficiencies) else math.nan for r in self.rows])


def uniform_time_design(k: int) -> ApproximateDesign:
    """Uniform design on k equally spaced time points, weight 1/k each."""
    if k < 2:
        raise ValidationError(f"uniform design needs k >= 2, got {k}")
    pts = tuple(j / (k - 1) for j in range(k))
    return ApproximateDesign(points=pts, weights=(1.0 / k,) * k)


def reachable_ratio_interval(model: DegradationModel) -> tuple[float, float]:
    """Ratio interval reachable by varying rho with sigma1^2 = sigma2^2 + sigma_eps^2."""
    sg = model.sigma_gamma_matrix()
    s2 = math.sqrt(sg[1, 1])
    se = model.sigma_eps
    s1 = math.sqrt(s2**2 + se**2)
    denom = s1**2 + se**2
    lo = math.sqrt((s1**2 + s2**2 + se**2 - 2.0 * s1 * s2) / denom)
    hi = math.sqrt((s1**2 + s2**2 + se**2 + 2.0 * s1 * s2) / denom)
    return lo, hi


def vary_ratio_via_rho(target_ratio: float, model: DegradationModel) -> DegradationModel:
    """Reparameterize the variance components to hit a target sigma(1)/sigma(0).

    sigma2 and sigma_eps keep their nominal values, sigma1 is pinned to
    sqrt(sigma2^2 + sigma_eps^2), and rho is solved from

        ratio^2 = (sigma1^2 + 2 rho sigma1 sigma2 + sigma2^2 + sigma_eps^2)
                  / (sigma1^2 + sigma_eps^2).

    Ratios outside the |rho| <= 1 window are rejected with the reachable
    interval in the message.
    """
    if not (target_ratio > 0.0):
        raise ValidationError(f"target ratio must be positive, got {target_ratio}")
    sg = model.sigma_gamma_matrix()
    s2 = math.sqrt(sg[1, 1])
    if s2 == 0.0:
        raise ValidationError("rho reparameterization needs sigma2 > 0")
    se = model.sigma_eps
    s1 = math.sqrt(s2**2 + se**2)
    rho = (target_ratio**2 * (s1**2 + se**2) - s1**2 - s2**2 - se**2) / (2.0 * s1 * s2)
    if abs(rho) > 1.0 + 1e-12:
        lo, hi = reachable_ratio_interval(model)
        raise ValidationError(
            f"ratio {target_ratio} is not reachable with |rho| <= 1 under "
            f"sigma1^2 = sigma2^2 + sigma_eps^2; reachable interval is [{lo:.6f}, {hi:.6f}]"
        )
    rho = min(1.0, max(-1.0, rho))
    return dataclasses.replace(model, sigma_gamma=sigma_gamma_from_sd_corr(s1, s2, rho))


def _resolve_nominals(spec: SweepSpec, model: DegradationModel) -> tuple[DegradationModel, float]:
    """Apply held_fixed and return (base model, pinned median) for the sweep."""
    if spec.variable == "t_median":
        base = model if spec.held_fixed is None else vary_ratio_via_rho(spec.held_fixed, model)
        return base, median_failure_time(base)
    t_star = median_failure_time(model) if spec.held_fixed is None else spec.held_fixed
    if not (t_star > 1.0):
        raise OutOfRegimeError(f"ratio sweeps need a median beyond the horizon, got {t_star}")
    return model, t_star


def sweep_pi_star(spec: SweepSpec, model: DegradationModel) -> SweepResult:
    """Optimal endpoint weight along the sweep, efficiencies left empty.

    t_median rows recompute the closed-form design at each abscissa; ratio
    rows use pi* as a function of the ratio directly, so every positive
    ratio tabulates even where the rho reparameterization cannot reach.
    """
    if not model.time_basis.is_affine:
        raise ValidationError("pi* sweeps require the affine time basis")
    base, t_star = _resolve_nominals(spec, model)
    ratio_nominal = VarianceFunction(base).ratio_end_over_start()
    rows = []
    for a in spec.abscissae():
        if spec.variable == "t_median":
            pi1 = elfving_time_design(base, float(a)).weights[1]
        else:
            pi1 = pi_star_from_ratio(t_star, float(a))
        rows.append(SweepRow(abscissa=float(a), pi_star=pi1, efficiencies=()))
    return SweepResult(
        spec=spec,
        rows=tuple(rows),
        nominal_t_median=median_failure_time(base),
        nominal_ratio=ratio_nominal,
    )


def _candidate_designs(spec: SweepSpec, model: DegradationModel, t_star: float) -> dict[str, ProductDesign]:
    xi = elfving_stress_design(model)
    built: dict[str, ProductDesign] = {}
    for name in spec.candidates:
        if name == CANDIDATE_ZETA_STAR:
            built[name] = product_design(xi, elfving_time_design(model, t_star))
        elif name == CANDIDATE_TAU2:
            built[name] = product_design(xi, uniform_time_design(2))
        else:
            built[name] = product_design(xi, uniform_time_design(6))
    return built


def sweep_efficiency(spec: SweepSpec, model: DegradationModel) -> SweepResult:
    """Efficiency of the fixed candidate plans against the local optimum.

    Candidates are built once at the nominal parameters and held fixed; the
    locally optimal plan and all information matrices are recomputed at each
    abscissa.  Ratio rows that the rho reparameterization cannot reach are
    flagged and carry NaN efficiencies.
    """
    if not (model.time_basis.is_affine and model.stress_basis.is_affine):
        raise ValidationError("efficiency sweeps require affine stress and time bases")
    base, t_nom = _resolve_nominals(spec, model)
    candidates = _candidate_designs(spec, base, t_nom)
    xi = elfving_stress_design(base)
    ratio_nominal = VarianceFunction(base).ratio_end_over_start()
    rows = []
    for a in spec.abscissae():
        a = float(a)
        if spec.variable == "t_median":
            m_true, t_true = base, a
            pi1 = elfving_time_design(base, a).weights[1]
        else:
            pi1 = pi_star_from_ratio(t_nom, a)
            t_true = t_nom
            try:
                m_true = vary_ratio_via_rho(a, base)
            except ValidationError:
                rows.append(
                    SweepRow(
                        abscissa=a,
                        pi_star=pi1,
                        efficiencies=(math.nan,) * len(spec.candidates),
                        reachable=False,
                    )
                )
                continue
        local = product_design(xi, elfving_time_design(m_true, t_true))
        crit_local = c_criterion_single_obs(local, m_true, t_true)
        effs = tuple(
            crit_local / c_criterion_single_obs(candidates[name], m_true, t_true)
            for name in spec.candidates
        )
        rows.append(SweepRow(abscissa=a, pi_star=pi1, efficiencies=effs))
    return SweepResult(
        spec=spec,
        rows=tuple(rows),
        nominal_t_median=median_failure_time(base),
        nominal_ratio=ratio_nominal,
    )


def default_sweep_spec(variable: str) -> SweepSpec:
    """Figure-default ranges: t in [1.05, 10], ratio in [0.2, 5], 200 log-spaced points."""
    if variable == "t_median":
        return SweepSpec(variable="t_median", lo=1.05, hi=10.0, n_points=200)
    if variable == "sigma_ratio":
        return SweepSpec(variable="sigma_ratio", lo=0.2, hi=5.0, n_points=200)
    raise ValidationError(f"sweep variable must be one of {_VARIABLES}, got {variable!r}")
