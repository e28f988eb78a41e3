"""Failure-time distribution induced by threshold crossing of the paths."""

from __future__ import annotations

import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ndtr

from adtplan import (
    DegenerateVarianceError,
    DegradationModel,
    IndeterminateMarginError,
    NonMonotoneMarginError,
    NoPositiveMedianError,
    ValidationError,
    failure_cdf,
    h,
    median_failure_time,
    quantile,
    sigma_u,
    sigma_u2,
)
from conftest import T_MEDIAN, random_affine_model


class TestPathVariance:
    def test_frozen_values(self, table1: DegradationModel) -> None:
        assert sigma_u2(0.0, table1) == pytest.approx(0.012996, abs=1e-15)
        assert sigma_u2(1.0, table1) == pytest.approx(0.02059758, abs=1e-15)
        assert sigma_u2(T_MEDIAN, table1) == pytest.approx(0.03523209750952841, rel=1e-14)

    def test_negative_correlation_dips_before_rising(self, table1: DegradationModel) -> None:
        # With rho < 0 the variance minimum sits at t = -rho*sigma1/sigma2 > 0.
        t_min = 0.143 * 0.114 / 0.105
        assert sigma_u2(t_min, table1) < sigma_u2(0.0, table1)
        assert sigma_u2(1.0, table1) > sigma_u2(t_min, table1)

    @given(t=st.floats(min_value=0.0, max_value=5.0, allow_nan=False))
    @settings(max_examples=50)
    def test_sigma_is_sqrt_of_sigma2(self, t: float, table1: DegradationModel) -> None:
        assert sigma_u(t, table1) == pytest.approx(math.sqrt(sigma_u2(t, table1)))


class TestMargin:
    def test_frozen_h0(self, table1: DegradationModel) -> None:
        assert h(0.0, table1) == pytest.approx(-14.089684210526316, rel=1e-14)

    def test_limit_level(self, table1: DegradationModel) -> None:
        # h(t) -> delta2/sigma2 as t grows.
        assert h(1e9, table1) == pytest.approx(9.658118095238097, rel=1e-6)

    def test_median_crossing_is_zero_margin(self, table1: DegradationModel) -> None:
        assert h(T_MEDIAN, table1) == pytest.approx(0.0, abs=1e-12)

    def test_cdf_is_phi_of_margin(self, table1: DegradationModel) -> None:
        for t in (0.1, 0.9, 1.6, 3.0):
            assert failure_cdf(t, table1) == pytest.approx(float(ndtr(h(t, table1))))

    def test_degenerate_variance_raises(self) -> None:
        model = DegradationModel.affine(
            beta=(1.0, 1.0, 1.0, 1.0),
            sigma1=0.0,
            sigma2=0.1,
            rho=0.0,
            sigma_eps=0.05,
            x_u=-0.1,
            y0=3.0,
        )
        with pytest.raises(DegenerateVarianceError):
            h(0.0, model)

    def test_zero_over_zero_margin_raises(self) -> None:
        # Path starts exactly at the threshold with zero start variance.
        model = DegradationModel.affine(
            beta=(2.0, 1.0, 1.0, 0.0),
            sigma1=0.0,
            sigma2=0.1,
            rho=0.0,
            sigma_eps=0.05,
            x_u=-0.5,
            y0=1.5,
        )
        with pytest.raises(IndeterminateMarginError):
            h(0.0, model)


class TestMedian:
    def test_frozen_value(self, table1: DegradationModel) -> None:
        assert median_failure_time(table1) == pytest.approx(T_MEDIAN, abs=1e-15)

    def test_against_quantile_half(self, table1: DegradationModel) -> None:
        res = quantile(0.5, table1)
        assert res.exists
        assert res.t_alpha == pytest.approx(median_failure_time(table1), rel=1e-12)

    def test_nonpositive_median_rejected(self) -> None:
        # Threshold already crossed at t = 0.
        with pytest.raises(NoPositiveMedianError):
            median_failure_time(
                DegradationModel.affine(
                    beta=(2.0, 1.0, 0.0, 0.0),
                    sigma1=0.1,
                    sigma2=0.1,
                    rho=0.0,
                    sigma_eps=0.05,
                    x_u=-0.1,
                    y0=1.0,
                )
            )

    def test_random_models_match_cdf_half(self) -> None:
        rng = np.random.default_rng(20240817)
        for _ in range(25):
            model = random_affine_model(rng)
            t_med = median_failure_time(model)
            assert failure_cdf(t_med, model) == pytest.approx(0.5, abs=1e-9)


class TestQuantile:
    def test_alpha_must_be_interior(self, table1: DegradationModel) -> None:
        for alpha in (0.0, 1.0, -0.1, 1.1):
            with pytest.raises(ValidationError):
                quantile(alpha, table1)

    def test_below_start_probability_does_not_exist(self, table1: DegradationModel) -> None:
        # F(0) = Phi(-14.09) ~ 2e-45; any alpha below that has no positive root.
        res = quantile(1e-60, table1)
        assert not res.exists
        assert math.isnan(res.t_alpha)

    def test_above_terminal_level_does_not_exist(self) -> None:
        # delta2/sigma2 = 1 caps the reachable probability at Phi(1) = 0.841.
        model = DegradationModel.affine(
            beta=(1.0, 0.1, 0.0, 0.0),
            sigma1=0.05,
            sigma2=0.1,
            rho=0.0,
            sigma_eps=0.05,
            x_u=-0.1,
            y0=1.2,
        )
        res = quantile(0.9, model)
        assert not res.exists

    def test_zero_slope_variance_closed_form(self) -> None:
        model = DegradationModel.affine(
            beta=(1.0, 1.0, 0.5, 0.1),
            sigma1=0.2,
            sigma2=0.0,
            rho=0.0,
            sigma_eps=0.05,
            x_u=-0.2,
            y0=2.0,
        )
        d1 = 1.0 + 0.5 * -0.2
        d2 = 1.0 + 0.1 * -0.2
        from scipy.special import ndtri

        for alpha in (0.2, 0.5, 0.8):
            res = quantile(alpha, model)
            expected = (2.0 - d1 + float(ndtri(alpha)) * 0.2) / d2
            assert res.exists
            assert res.t_alpha == pytest.approx(expected, rel=1e-14)

    def test_zero_slope_variance_negative_root_reported(self) -> None:
        # Very low alpha pushes the closed-form root below zero.
        model = DegradationModel.affine(
            beta=(1.0, 1.0, 0.5, 0.1),
            sigma1=0.2,
            sigma2=0.0,
            rho=0.0,
            sigma_eps=0.05,
            x_u=-0.2,
            y0=1.0,
        )
        res = quantile(1e-6, model)
        assert not res.exists

    def test_round_trip_through_cdf(self, table1: DegradationModel) -> None:
        for t0 in (0.4, 1.0, 1.6, 2.5, 4.0):
            alpha = failure_cdf(t0, table1)
            res = quantile(alpha, table1)
            assert res.exists
            assert res.t_alpha == pytest.approx(t0, rel=1e-9)

    @given(data=st.data())
    @settings(max_examples=40, deadline=None)
    def test_round_trip_random_nonnegative_rho(self, data: st.DataObject) -> None:
        seed = data.draw(st.integers(min_value=0, max_value=2**31))
        rng = np.random.default_rng(seed)
        model = random_affine_model(rng)
        if model.sigma_gamma_matrix()[0, 1] < 0.0:
            model = dataclasses.replace(
                model,
                sigma_gamma=tuple(
                    tuple(abs(v) for v in row) for row in model.sigma_gamma
                ),
            )
        t0 = data.draw(st.floats(min_value=0.05, max_value=3.0, allow_nan=False))
        alpha = failure_cdf(t0, model)
        if not (1e-12 < alpha < 1.0 - 1e-12):
            return
        res = quantile(alpha, model)
        assert res.exists
        assert res.t_alpha == pytest.approx(t0, rel=1e-7)

    def test_bounds_bracket_the_root(self, table1: DegradationModel) -> None:
        res = quantile(0.9, table1)
        lo, hi = res.bounds_used
        assert lo <= res.t_alpha <= hi

    def test_non_monotone_margin_detected(self) -> None:
        # Strong negative correlation makes sigma_u dip sharply, so the
        # margin rises then falls inside the bracket; the solver must refuse
        # rather than silently pick a branch.
        model = DegradationModel.affine(
            beta=(0.3, 2.0, 0.0, 0.0),
            sigma1=1.0,
            sigma2=2.0,
            rho=-0.95,
            sigma_eps=0.05,
            x_u=-0.1,
            y0=0.0,
        )
        margins = [h(t, model) for t in np.linspace(0.0, 1.0, 200)]
        assert max(margins) > margins[-1]  # genuinely non-monotone setup
        with pytest.raises(NonMonotoneMarginError):
            quantile(0.69, model)
