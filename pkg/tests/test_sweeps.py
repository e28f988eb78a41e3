"""Sensitivity sweeps: pi* curves and efficiency-versus-benchmark tables."""

from __future__ import annotations

import dataclasses
import math

import numpy as np
import pytest

from adtplan import (
    CANDIDATE_TAU2,
    CANDIDATE_TAU6,
    CANDIDATE_ZETA_STAR,
    DegradationModel,
    SweepRow,
    SweepSpec,
    SweepResult,
    ValidationError,
    VarianceFunction,
    default_sweep_spec,
    elfving_time_design,
    pi_star_from_ratio,
    reachable_ratio_interval,
    sweep_efficiency,
    sweep_pi_star,
    uniform_time_design,
    vary_ratio_via_rho,
)
from conftest import T_MEDIAN

NOMINAL_RATIO = 1.2234522034463164


class TestRatioReparameterization:
    def test_round_trip_at_nominal(self, table1: DegradationModel) -> None:
        varied = vary_ratio_via_rho(NOMINAL_RATIO, table1)
        assert VarianceFunction(varied).ratio_end_over_start() == pytest.approx(
            NOMINAL_RATIO, rel=1e-12
        )
        # sigma1 is re-pinned to sqrt(sigma2^2 + sigma_eps^2), so rho moves.
        sg = varied.sigma_gamma
        assert sg[0][0] == pytest.approx(0.105**2 + 0.048**2, rel=1e-14)
        rho = sg[0][1] / math.sqrt(sg[0][0] * sg[1][1])
        assert rho == pytest.approx(-0.13437841523927804, rel=1e-10)

    def test_round_trip_across_interval(self, table1: DegradationModel) -> None:
        lo, hi = reachable_ratio_interval(table1)
        for r in np.linspace(lo + 1e-6, hi - 1e-6, 9):
            varied = vary_ratio_via_rho(float(r), table1)
            assert VarianceFunction(varied).ratio_end_over_start() == pytest.approx(
                float(r), rel=1e-10
            )

    def test_frozen_interval(self, table1: DegradationModel) -> None:
        lo, hi = reachable_ratio_interval(table1)
        assert lo == pytest.approx(0.3928964841710281, rel=1e-12)
        assert hi == pytest.approx(1.80446950322646, rel=1e-12)

    def test_unreachable_ratio_reports_interval(self, table1: DegradationModel) -> None:
        with pytest.raises(ValidationError, match=r"0\.39.*1\.80"):
            vary_ratio_via_rho(5.0, table1)


class TestUniformTimeDesign:
    def test_examples(self) -> None:
        assert uniform_time_design(2).points == (0.0, 1.0)
        assert uniform_time_design(3).points == (0.0, 0.5, 1.0)
        assert uniform_time_design(6).points == (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
        assert all(w == pytest.approx(1 / 6) for w in uniform_time_design(6).weights)

    def test_needs_two_points(self) -> None:
        with pytest.raises(ValidationError):
            uniform_time_design(1)


class TestSweepSpec:
    def test_defaults(self) -> None:
        spec = default_sweep_spec("t_median")
        assert (spec.lo, spec.hi, spec.n_points) == (1.05, 10.0, 200)
        assert spec.candidates == (CANDIDATE_ZETA_STAR, CANDIDATE_TAU2, CANDIDATE_TAU6)
        pts = spec.abscissae()
        assert pts[0] == pytest.approx(1.05) and pts[-1] == pytest.approx(10.0)
        # Log spacing: constant successive ratios.
        assert np.allclose(np.diff(np.log(pts)), np.log(pts[1] / pts[0]))

    def test_validation(self) -> None:
        with pytest.raises(ValidationError):
            SweepSpec(variable="bogus", lo=1.1, hi=2.0)
        with pytest.raises(ValidationError):
            SweepSpec(variable="t_median", lo=2.0, hi=1.1)
        with pytest.raises(ValidationError):
            SweepSpec(variable="t_median", lo=1.1, hi=2.0, n_points=1)
        with pytest.raises(ValidationError):
            SweepSpec(variable="t_median", lo=0.9, hi=2.0)
        with pytest.raises(ValidationError):
            SweepSpec(variable="sigma_ratio", lo=0.0, hi=2.0)
        with pytest.raises(ValidationError):
            SweepSpec(variable="t_median", lo=1.1, hi=2.0, candidates=("nope",))


class TestSweepPiStar:
    def test_t_rows_match_closed_form(self, table1: DegradationModel) -> None:
        spec = SweepSpec(variable="t_median", lo=1.1, hi=8.0, n_points=25)
        result = sweep_pi_star(spec, table1)
        assert len(result.rows) == 25
        for row in result.rows:
            expected = elfving_time_design(table1, row.abscissa).weights[1]
            assert row.pi_star == expected  # same code path, bit-exact

    def test_ratio_rows_use_direct_formula(self, table1: DegradationModel) -> None:
        spec = SweepSpec(variable="sigma_ratio", lo=0.01, hi=50.0, n_points=15)
        result = sweep_pi_star(spec, table1)
        for row in result.rows:
            assert row.pi_star == pi_star_from_ratio(result.nominal_t_median, row.abscissa)
            assert row.reachable  # pi* is defined for every positive ratio

    def test_monotonicity(self, table1: DegradationModel) -> None:
        t_rows = sweep_pi_star(default_sweep_spec("t_median"), table1).rows
        pis = [r.pi_star for r in t_rows]
        assert all(a > b for a, b in zip(pis, pis[1:]))
        r_rows = sweep_pi_star(default_sweep_spec("sigma_ratio"), table1).rows
        pis_r = [r.pi_star for r in r_rows]
        assert all(a < b for a, b in zip(pis_r, pis_r[1:]))

    def test_limits(self, table1: DegradationModel) -> None:
        far = sweep_pi_star(
            SweepSpec(variable="t_median", lo=1e5, hi=1e6, n_points=2), table1
        )
        assert far.rows[-1].pi_star == pytest.approx(0.55, abs=1e-3)
        tiny = sweep_pi_star(
            SweepSpec(variable="sigma_ratio", lo=1e-9, hi=1e-8, n_points=2), table1
        )
        assert tiny.rows[0].pi_star == pytest.approx(0.0, abs=1e-8)


class TestSweepEfficiency:
    def test_nominal_abscissa_scores_one(self, table1: DegradationModel) -> None:
        spec = SweepSpec(variable="t_median", lo=T_MEDIAN, hi=10.0, n_points=3)
        result = sweep_efficiency(spec, table1)
        effs = dict(zip(spec.candidates, result.rows[0].efficiencies))
        assert effs[CANDIDATE_ZETA_STAR] == pytest.approx(1.0, abs=1e-12)

    def test_frozen_far_row(self, table1: DegradationModel) -> None:
        spec = SweepSpec(variable="t_median", lo=1.05, hi=10.0, n_points=5)
        result = sweep_efficiency(spec, table1)
        last = result.rows[-1]
        assert last.abscissa == 10.0
        assert last.efficiencies == pytest.approx(
            (0.8279430648522423, 0.9773236242351033, 0.4826767628835148), rel=1e-10
        )

    def test_six_point_uniform_never_beats_two_point(self, table1: DegradationModel) -> None:
        result = sweep_efficiency(default_sweep_spec("t_median"), table1)
        eff2 = result.column(CANDIDATE_TAU2)
        eff6 = result.column(CANDIDATE_TAU6)
        assert np.all(eff6 < eff2)

    def test_unreachable_ratio_rows_are_flagged(self, table1: DegradationModel) -> None:
        spec = SweepSpec(variable="sigma_ratio", lo=0.2, hi=5.0, n_points=5)
        result = sweep_efficiency(spec, table1)
        flags = tuple(row.reachable for row in result.rows)
        assert flags == (False, True, True, False, False)
        for row in result.rows:
            if row.reachable:
                assert all(np.isfinite(e) for e in row.efficiencies)
            else:
                assert all(np.isnan(e) for e in row.efficiencies)
                assert np.isfinite(row.pi_star)  # pi* itself needs no rho move

    def test_deterministic(self, table1: DegradationModel) -> None:
        spec = SweepSpec(variable="t_median", lo=1.2, hi=6.0, n_points=11)
        a = sweep_efficiency(spec, table1)
        b = sweep_efficiency(spec, table1)
        assert a.rows == b.rows

    def test_column_accessor(self, table1: DegradationModel) -> None:
        spec = SweepSpec(
            variable="t_median", lo=1.2, hi=6.0, n_points=4, candidates=(CANDIDATE_TAU2,)
        )
        result = sweep_efficiency(spec, table1)
        col = result.column(CANDIDATE_TAU2)
        assert col.shape == (4,)
        with pytest.raises(KeyError):
            result.column(CANDIDATE_TAU6)

    def test_held_fixed_re_pins_ratio(self, table1: DegradationModel) -> None:
        spec = SweepSpec(
            variable="t_median", lo=1.2, hi=6.0, n_points=3, held_fixed=1.0
        )
        result = sweep_efficiency(spec, table1)
        assert result.nominal_ratio == pytest.approx(1.0, rel=1e-12)
        homosked = SweepSpec(variable="t_median", lo=2.0, hi=3.0, n_points=2, held_fixed=1.0)
        row = sweep_pi_star(homosked, table1).rows[0]
        assert row.pi_star == pytest.approx(2.0 / 3.0, rel=1e-9)


class TestSweepResultValidation:
    def _spec(self) -> SweepSpec:
        return SweepSpec(variable="t_median", lo=1.2, hi=6.0, n_points=2)

    def test_rejects_pi_out_of_range(self) -> None:
        rows = (
            SweepRow(abscissa=1.2, pi_star=1.5, efficiencies=(0.9, 0.9, 0.9)),
            SweepRow(abscissa=6.0, pi_star=0.5, efficiencies=(0.9, 0.9, 0.9)),
        )
        with pytest.raises(ValidationError):
            SweepResult(spec=self._spec(), rows=rows, nominal_t_median=1.58, nominal_ratio=1.22)

    def test_rejects_nan_on_reachable_row(self) -> None:
        rows = (
            SweepRow(abscissa=1.2, pi_star=0.8, efficiencies=(float("nan"), 0.9, 0.9)),
            SweepRow(abscissa=6.0, pi_star=0.5, efficiencies=(0.9, 0.9, 0.9)),
        )
        with pytest.raises(ValidationError):
            SweepResult(spec=self._spec(), rows=rows, nominal_t_median=1.58, nominal_ratio=1.22)

    def test_rejects_efficiency_above_one(self) -> None:
        rows = (
            SweepRow(abscissa=1.2, pi_star=0.8, efficiencies=(1.2, 0.9, 0.9)),
            SweepRow(abscissa=6.0, pi_star=0.5, efficiencies=(0.9, 0.9, 0.9)),
        )
        with pytest.raises(ValidationError):
            SweepResult(spec=self._spec(), rows=rows, nominal_t_median=1.58, nominal_ratio=1.22)
