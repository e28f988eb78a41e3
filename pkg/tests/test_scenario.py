"""Scenario file parsing: happy path, error accumulation, round-trips."""

from __future__ import annotations

from pathlib import Path

import pytest

from adtplan import (
    GridSpec,
    ScenarioValidationError,
    load_scenario,
    median_failure_time,
    parse_scenario,
    serialize_scenario,
)

SCENARIO_PATH = Path(__file__).resolve().parent.parent / "scenarios" / "example1.scenario"

MINIMAL = """\
model:
  stress_basis: affine
  time_basis: affine
  beta: [2.397, 1.018, 1.629, 0.0696]
  sigma1: 0.114
  sigma2: 0.105
  rho: -0.143
  sigma_eps: 0.048
  x_u: -0.056
  y0: 3.912
"""


class TestHappyPath:
    def test_reference_file_parses(self) -> None:
        scenario = load_scenario(SCENARIO_PATH)
        model = scenario.model
        assert model.beta == (2.397, 1.018, 1.629, 0.0696)
        assert model.x_u == -0.056 and model.y0 == 3.912
        assert scenario.grid == GridSpec(J=20, k=6)
        assert median_failure_time(model) == pytest.approx(1.5838873865203356, rel=1e-12)

    def test_minimal_document(self) -> None:
        scenario = parse_scenario(MINIMAL)
        assert scenario.grid is None and scenario.sweep is None and scenario.output is None
        assert scenario.model.sigma_gamma[0][0] == pytest.approx(0.114**2)

    def test_polynomial_stress_basis(self) -> None:
        text = MINIMAL.replace("stress_basis: affine", "stress_basis: {degree: 2}").replace(
            "beta: [2.397, 1.018, 1.629, 0.0696]",
            "beta: [2.397, 1.018, 1.629, 0.0696, 0.1, 0.01]",
        )
        scenario = parse_scenario(text)
        assert scenario.model.stress_basis.dim == 3

    def test_quadratic_time_basis_needs_wider_covariance(self) -> None:
        # sigma1/sigma2/rho describe a two-dimensional random effect, so a
        # higher-degree time basis cannot be expressed in this file format.
        text = MINIMAL.replace("time_basis: affine", "time_basis: {degree: 2}").replace(
            "beta: [2.397, 1.018, 1.629, 0.0696]",
            "beta: [2.397, 1.018, 0.1, 1.629, 0.0696, 0.01]",
        )
        with pytest.raises(ScenarioValidationError, match="sigma_gamma"):
            parse_scenario(text)

    def test_sweep_and_output_sections(self) -> None:
        text = MINIMAL + (
            "sweep:\n"
            "  variable: sigma_ratio\n"
            "  lo: 0.5\n"
            "  hi: 2.0\n"
            "  n: 50\n"
            "  candidates: [xi_tau2]\n"
            "output:\n"
            "  format: json\n"
            "  path: out.json\n"
        )
        scenario = parse_scenario(text)
        assert scenario.sweep.variable == "sigma_ratio"
        assert scenario.sweep.n_points == 50
        assert scenario.sweep.candidates == ("xi_tau2",)
        assert scenario.output.format == "json"


class TestErrorReporting:
    def test_rho_out_of_range_message(self) -> None:
        text = MINIMAL.replace("rho: -0.143", "rho: 1.5")
        with pytest.raises(ScenarioValidationError) as exc:
            parse_scenario(text)
        assert "sigma_gamma.rho out of [-1,1]" in str(exc.value)

    def test_missing_field_names_path(self) -> None:
        text = MINIMAL.replace("  y0: 3.912\n", "")
        with pytest.raises(ScenarioValidationError, match=r"model\.y0"):
            parse_scenario(text)

    def test_errors_accumulate(self) -> None:
        text = MINIMAL.replace("rho: -0.143", "rho: 1.5").replace("  y0: 3.912\n", "")
        with pytest.raises(ScenarioValidationError) as exc:
            parse_scenario(text)
        assert len(exc.value.errors) >= 2

    def test_syntax_error_reports_position(self) -> None:
        with pytest.raises(ScenarioValidationError, match=r"syntax error at line"):
            parse_scenario("model: [unclosed\n")

    def test_unknown_section_and_field(self) -> None:
        with pytest.raises(ScenarioValidationError, match="unknown"):
            parse_scenario(MINIMAL + "extras:\n  a: 1\n")
        with pytest.raises(ScenarioValidationError, match="unknown"):
            parse_scenario(MINIMAL.replace("y0: 3.912", "y0: 3.912\n  zz: 1"))

    def test_beta_length_must_match_bases(self) -> None:
        text = MINIMAL.replace(
            "beta: [2.397, 1.018, 1.629, 0.0696]", "beta: [2.397, 1.018, 1.629]"
        )
        with pytest.raises(ScenarioValidationError, match="beta"):
            parse_scenario(text)

    def test_bool_is_not_a_number(self) -> None:
        text = MINIMAL.replace("sigma_eps: 0.048", "sigma_eps: true")
        with pytest.raises(ScenarioValidationError, match="sigma_eps"):
            parse_scenario(text)

    def test_non_mapping_document(self) -> None:
        with pytest.raises(ScenarioValidationError):
            parse_scenario("- 1\n- 2\n")

    def test_grid_requires_integers(self) -> None:
        with pytest.raises(ScenarioValidationError, match=r"grid\.J"):
            parse_scenario(MINIMAL + "grid:\n  J: 2.5\n  k: 6\n")

    def test_negative_sd_rejected(self) -> None:
        with pytest.raises(ScenarioValidationError, match=r"model\.sigma1"):
            parse_scenario(MINIMAL.replace("sigma1: 0.114", "sigma1: -0.1"))

    def test_sweep_unknown_variable(self) -> None:
        with pytest.raises(ScenarioValidationError, match=r"sweep.*variable.*nope"):
            parse_scenario(MINIMAL + "sweep:\n  variable: nope\n  lo: 1.1\n  hi: 2\n")


class TestRoundTrip:
    def test_serialize_then_parse_is_identity(self) -> None:
        original = load_scenario(SCENARIO_PATH)
        redone = parse_scenario(serialize_scenario(original))
        assert redone == original

    def test_round_trip_with_all_sections(self) -> None:
        text = MINIMAL + (
            "grid:\n  J: 40\n  k: 4\n"
            "sweep:\n  variable: t_median\n  lo: 1.1\n  hi: 9.0\n  n: 30\n"
            "output:\n  format: csv\n  path: plan.csv\n"
        )
        original = parse_scenario(text)
        assert parse_scenario(serialize_scenario(original)) == original
