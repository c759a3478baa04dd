from pathlib import Path

import pytest

from robust_bond_pricer.model import parse_config
from robust_bond_pricer.runner import RunError, RunOutcome, execute, run

_JACOBI = """
jacobi:
  lambda_lo: 0.01
  lambda_hi: 0.1
  alpha: 0.5
  beta: 0.3
  lambda_mean: 0.04
  lambda_0: 0.05
"""

_SMALL_MC = """
monte_carlo:
  n_paths: 400
  steps_per_year: 50
series:
  order: 2
"""

_CURVE = """
curve:
  initial: {kind: flat, level: 0.02}
  volatility: {kind: constant, sigma: [0.01]}
  theta_star: [0.2]
audit:
  n_steps: 10
"""


class TestRunOutcome:
    @pytest.mark.parametrize("passed, status", [(True, 0), (False, 1)])
    def test_exit_status(self, passed: bool, status: int):
        assert RunOutcome(rows=[], passed=passed).exit_status == status


class TestSimulate:
    def test_rows(self):
        config = parse_config(
            "command: simulate\nseed: 3\n"
            + _JACOBI
            + "simulation: {horizon: 1.0, steps_per_year: 10, dim: 2, n_paths: 3}\n"
            + "recovery: {r_lo: 0.3, r_hi: 0.7}\n"
        )
        outcome = execute(config)
        assert outcome.passed
        assert len(outcome.rows) == 3 * 11
        assert list(outcome.rows[0]) == ["path", "t", "intensity", "brownian_1", "brownian_2", "recovery", "default_time"]
        assert outcome.rows[0]["intensity"] == pytest.approx(0.05)
        assert outcome.rows[0]["recovery"] == 1.0
        assert all(0.01 <= row["intensity"] <= 0.1 for row in outcome.rows)
        first_path = [row for row in outcome.rows if row["path"] == 0]
        assert len({row["default_time"] for row in first_path}) == 1

    def test_reproducible(self):
        document = "command: simulate\n" + _JACOBI + "simulation: {horizon: 1.0, steps_per_year: 10, n_paths: 2}\n"
        assert execute(parse_config(document)).rows == execute(parse_config(document)).rows


class TestBounds:
    def test_rows(self):
        config = parse_config("command: bounds\n" + _JACOBI + "schedule:\n  pairs: [[0, 1], [2, 2]]\n")
        outcome = execute(config)
        assert outcome.passed
        assert [row["T"] for row in outcome.rows] == [1.0, 2.0]
        assert outcome.rows[1]["lower"] == outcome.rows[1]["upper"] == 1.0
        assert outcome.rows[0]["lambda_0"] == 0.05
        assert outcome.rows[0]["upper_form"] == "repaired"

    def test_scan(self):
        config = parse_config(
            "command: bounds\n" + _JACOBI + "scan:\n  lambda_0: [lambda_lo, lambda_hi]\nschedule:\n  pairs: [[0, 1]]\n"
        )
        rows = execute(config).rows
        assert [row["lambda_0"] for row in rows] == [0.01, 0.1]
        assert rows[0]["lower"] > rows[1]["lower"]

    def test_literal_form_can_fail(self):
        config = parse_config("command: bounds\n" + _JACOBI + "schedule:\n  pairs: [[0, 5]]\n  upper_form: literal\n")
        outcome = execute(config)
        assert not outcome.passed
        assert outcome.exit_status == 1


class TestPriceAndInterval:
    def test_price(self):
        config = parse_config("command: price\n" + _JACOBI + _SMALL_MC + "schedule:\n  pairs: [[0, 1], [1, 1]]\n")
        rows = execute(config).rows
        assert len(rows) == 2
        assert {"series", "mc", "stderr", "series_status", "pass"} <= set(rows[0])
        assert rows[1]["mc"] == 1.0
        assert rows[1]["stderr"] == 0.0

    def test_interval_with_recovery(self):
        config = parse_config(
            "command: interval\n"
            + _JACOBI
            + _SMALL_MC
            + "schedule:\n  pairs: [[0, 1]]\nshort_rate: {value: 0.02}\nrecovery: {r_lo: 0.3, r_hi: 0.7, jump_rate: 0.5}\n"
        )
        rows = execute(config).rows
        assert [row["leg"] for row in rows] == ["zero_recovery", "recovery"]
        assert rows[1]["lambda_lo"] == pytest.approx(0.15)
        assert rows[0]["discount"] == pytest.approx(0.98019867330676)
        assert rows[0]["lower"] <= rows[0]["upper"]

    def test_degenerate_recovery_band(self):
        config = parse_config(
            "command: interval\n" + _JACOBI + _SMALL_MC + "schedule:\n  pairs: [[0, 1]]\nrecovery: {r_lo: 0.5, r_hi: 0.5}\n"
        )
        with pytest.raises(RunError) as error:
            execute(config)
        assert error.value.operation == "recovery_price_interval"


class TestAuditDrift:
    def test_no_arbitrage_model(self):
        outcome = execute(parse_config("command: audit-drift\n" + _CURVE))
        assert outcome.passed
        assert len(outcome.rows) == 11 * 12 // 2
        assert list(outcome.rows[0]) == ["t", "T", "residual_short_rate", "residual_drift", "pass"]
        assert outcome.companions["validation"][0]["pass"] is True
        assert "martingale" not in outcome.companions

    def test_martingale_companion(self):
        document = "command: audit-drift\n" + _CURVE + "  martingale_paths: 2000\nrecovery: {r_lo: 0.3, r_hi: 0.7}\n"
        outcome = execute(parse_config(document))
        checks = outcome.companions["martingale"]
        assert [check["test"] for check in checks] == ["discounted_bond", "recovery_bond"]

    def test_perturbed_drift(self):
        document = "command: audit-drift\n" + _CURVE.replace("theta_star: [0.2]", "theta_star: [0.2]\n  drift: {scale: 1.5}")
        outcome = execute(parse_config(document))
        assert not outcome.passed
        assert outcome.exit_status == 1


class TestVerifyMeasure:
    def test_unit_intensity(self):
        document = """
command: verify-measure
simulation: {horizon: 1.0, steps_per_year: 10}
measure:
  intensity: {kind: constant, value: 1.0}
  n_paths: 1000
  band: [0.5, 2.0]
  admissibility_paths: 10
"""
        outcome = execute(parse_config(document))
        assert outcome.passed
        (row,) = outcome.rows
        assert row["kind"] == "constant"
        assert row["mean"] == pytest.approx(1.0)
        assert row["admissible"] is True
        assert list(row)[-1] == "pass"

    def test_outside_band(self):
        document = """
command: verify-measure
simulation: {horizon: 1.0, steps_per_year: 10}
measure:
  intensity: {kind: constant, value: 1.0}
  n_paths: 1000
  band: [0.01, 0.1]
  admissibility_paths: 10
"""
        outcome = execute(parse_config(document))
        assert not outcome.passed
        assert outcome.rows[0]["admissible"] is False


class TestRun:
    def test_writes_tables(self, tmp_path: Path):
        config = parse_config("command: audit-drift\n" + _CURVE)
        outcome = run(config, out=tmp_path / "audit.csv")
        assert outcome.artifacts == [tmp_path / "audit.csv", tmp_path / "audit.validation.csv"]
        assert all(path.exists() for path in outcome.artifacts)

    def test_output_from_configuration(self, tmp_path: Path):
        target = tmp_path / "bounds.json"
        config = parse_config(
            "command: bounds\n" + _JACOBI + f"schedule:\n  pairs: [[0, 1]]\noutput: {{path: '{target}', format: json}}\n"
        )
        outcome = run(config)
        assert outcome.artifacts == [target]
        assert target.read_text(encoding="utf-8").startswith("[")

    def test_nothing_written_without_target(self):
        config = parse_config("command: bounds\n" + _JACOBI + "schedule:\n  pairs: [[0, 1]]\n")
        assert run(config).artifacts == []
