import math

import numpy as np
import pytest

from robust_bond_pricer._base.model import ParameterValidationError
from robust_bond_pricer.hjm import DriftShape
from robust_bond_pricer.hjm.fields import constant_drift, constant_vector, constant_volatility, flat_curve
from robust_bond_pricer.hjm.model import ForwardCurveModel
from robust_bond_pricer.hjm.term_structure import (
    GridMismatchError,
    audit_drift_condition,
    bar_integrals,
    bar_matrices,
    bond_price_recovery,
    bond_price_zero_recovery,
    check_integral_decomposition,
    drift_from_condition,
    evolve_term_structure,
    validate_model,
)
from robust_bond_pricer.measures.model import IntensitySpec
from robust_bond_pricer.stochastic.model import SamplePath, TimeGrid
from robust_bond_pricer.stochastic.simulate import recovery_path_from_jumps, simulate_brownian


def _frozen_model(level: float = 0.02) -> ForwardCurveModel:
    return ForwardCurveModel.parametric(level, [0.0], drift=DriftShape.ZERO)


def _zero_path(grid: TimeGrid, dim: int = 1) -> SamplePath:
    return SamplePath(grid=grid, values=np.zeros((grid.n_steps + 1, dim)))


class TestValidateModel:
    def test_flat_curve(self):
        model = ForwardCurveModel.parametric(0.02, [0.01], drift=DriftShape.ZERO)
        report = validate_model(model, TimeGrid(horizon=4.0, n_steps=40))
        assert report.passed
        assert report.initial_curve_l1 == pytest.approx(0.08)
        assert report.drift_double_integral == 0.0
        assert report.volatility_sup == pytest.approx(0.01)

    def test_vasicek(self):
        model = ForwardCurveModel.parametric(0.02, [0.015], kappa=0.5, theta_star=[0.1])
        report = validate_model(model, TimeGrid(horizon=2.0, n_steps=20))
        assert report.passed
        assert report.volatility_sup == pytest.approx(0.015)
        assert report.to_dict()["pass"] is True

    def test_singular_volatility(self):
        model = ForwardCurveModel(
            initial_curve=flat_curve(0.02),
            drift=constant_drift(0.0),
            volatility=lambda s, t: 1.0 / (np.asarray(t) - np.asarray(s)),
            theta_star=constant_vector([0.0]),
        )
        report = validate_model(model, TimeGrid(horizon=1.0, n_steps=10))
        assert not report.passed
        assert math.isinf(report.volatility_sup)


class TestBarIntegrals:
    def test_empty_interval(self):
        abar, bbar = bar_integrals(_frozen_model(), 1.0, 1.0)
        assert abar == 0.0
        assert bbar.tolist() == [0.0]

    def test_closed_forms(self):
        sigma = 0.02
        model = ForwardCurveModel(
            initial_curve=flat_curve(0.02),
            drift=lambda s, t: sigma**2 * (np.asarray(t) - np.asarray(s)),
            volatility=constant_volatility([sigma]),
            theta_star=constant_vector([0.0]),
        )
        abar, bbar = bar_integrals(model, 0.5, 2.5)
        assert abar == pytest.approx(0.5 * sigma**2 * 4.0)
        assert bbar[0] == pytest.approx(sigma * 2.0)

    def test_rejects_reversed_interval(self):
        with pytest.raises(ParameterValidationError):
            bar_integrals(_frozen_model(), 2.0, 1.0)

    def test_grid_matrices_match(self):
        grid = TimeGrid(horizon=1.0, n_steps=10)
        model = ForwardCurveModel.parametric(0.02, [0.01], theta_star=[0.2])
        abar, bbar = bar_matrices(model, grid)
        assert abar.shape == (11, 11)
        assert bbar.shape == (11, 11, 1)
        assert np.all(abar[5, :5] == 0.0)
        expected_a, expected_b = bar_integrals(model, 0.3, 0.9)
        assert abar[3, 9] == pytest.approx(expected_a, rel=1e-9, abs=1e-15)
        assert bbar[3, 9, 0] == pytest.approx(expected_b[0])


class TestDriftFromCondition:
    @pytest.mark.parametrize("theta", [0.0, 0.3])
    def test_constant_volatility(self, theta: float):
        sigma, tau = 0.01, 1.5
        model = ForwardCurveModel.parametric(0.02, [sigma], theta_star=[theta])
        expected = 0.5 * sigma**2 * tau**2 - sigma * theta * tau
        assert drift_from_condition(model, 0.5, 0.5 + tau) == pytest.approx(expected)

    def test_zero_volatility(self):
        assert drift_from_condition(_frozen_model(), 0.0, 3.0) == 0.0


class TestEvolveTermStructure:
    def test_frozen_curve(self):
        grid = TimeGrid(horizon=1.0, n_steps=10)
        ts = evolve_term_structure(_frozen_model(), simulate_brownian(grid, 1, 3), grid)
        for i in range(11):
            assert np.allclose(ts.forward[i, i:], 0.02)
            assert np.all(np.isnan(ts.forward[i, :i]))

    def test_unit_drift(self):
        grid = TimeGrid(horizon=1.0, n_steps=10)
        model = ForwardCurveModel.parametric(0.02, [0.0], drift=DriftShape.CONSTANT, drift_value=1.0)
        ts = evolve_term_structure(model, _zero_path(grid), grid)
        assert ts.diagonal == pytest.approx(0.02 + grid.nodes)
        assert ts.row(0.5)[-1] == pytest.approx(0.52)

    def test_initial_row(self):
        grid = TimeGrid(horizon=2.0, n_steps=20)
        model = ForwardCurveModel.parametric(0.02, [0.01], slope=0.005)
        ts = evolve_term_structure(model, simulate_brownian(grid, 1, 11), grid)
        assert np.array_equal(ts.initial_curve, model.initial_on(grid.nodes))

    def test_volatility_moves_the_curve(self):
        grid = TimeGrid(horizon=1.0, n_steps=10)
        model = ForwardCurveModel.parametric(0.02, [0.01], drift=DriftShape.ZERO)
        brownian = simulate_brownian(grid, 1, 5)
        ts = evolve_term_structure(model, brownian, grid)
        assert ts.diagonal == pytest.approx(0.02 + 0.01 * brownian.values[:, 0])

    def test_frozen_after_default(self):
        grid = TimeGrid(horizon=1.0, n_steps=10)
        model = ForwardCurveModel.parametric(0.02, [0.01], drift=DriftShape.ZERO)
        ts = evolve_term_structure(model, simulate_brownian(grid, 1, 5), grid, default_time=0.35)
        assert ts.default_time == 0.35
        for i in range(4, 11):
            assert np.array_equal(ts.forward[i, i:], ts.forward[3, i:])

    def test_grid_mismatch(self):
        grid = TimeGrid(horizon=1.0, n_steps=10)
        with pytest.raises(GridMismatchError):
            evolve_term_structure(_frozen_model(), _zero_path(TimeGrid(horizon=1.0, n_steps=20)), grid)
        with pytest.raises(GridMismatchError):
            evolve_term_structure(_frozen_model(), _zero_path(grid, dim=2), grid)


class TestAuditDriftCondition:
    def test_no_arbitrage_model_passes(self):
        grid = TimeGrid(horizon=1.0, n_steps=20)
        model = ForwardCurveModel.parametric(0.02, [0.01], theta_star=[0.2])
        report = audit_drift_condition(model, IntensitySpec.constant(0.03), grid, 1e-8)
        assert report.passed
        assert report.max_residual <= 1e-8
        assert np.all(report.short_residual == 0.0)
        rows = report.to_rows()
        assert len(rows) == 21 * 22 // 2
        assert all(row["pass"] for row in rows)

    def test_vasicek_model_passes_at_quadrature_tolerance(self):
        grid = TimeGrid(horizon=1.0, n_steps=20)
        model = ForwardCurveModel.parametric(0.02, [0.01], kappa=0.5, theta_star=[0.1])
        assert audit_drift_condition(model, IntensitySpec.constant(0.03), grid, 1e-6).passed

    def test_scaled_drift_fails(self):
        grid = TimeGrid(horizon=1.0, n_steps=20)
        model = ForwardCurveModel.parametric(0.02, [0.01]).with_drift_scale(1.1)
        report = audit_drift_condition(model, IntensitySpec.constant(0.03), grid, 1e-8)
        assert not report.passed
        assert report.max_residual == pytest.approx(0.1 * 0.5 * 0.01**2, rel=1e-6)
        assert not all(row["pass"] for row in report.to_rows())

    @pytest.mark.parametrize("lambda_star, passed", [(0.03, True), (0.04, False)])
    def test_explicit_short_rate(self, lambda_star: float, passed: bool):
        grid = TimeGrid(horizon=1.0, n_steps=10)
        model = ForwardCurveModel.parametric(0.05, [0.0], drift=DriftShape.ZERO, short_rate=0.02)
        report = audit_drift_condition(model, IntensitySpec.constant(lambda_star), grid, 1e-8)
        assert report.passed is passed
        assert report.short_residual == pytest.approx(np.full(11, 0.03 - lambda_star), abs=1e-12)


class TestBondPrices:
    def test_zero_recovery(self):
        grid = TimeGrid(horizon=5.0, n_steps=50)
        ts = evolve_term_structure(_frozen_model(), _zero_path(grid), grid)
        assert bond_price_zero_recovery(ts, None, 0.0, 5.0) == pytest.approx(math.exp(-0.1))
        assert bond_price_zero_recovery(ts, 4.0, 1.0, 5.0) == pytest.approx(math.exp(-0.08))
        assert bond_price_zero_recovery(ts, 1.0, 1.0, 5.0) == 0.0
        assert bond_price_zero_recovery(ts, None, 2.0, 2.0) == 1.0
        with pytest.raises(ParameterValidationError):
            bond_price_zero_recovery(ts, None, 3.0, 2.0)

    def test_recovery(self):
        grid = TimeGrid(horizon=6.0, n_steps=60)
        ts = evolve_term_structure(_frozen_model(), _zero_path(grid), grid)
        recovery = recovery_path_from_jumps(grid, [0.05], [0.6])
        assert bond_price_recovery(ts, recovery, 1.0, 6.0) == pytest.approx(0.6 * math.exp(-0.1))
        assert bond_price_recovery(ts, recovery, 0.0, 6.0) == pytest.approx(math.exp(-0.12))

    def test_recovery_grid_mismatch(self):
        grid = TimeGrid(horizon=1.0, n_steps=10)
        ts = evolve_term_structure(_frozen_model(), _zero_path(grid), grid)
        recovery = recovery_path_from_jumps(TimeGrid(horizon=1.0, n_steps=5), [0.5], [0.5])
        with pytest.raises(GridMismatchError):
            bond_price_recovery(ts, recovery, 0.0, 1.0)


class TestIntegralDecomposition:
    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_agrees_to_first_order(self, seed: int):
        grid = TimeGrid(horizon=1.0, n_steps=50)
        model = ForwardCurveModel.parametric(0.02, [0.01], kappa=0.3, theta_star=[0.1])
        ts = evolve_term_structure(model, simulate_brownian(grid, 1, seed), grid)
        check = check_integral_decomposition(model, ts)
        assert check.max_error <= grid.dt

    @pytest.mark.parametrize("index", range(20))
    def test_random_bounded_fields(self, index: int):
        rng = np.random.default_rng(1000 + index)
        dim = 1 + index % 2
        model = ForwardCurveModel.parametric(
            float(rng.uniform(-0.01, 0.08)),
            [float(value) for value in rng.uniform(0.0, 0.05, dim)],
            slope=float(rng.uniform(-0.01, 0.01)),
            kappa=float(rng.uniform(0.1, 2.0)) if index % 3 else None,
            theta_star=[float(value) for value in rng.uniform(-0.5, 0.5, dim)],
        )
        grid = TimeGrid(horizon=2.0, n_steps=40)
        ts = evolve_term_structure(model, simulate_brownian(grid, dim, seed=index), grid)
        check = check_integral_decomposition(model, ts)
        assert check.max_error <= 5.0 * grid.dt

    def test_deterministic_drift(self):
        grid = TimeGrid(horizon=1.0, n_steps=20)
        model = ForwardCurveModel.parametric(0.02, [0.0], drift=DriftShape.CONSTANT, drift_value=1.0)
        ts = evolve_term_structure(model, _zero_path(grid), grid)
        check = check_integral_decomposition(model, ts)
        assert check.direct[0, -1] == pytest.approx(0.02)
        assert check.max_error <= 0.5 * grid.dt + 1e-12
