import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from robust_bond_pricer._base.model import ParameterValidationError
from robust_bond_pricer.pricing.bounds import bond_lower_bound, bond_upper_bound, mean_integrated_intensity
from robust_bond_pricer.pricing.model import SeriesParams
from robust_bond_pricer.pricing.monte_carlo import mc_price
from robust_bond_pricer.pricing.series import (
    SpectralCoefficients,
    divided_difference_exp,
    iterated_integral,
    iterated_integral_by_quadrature,
    series_price,
    series_truncation_path,
)
from robust_bond_pricer.stochastic.model import JacobiParams

_PARAMS = JacobiParams(lambda_lo=0.01, lambda_hi=0.1, alpha=0.5, beta=0.3, lambda_mean=0.04, lambda_0=0.05)
_DETERMINISTIC = JacobiParams(lambda_lo=0.01, lambda_hi=0.1, alpha=0.5, beta=0.0, lambda_mean=0.04, lambda_0=0.05)


class TestDividedDifference:
    def test_two_nodes(self):
        tau = 1.5
        expected = (math.exp(-tau * 2.0) - math.exp(-tau * 0.5)) / 1.5
        assert divided_difference_exp([0.5, 2.0], tau) == pytest.approx(expected)

    def test_confluent_nodes(self):
        tau = 2.0
        assert divided_difference_exp([0.3, 0.3, 0.3], tau) == pytest.approx(tau**2 * math.exp(-0.6) / 2.0)

    def test_order_independent(self):
        assert divided_difference_exp([0.0, 1.0, 0.5], 1.0) == pytest.approx(divided_difference_exp([1.0, 0.0, 0.5], 1.0))


class TestIteratedIntegral:
    def test_single_decay(self):
        assert iterated_integral([2.0], 0.5, 2.0) == pytest.approx((1.0 - math.exp(-3.0)) / 2.0)

    def test_zero_decays(self):
        assert iterated_integral([0.0], 1.0, 3.0) == pytest.approx(2.0)
        assert iterated_integral([0.0, 0.0], 1.0, 3.0) == pytest.approx(2.0)
        assert iterated_integral([0.0, 0.0, 0.0], 0.0, 3.0) == pytest.approx(4.5)

    @pytest.mark.parametrize("y_values, t, T", [([], 0.0, 1.0), ([-0.1], 0.0, 1.0), ([1.0], 2.0, 1.0)])
    def test_invalid(self, y_values: list, t: float, T: float):
        with pytest.raises(ParameterValidationError):
            iterated_integral(y_values, t, T)

    @settings(max_examples=30, deadline=None)
    @given(
        y_values=st.lists(st.floats(min_value=0.0, max_value=3.0), min_size=1, max_size=3),
        tau=st.floats(min_value=0.1, max_value=3.0),
    )
    def test_matches_quadrature(self, y_values: list, tau: float):
        closed = iterated_integral(y_values, 0.0, tau)
        numeric = iterated_integral_by_quadrature(y_values, 0.0, tau)
        assert closed == pytest.approx(numeric, rel=1e-4, abs=1e-7)


class TestSpectralCoefficients:
    def test_beta_parameters(self):
        spectral = SpectralCoefficients.from_params(_PARAMS)
        a, b = spectral.beta_parameters
        assert spectral.nu == pytest.approx(0.045)
        assert a == pytest.approx(2.0 * 0.5 * _PARAMS.gamma / 0.09)
        assert b == pytest.approx(2.0 * 0.5 * (1.0 - _PARAMS.gamma) / 0.09)

    def test_eigenvalues(self):
        spectral = SpectralCoefficients.from_params(_PARAMS)
        assert [spectral.eigenvalue(v) for v in range(3)] == pytest.approx([0.0, 0.5, 1.0 + 0.09])

    def test_first_polynomials(self):
        spectral = SpectralCoefficients.from_params(_PARAMS)
        values = spectral.polynomials(0.7, 3)
        assert values[0] == 1.0
        assert values[1] == pytest.approx(0.7 - _PARAMS.gamma)

    @pytest.mark.parametrize("params", [_PARAMS, _DETERMINISTIC])
    def test_validates(self, params: JacobiParams):
        SpectralCoefficients.from_params(params).validate(14)

    def test_deterministic_recurrence(self):
        b, c = SpectralCoefficients.from_params(_DETERMINISTIC).coefficients(6)
        assert np.allclose(b, _DETERMINISTIC.gamma)
        assert np.all(c == 0.0)

    def test_polynomials_are_orthogonal(self):
        spectral = SpectralCoefficients.from_params(_PARAMS)
        a, b = spectral.beta_parameters
        x = np.linspace(0.0, 1.0, 200_001)[1:-1]
        density = x ** (a - 1.0) * (1.0 - x) ** (b - 1.0)
        density /= integrate.trapezoid(density, x)
        p = np.array([spectral.polynomials(value, 3) for value in x[::100]])
        weights = density[::100]
        inner = integrate.trapezoid(p[:, 1] * p[:, 2] * weights, x[::100])
        assert abs(inner) < 1e-3


class TestSeriesPrice:
    def test_zero_order(self):
        price = series_price(_PARAMS, 0.05, 0.0, 2.0, SeriesParams(order=0))
        assert price == pytest.approx(math.exp(-0.02))

    def test_first_order_is_the_mean_expansion(self):
        tau = 1.5
        path = series_truncation_path(_PARAMS, 0.07, 0.0, tau, SeriesParams(order=3))
        assert len(path) == 4
        excess = mean_integrated_intensity(_PARAMS, 0.07, tau) - _PARAMS.lambda_lo * tau
        assert path[1] == pytest.approx(math.exp(-_PARAMS.lambda_lo * tau) * (1.0 - excess), rel=1e-10)

    def test_deterministic_intensity(self):
        price = series_price(_DETERMINISTIC, 0.07, 0.0, 2.0, SeriesParams(order=6))
        assert price == pytest.approx(bond_lower_bound(_DETERMINISTIC, 0.07, 0.0, 2.0), abs=1e-8)

    def test_within_bounds(self):
        price = series_price(_PARAMS, 0.07, 0.0, 2.0, SeriesParams(order=6))
        assert bond_lower_bound(_PARAMS, 0.07, 0.0, 2.0) <= price <= bond_upper_bound(_PARAMS, 0.07, 0.0, 2.0)

    def test_truncation_converges(self):
        path = series_truncation_path(_PARAMS, 0.07, 0.0, 2.0, SeriesParams(order=6))
        steps = np.abs(np.diff(path))
        assert steps[-1] < steps[1] < steps[0]

    def test_third_order_agrees_with_monte_carlo(self):
        params = JacobiParams(lambda_lo=0.01, lambda_hi=0.1, alpha=1.0, beta=0.3, lambda_mean=0.04, lambda_0=0.04)
        oracle = mc_price(params, 0.0, 1.0, 20_000, seed=5, antithetic=True, n_workers=2)
        path = series_truncation_path(params, 0.04, 0.0, 1.0, SeriesParams(order=3))
        errors = np.abs(np.asarray(path) - oracle.estimate)
        noise = 3.0 * oracle.stderr
        assert errors[3] <= noise + 1e-3
        assert errors[0] > errors[1] > errors[2]
        # Past second order the terms fall below the Monte Carlo noise.
        assert errors[3] <= errors[2] + noise

    def test_cutoff_limits_the_index_paths(self):
        full = series_price(_PARAMS, 0.07, 0.0, 2.0, SeriesParams(order=4, index_cutoff=12))
        clipped = series_price(_PARAMS, 0.07, 0.0, 2.0, SeriesParams(order=4, index_cutoff=1))
        assert clipped == pytest.approx(full, abs=1e-3)

    def test_zero_horizon(self):
        assert series_price(_PARAMS, 0.07, 1.0, 1.0, SeriesParams(order=4)) == pytest.approx(1.0)

    def test_outside_band(self):
        with pytest.raises(ParameterValidationError):
            series_price(_PARAMS, 0.2, 0.0, 1.0, SeriesParams())
