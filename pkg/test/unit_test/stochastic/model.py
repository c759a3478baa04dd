from dataclasses import FrozenInstanceError

import numpy as np
import pytest

from robust_bond_pricer._base.model import ParameterValidationError
from robust_bond_pricer.stochastic.model import (
    JacobiParams,
    RecoveryParams,
    SamplePath,
    TimeGrid,
)

_JACOBI = {"lambda_lo": 0.01, "lambda_hi": 0.1, "alpha": 0.5, "beta": 0.3, "lambda_mean": 0.04, "lambda_0": 0.05}


class TestTimeGrid:
    def test_nodes(self):
        grid = TimeGrid(horizon=2.0, n_steps=4)
        assert grid.dt == 0.5
        assert grid.nodes.tolist() == [0.0, 0.5, 1.0, 1.5, 2.0]

    @pytest.mark.parametrize("horizon, n_steps", [(0.0, 10), (-1.0, 10), (float("inf"), 10), (1.0, 0), (1.0, -3)])
    def test_invalid(self, horizon: float, n_steps: int):
        with pytest.raises(ParameterValidationError):
            TimeGrid(horizon=horizon, n_steps=n_steps)

    def test_from_steps_per_year(self):
        grid = TimeGrid.from_steps_per_year(2.5, 1000)
        assert grid.n_steps == 2500
        assert TimeGrid.from_steps_per_year(1e-5, 10).n_steps == 1

    def test_index_of(self):
        grid = TimeGrid(horizon=1.0, n_steps=10)
        assert grid.index_of(0.3) == 3
        assert grid.index_of(1.0) == 10
        with pytest.raises(ParameterValidationError):
            grid.index_of(0.35)
        with pytest.raises(ParameterValidationError):
            grid.index_of(1.5)


class TestJacobiParams:
    def test_derived_quantities(self):
        params = JacobiParams(**_JACOBI)
        assert params.width == pytest.approx(0.09)
        assert params.gamma == pytest.approx(1.0 / 3.0)
        assert params.normalize(0.1) == pytest.approx(1.0)
        assert params.in_band(0.01) and not params.in_band(0.2)
        assert params.with_start(0.02).lambda_0 == 0.02

    def test_zero_beta_is_admitted(self):
        assert JacobiParams(**{**_JACOBI, "beta": 0.0}).beta == 0.0

    @pytest.mark.parametrize(
        "override, field",
        [
            ({"lambda_lo": 0.2}, "lambda_lo/lambda_hi ordering"),
            ({"lambda_lo": 0.0}, "lambda_lo"),
            ({"lambda_mean": 0.1}, "lambda_mean"),
            ({"alpha": 0.0}, "alpha"),
            ({"beta": -0.1}, "beta"),
            ({"lambda_0": 0.2}, "lambda_0"),
            ({"alpha": float("nan")}, "alpha"),
        ],
    )
    def test_invalid(self, override: dict, field: str):
        with pytest.raises(ParameterValidationError) as e:
            JacobiParams(**{**_JACOBI, **override})
        assert e.value.field == field
        assert field in str(e.value)

    def test_serialize(self):
        params = JacobiParams.serialize(dict(_JACOBI))
        assert params == JacobiParams(**_JACOBI)
        assert JacobiParams.serialize(params.to_dict()) == params

    def test_serialize_rejects_unknown_and_missing_keys(self):
        with pytest.raises(ParameterValidationError, match="accepted keys"):
            JacobiParams.serialize({**_JACOBI, "kappa": 1.0})
        data = dict(_JACOBI)
        data.pop("alpha")
        with pytest.raises(ParameterValidationError) as e:
            JacobiParams.serialize(data)
        assert e.value.field == "jacobi.alpha"

    def test_frozen(self):
        params = JacobiParams(**_JACOBI)
        with pytest.raises(FrozenInstanceError):
            params.alpha = 1.0  # type: ignore[misc]


class TestRecoveryParams:
    def test_mean_jump_size(self):
        params = RecoveryParams(r_lo=0.4, r_hi=0.8)
        assert params.jump_rate == 1.0
        assert params.mean_jump_size == pytest.approx(0.6)

    @pytest.mark.parametrize("r_lo, r_hi", [(0.0, 0.5), (0.6, 0.5), (0.5, 1.2)])
    def test_invalid_bounds(self, r_lo: float, r_hi: float):
        with pytest.raises(ParameterValidationError, match="r_lo/r_hi ordering"):
            RecoveryParams(r_lo=r_lo, r_hi=r_hi)

    def test_invalid_jump_rate(self):
        with pytest.raises(ParameterValidationError):
            RecoveryParams(r_lo=0.5, r_hi=0.6, jump_rate=0.0)

    def test_serialize(self):
        params = RecoveryParams.serialize({"r_lo": 0.5, "r_hi": 0.9, "jump_rate": 2})
        assert params == RecoveryParams(r_lo=0.5, r_hi=0.9, jump_rate=2.0)
        assert RecoveryParams.serialize(params.to_dict()) == params


class TestSamplePath:
    def test_scalar_and_vector(self):
        grid = TimeGrid(horizon=1.0, n_steps=2)
        scalar = SamplePath(grid=grid, values=[1.0, 2.0, 3.0])
        assert scalar.dim == 1
        assert scalar.at(0.5) == 2.0
        vector = SamplePath(grid=grid, values=np.zeros((3, 2)))
        assert vector.dim == 2
        assert vector.times.tolist() == [0.0, 0.5, 1.0]

    def test_values_are_read_only(self):
        path = SamplePath(grid=TimeGrid(horizon=1.0, n_steps=1), values=[1.0, 2.0])
        with pytest.raises(ValueError):
            path.values[0] = 5.0

    @pytest.mark.parametrize("values", [[1.0, 2.0], [1.0, float("nan"), 2.0]])
    def test_invalid(self, values: list):
        with pytest.raises(ParameterValidationError):
            SamplePath(grid=TimeGrid(horizon=1.0, n_steps=2), values=values)
