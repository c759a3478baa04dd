"""
Immutable data models for the random primitives: time grids, parameters of the bounded
intensity diffusion and of the recovery process, and discretized sample paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict

import numpy as np

from robust_bond_pricer._base.model import (
    BaseImmutableModel,
    ParameterValidationError,
    reject_unknown_keys,
)

# Nodes closer than this (in years) are treated as the same date.
GRID_TOLERANCE: float = 1e-9
DEFAULT_STEPS_PER_YEAR: int = 1000


@dataclass(frozen=True)
class TimeGrid:
    """Equidistant grid t_i = i * horizon / n_steps on [0, horizon]."""

    horizon: float
    n_steps: int

    def __post_init__(self) -> None:
        if not (isinstance(self.horizon, (int, float)) and math.isfinite(self.horizon) and self.horizon > 0):
            raise ParameterValidationError("horizon", f"must be a positive finite number of years, got {self.horizon}")
        if isinstance(self.n_steps, bool) or not isinstance(self.n_steps, (int, np.integer)) or self.n_steps < 1:
            raise ParameterValidationError("n_steps", f"must be a positive integer, got {self.n_steps}")

    @classmethod
    def from_steps_per_year(cls, horizon: float, steps_per_year: int = DEFAULT_STEPS_PER_YEAR) -> TimeGrid:
        if steps_per_year < 1:
            raise ParameterValidationError("steps_per_year", f"must be at least 1, got {steps_per_year}")
        return cls(horizon=float(horizon), n_steps=max(1, int(round(horizon * steps_per_year))))

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.n_steps + 1)

    def index_of(self, t: float) -> int:
        """Index of the node equal to ``t``; raises if ``t`` is not a grid node."""
        position = t / self.dt
        index = int(round(position))
        if index < 0 or index > self.n_steps or abs(index * self.dt - t) > GRID_TOLERANCE * max(1.0, self.horizon):
            raise ParameterValidationError("t", f"{t} is not a node of the grid [0, {self.horizon}] / {self.n_steps}")
        return index


@dataclass(frozen=True)
class JacobiParams(BaseImmutableModel):
    """
    Parameters of the bounded intensity diffusion

        d lambda_t = alpha (lambda_mean - lambda_t) dt + beta sqrt((lambda_t - lambda_lo)(lambda_hi - lambda_t)) dW_t

    ``beta`` scales the volatility of the normalized state x = (lambda - lambda_lo) / (lambda_hi - lambda_lo);
    ``beta = 0`` is admitted and gives the deterministic mean-reverting ODE.
    """

    lambda_lo: float
    lambda_hi: float
    alpha: float
    beta: float
    lambda_mean: float
    lambda_0: float

    def __post_init__(self) -> None:
        for name in ("lambda_lo", "lambda_hi", "alpha", "beta", "lambda_mean", "lambda_0"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ParameterValidationError(name, f"must be a finite number, got {value!r}")
        if self.lambda_lo <= 0:
            raise ParameterValidationError("lambda_lo", f"must be positive, got {self.lambda_lo}")
        if self.lambda_lo >= self.lambda_hi:
            raise ParameterValidationError(
                "lambda_lo/lambda_hi ordering", f"need lambda_lo < lambda_hi, got {self.lambda_lo} >= {self.lambda_hi}"
            )
        if not self.lambda_lo < self.lambda_mean < self.lambda_hi:
            raise ParameterValidationError(
                "lambda_mean",
                f"must lie strictly inside ({self.lambda_lo}, {self.lambda_hi}), got {self.lambda_mean}",
            )
        if self.alpha <= 0:
            raise ParameterValidationError("alpha", f"must be positive, got {self.alpha}")
        if self.beta < 0:
            raise ParameterValidationError("beta", f"must be non-negative, got {self.beta}")
        if not self.lambda_lo <= self.lambda_0 <= self.lambda_hi:
            raise ParameterValidationError(
                "lambda_0", f"must lie in [{self.lambda_lo}, {self.lambda_hi}], got {self.lambda_0}"
            )

    @property
    def width(self) -> float:
        return self.lambda_hi - self.lambda_lo

    @property
    def gamma(self) -> float:
        """Normalized mean level (lambda_mean - lambda_lo) / width."""
        return (self.lambda_mean - self.lambda_lo) / self.width

    def normalize(self, value: Any) -> Any:
        return (value - self.lambda_lo) / self.width

    def in_band(self, value: float) -> bool:
        return self.lambda_lo <= value <= self.lambda_hi

    def with_start(self, lambda_0: float) -> JacobiParams:
        return replace(self, lambda_0=float(lambda_0))

    @classmethod
    def serialize(cls, data: Dict[str, Any]) -> JacobiParams:
        if not isinstance(data, dict):
            raise ParameterValidationError("jacobi", "must be a mapping")
        reject_unknown_keys(data, cls.__dataclass_fields__, "jacobi")
        missing = [name for name in cls.__dataclass_fields__ if name not in data]
        if missing:
            raise ParameterValidationError(f"jacobi.{missing[0]}", f"missing required field(s) {missing}")
        return cls(**{name: float(data[name]) for name in cls.__dataclass_fields__})

    def to_dict(self) -> Dict[str, Any]:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


@dataclass(frozen=True)
class RecoveryParams(BaseImmutableModel):
    """Multiplicative recovery: Poisson epochs at ``jump_rate``, sizes uniform on [r_lo, r_hi]."""

    r_lo: float
    r_hi: float
    jump_rate: float = 1.0

    def __post_init__(self) -> None:
        if not 0 < self.r_lo <= self.r_hi <= 1:
            raise ParameterValidationError(
                "r_lo/r_hi ordering", f"need 0 < r_lo <= r_hi <= 1, got r_lo={self.r_lo}, r_hi={self.r_hi}"
            )
        if not self.jump_rate > 0:
            raise ParameterValidationError("jump_rate", f"must be positive, got {self.jump_rate}")

    @property
    def mean_jump_size(self) -> float:
        return 0.5 * (self.r_lo + self.r_hi)

    @classmethod
    def serialize(cls, data: Dict[str, Any]) -> RecoveryParams:
        if not isinstance(data, dict):
            raise ParameterValidationError("recovery", "must be a mapping")
        reject_unknown_keys(data, cls.__dataclass_fields__, "recovery")
        for name in ("r_lo", "r_hi"):
            if name not in data:
                raise ParameterValidationError(f"recovery.{name}", "missing required field")
        return cls(
            r_lo=float(data["r_lo"]),
            r_hi=float(data["r_hi"]),
            jump_rate=float(data.get("jump_rate", 1.0)),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {"r_lo": self.r_lo, "r_hi": self.r_hi, "jump_rate": self.jump_rate}


@dataclass(frozen=True, eq=False)
class SamplePath:
    """A realization on a time grid; ``values`` has shape (n_steps + 1,) or (n_steps + 1, dim)."""

    grid: TimeGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.ndim not in (1, 2) or values.shape[0] != self.grid.n_steps + 1:
            raise ParameterValidationError(
                "values", f"expected {self.grid.n_steps + 1} rows on the grid, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ParameterValidationError("values", "sample path contains non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return 1 if self.values.ndim == 1 else self.values.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.grid.nodes

    def at(self, t: float) -> Any:
        return self.values[self.grid.index_of(t)]
