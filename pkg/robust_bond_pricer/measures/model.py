"""
Intensity descriptions, density paths and the reports of the measure checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Any, Callable, Dict, Mapping, Optional, Union

import numpy as np

from robust_bond_pricer._base.model import (
    BaseImmutableModel,
    ParameterValidationError,
    integer_field,
    reject_unknown_keys,
)
from robust_bond_pricer.measures import IntensityFamily, IntensityKind
from robust_bond_pricer.stochastic.model import SamplePath, TimeGrid

# rule(t_i, history) -> values of shape (n_paths,); history has shape (n_paths, i + 1, dim)
IntensityRule = Callable[[float, np.ndarray], np.ndarray]
BrownianInput = Union[SamplePath, np.ndarray]


def _indicator_rule(lambda_lo: float, lambda_hi: float, t: float, history: np.ndarray) -> np.ndarray:
    return np.where(history[:, -1, 0] > 0, lambda_hi, lambda_lo)


def _clamped_rule(
    base: float, scale: float, lambda_lo: float, lambda_hi: float, t: float, history: np.ndarray
) -> np.ndarray:
    return np.clip(base + scale * history[:, -1, 0], lambda_lo, lambda_hi)


_FAMILY_FIELDS: Dict[IntensityFamily, tuple] = {
    IntensityFamily.BROWNIAN_INDICATOR: ("lambda_lo", "lambda_hi"),
    IntensityFamily.CLAMPED_BROWNIAN: ("base", "scale", "lambda_lo", "lambda_hi"),
}


@dataclass(frozen=True, eq=False)
class IntensitySpec(BaseImmutableModel):
    """
    An intensity process on a grid: a constant, a deterministic path, or a rule evaluated on the
    Brownian history up to each node.

    Build instances with the ``constant``, ``deterministic``, ``functional`` or family factories.
    A deterministic spec may carry ``log_density``, the exact values of int_0^t (1 - lambda_s) ds at
    the nodes; it then takes precedence over trapezoidal integration of the node values.
    """

    kind: IntensityKind
    value: Optional[float] = None
    path: Optional[SamplePath] = None
    rule: Optional[IntensityRule] = field(default=None, repr=False)
    dim: int = 1
    family: Optional[IntensityFamily] = None
    family_params: Mapping[str, float] = field(default_factory=dict)
    log_density: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.kind is IntensityKind.CONSTANT:
            if self.value is None or not math.isfinite(self.value) or self.value <= 0:
                raise ParameterValidationError("value", f"constant intensity must be positive, got {self.value}")
        elif self.kind is IntensityKind.DETERMINISTIC:
            if self.path is None or self.path.dim != 1:
                raise ParameterValidationError("path", "deterministic intensity needs a scalar sample path")
            if np.any(self.path.values <= 0):
                raise ParameterValidationError("path", "deterministic intensity must be strictly positive")
            if self.log_density is not None:
                log_density = np.array(self.log_density, dtype=float)
                if log_density.shape != self.path.values.shape:
                    raise ParameterValidationError("log_density", "must have one value per grid node")
                log_density.setflags(write=False)
                object.__setattr__(self, "log_density", log_density)
        elif self.rule is None or self.dim < 1:
            raise ParameterValidationError("rule", "functional intensity needs a rule and a Brownian dimension >= 1")

    @classmethod
    def constant(cls, value: float) -> IntensitySpec:
        return cls(kind=IntensityKind.CONSTANT, value=float(value))

    @classmethod
    def deterministic(cls, path: SamplePath, log_density: Optional[np.ndarray] = None) -> IntensitySpec:
        return cls(kind=IntensityKind.DETERMINISTIC, path=path, log_density=log_density)

    @classmethod
    def functional(cls, rule: IntensityRule, dim: int = 1) -> IntensitySpec:
        return cls(kind=IntensityKind.FUNCTIONAL, rule=rule, dim=dim)

    @classmethod
    def brownian_indicator(cls, lambda_lo: float, lambda_hi: float) -> IntensitySpec:
        """lambda_lo + (lambda_hi - lambda_lo) * 1{W^1_t > 0}."""
        return cls._family(IntensityFamily.BROWNIAN_INDICATOR, lambda_lo=lambda_lo, lambda_hi=lambda_hi)

    @classmethod
    def clamped_brownian(cls, base: float, scale: float, lambda_lo: float, lambda_hi: float) -> IntensitySpec:
        """clamp(base + scale * W^1_t, [lambda_lo, lambda_hi])."""
        return cls._family(
            IntensityFamily.CLAMPED_BROWNIAN, base=base, scale=scale, lambda_lo=lambda_lo, lambda_hi=lambda_hi
        )

    @classmethod
    def _family(cls, family: IntensityFamily, **params: float) -> IntensitySpec:
        params = {name: float(value) for name, value in params.items()}
        if not 0 < params["lambda_lo"] <= params["lambda_hi"]:
            raise ParameterValidationError(
                "lambda_lo/lambda_hi ordering",
                f"need 0 < lambda_lo <= lambda_hi, got {params['lambda_lo']} and {params['lambda_hi']}",
            )
        if family is IntensityFamily.BROWNIAN_INDICATOR:
            rule: IntensityRule = partial(_indicator_rule, params["lambda_lo"], params["lambda_hi"])
        else:
            rule = partial(_clamped_rule, params["base"], params["scale"], params["lambda_lo"], params["lambda_hi"])
        return cls(kind=IntensityKind.FUNCTIONAL, rule=rule, dim=1, family=family, family_params=params)

    @property
    def needs_brownian(self) -> bool:
        return self.kind is IntensityKind.FUNCTIONAL

    def raw_node_values(self, grid: TimeGrid, brownian: Optional[BrownianInput] = None) -> np.ndarray:
        """
        Evaluate the intensity at every node without the positivity check.

        Returns shape (n_steps + 1,) for constant and deterministic kinds and for a single
        Brownian SamplePath, otherwise (n_paths, n_steps + 1).
        """
        if self.kind is IntensityKind.CONSTANT:
            assert self.value is not None
            return np.full(grid.n_steps + 1, self.value)
        if self.kind is IntensityKind.DETERMINISTIC:
            assert self.path is not None
            if self.path.grid != grid:
                raise ParameterValidationError("grid", f"intensity path lives on {self.path.grid}, not on {grid}")
            return np.array(self.path.values)
        return self._evaluate_rule(grid, brownian)

    def _evaluate_rule(self, grid: TimeGrid, brownian: Optional[BrownianInput]) -> np.ndarray:
        if brownian is None:
            raise ParameterValidationError("brownian", "functional intensity needs a Brownian history")
        single = isinstance(brownian, SamplePath)
        if isinstance(brownian, SamplePath):
            if brownian.grid != grid:
                raise ParameterValidationError("brownian", f"Brownian path lives on {brownian.grid}, not on {grid}")
            histories = brownian.values.reshape(1, grid.n_steps + 1, -1)
        else:
            histories = np.asarray(brownian, dtype=float)
        if histories.ndim != 3 or histories.shape[1] != grid.n_steps + 1 or histories.shape[2] < self.dim:
            raise ParameterValidationError(
                "brownian", f"expected histories of shape (n_paths, {grid.n_steps + 1}, >={self.dim})"
            )
        assert self.rule is not None
        n_paths = histories.shape[0]
        values = np.empty((n_paths, grid.n_steps + 1))
        for index, t in enumerate(grid.nodes):
            values[:, index] = np.broadcast_to(self.rule(float(t), histories[:, : index + 1, :]), (n_paths,))
        return values[0] if single else values

    def node_values(self, grid: TimeGrid, brownian: Optional[BrownianInput] = None) -> np.ndarray:
        values = self.raw_node_values(grid, brownian)
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise ParameterValidationError("lambda", "intensity evaluations must be finite and strictly positive")
        return values

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IntensitySpec) or self.kind is not other.kind:
            return False
        if self.kind is IntensityKind.CONSTANT:
            return self.value == other.value
        if self.kind is IntensityKind.DETERMINISTIC:
            assert self.path is not None and other.path is not None
            return self.path.grid == other.path.grid and np.array_equal(self.path.values, other.path.values)
        if self.family is not None:
            return self.family is other.family and dict(self.family_params) == dict(other.family_params)
        return self.rule is other.rule and self.dim == other.dim

    __hash__ = None  # type: ignore[assignment]

    @classmethod
    def serialize(cls, data: Dict[str, Any]) -> IntensitySpec:
        if not isinstance(data, dict) or "kind" not in data:
            raise ParameterValidationError("intensity.kind", "intensity must be a mapping with a 'kind'")
        kind = data["kind"]
        if kind == IntensityKind.CONSTANT.value:
            reject_unknown_keys(data, ("kind", "value"), "intensity")
            return cls.constant(float(data["value"]))
        if kind == IntensityKind.DETERMINISTIC.value:
            reject_unknown_keys(data, ("kind", "horizon", "n_steps", "values"), "intensity")
            grid = TimeGrid(horizon=float(data["horizon"]), n_steps=integer_field(data, "n_steps", 0, "intensity"))
            return cls.deterministic(SamplePath(grid=grid, values=np.asarray(data["values"], dtype=float)))
        families = {family.value: family for family in IntensityFamily}
        if kind not in families:
            accepted = [IntensityKind.CONSTANT.value, IntensityKind.DETERMINISTIC.value, *families]
            raise ParameterValidationError("intensity.kind", f"unknown kind {kind!r}; accepted kinds are {accepted}")
        family = families[kind]
        names = _FAMILY_FIELDS[family]
        reject_unknown_keys(data, ("kind", *names), "intensity")
        missing = [name for name in names if name not in data]
        if missing:
            raise ParameterValidationError(f"intensity.{missing[0]}", f"missing required field(s) {missing}")
        return cls._family(family, **{name: float(data[name]) for name in names})

    def to_dict(self) -> Dict[str, Any]:
        if self.kind is IntensityKind.CONSTANT:
            return {"kind": self.kind.value, "value": self.value}
        if self.kind is IntensityKind.DETERMINISTIC:
            assert self.path is not None
            return {
                "kind": self.kind.value,
                "horizon": self.path.grid.horizon,
                "n_steps": self.path.grid.n_steps,
                "values": self.path.values.tolist(),
            }
        if self.family is None:
            raise ParameterValidationError("intensity", "a custom functional rule has no document form")
        return {"kind": self.family.value, **self.family_params}


@dataclass(frozen=True, eq=False)
class DensityPath:
    """Z^lambda on a grid; constant from the first node at or after the default time."""

    grid: TimeGrid
    values: np.ndarray = field(repr=False)
    default_time: Optional[float] = None

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n_steps + 1,):
            raise ParameterValidationError("values", f"expected {self.grid.n_steps + 1} node values")
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise ParameterValidationError("values", "density values must be finite and positive")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def terminal(self) -> float:
        return float(self.values[-1])


@dataclass(frozen=True)
class AdmissibilityReport:
    admissible: bool
    observed_min: float
    observed_max: float
    histories_checked: int

    def __bool__(self) -> bool:
        return self.admissible

    def to_dict(self) -> Dict[str, Any]:
        return {
            "admissible": self.admissible,
            "observed_min": self.observed_min,
            "observed_max": self.observed_max,
            "histories_checked": self.histories_checked,
        }


@dataclass(frozen=True)
class UnitExpectationReport:
    mean: float
    stderr: float
    n_paths: int
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return {"mean": self.mean, "stderr": self.stderr, "n_paths": self.n_paths, "pass": self.passed}
