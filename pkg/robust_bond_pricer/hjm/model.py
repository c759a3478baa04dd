"""
Forward-curve models and the values produced from them.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from robust_bond_pricer._base.model import (
    BaseImmutableModel,
    ParameterValidationError,
    reject_unknown_keys,
)
from robust_bond_pricer.hjm import CurveShape, DriftShape, ShortRateMode, VolatilityShape
from robust_bond_pricer.hjm.fields import (
    CurveFunction,
    ScalarField,
    VectorField,
    VectorFunction,
    constant_drift,
    constant_rate,
    constant_vector,
    constant_volatility,
    evaluate_scalar,
    evaluate_time_vector,
    evaluate_vector,
    flat_curve,
    linear_curve,
    no_arbitrage_drift,
    vasicek_volatility,
)
from robust_bond_pricer.stochastic.model import SamplePath, TimeGrid

_CURVE_KEYS = ("initial", "volatility", "drift", "theta_star", "short_rate")


def _choice(enum_type: Any, value: Any, where: str) -> Any:
    try:
        return enum_type(value)
    except ValueError:
        accepted = [member.value for member in enum_type]
        raise ParameterValidationError(where, f"unknown value {value!r}; accepted values are {accepted}") from None


def _vector(value: Any, where: str) -> List[float]:
    values = [float(value)] if isinstance(value, (int, float)) else [float(item) for item in value]
    if not values:
        raise ParameterValidationError(where, "must hold at least one component")
    return values


@dataclass(frozen=True, eq=False)
class ForwardCurveModel(BaseImmutableModel):
    """
    HJM state: initial curve f(0, .), drift a(s, t), d-dimensional volatility b(s, t), market
    price of risk theta*(t) and the short-rate convention.

    ``document`` keeps the configuration the model was built from, when there is one.
    """

    initial_curve: CurveFunction = field(repr=False)
    drift: ScalarField = field(repr=False)
    volatility: VectorField = field(repr=False)
    theta_star: VectorFunction = field(repr=False)
    dim: int = 1
    short_rate_mode: ShortRateMode = ShortRateMode.DERIVED
    short_rate: Optional[CurveFunction] = field(default=None, repr=False)
    document: Optional[Dict[str, Any]] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ParameterValidationError("dim", f"must be at least 1, got {self.dim}")
        if self.short_rate_mode is ShortRateMode.EXPLICIT and self.short_rate is None:
            raise ParameterValidationError("short_rate", "explicit short-rate mode needs a short-rate function")

    def initial_on(self, maturities: np.ndarray) -> np.ndarray:
        maturities = np.asarray(maturities, dtype=float)
        return np.broadcast_to(np.asarray(self.initial_curve(maturities), dtype=float), maturities.shape)

    def drift_on(self, s: np.ndarray, t: np.ndarray) -> np.ndarray:
        return evaluate_scalar(self.drift, s, t)

    def volatility_on(self, s: np.ndarray, t: np.ndarray) -> np.ndarray:
        return evaluate_vector(self.volatility, s, t, self.dim)

    def theta_on(self, t: np.ndarray) -> np.ndarray:
        return evaluate_time_vector(self.theta_star, t, self.dim)

    def short_rate_on(self, t: np.ndarray) -> np.ndarray:
        if self.short_rate is None:
            raise ParameterValidationError("short_rate", "derived short-rate mode has no explicit short rate")
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(np.asarray(self.short_rate(t), dtype=float), t.shape)

    def with_drift(self, drift: ScalarField) -> ForwardCurveModel:
        return replace(self, drift=drift, document=None)

    def with_drift_scale(self, factor: float) -> ForwardCurveModel:
        """The same model with its drift field multiplied by ``factor``."""
        base = self.drift
        document = None
        if self.document is not None:
            document = {**self.document, "drift": {**self.document["drift"]}}
            document["drift"]["scale"] = float(document["drift"].get("scale", 1.0)) * factor
        return replace(self, drift=lambda s, t: factor * evaluate_scalar(base, s, t), document=document)

    @classmethod
    def parametric(
        cls,
        level: float,
        sigma: Sequence[float],
        slope: float = 0.0,
        kappa: Optional[float] = None,
        drift: DriftShape = DriftShape.NO_ARBITRAGE,
        drift_value: float = 0.0,
        drift_scale: float = 1.0,
        theta_star: Optional[Sequence[float]] = None,
        short_rate: Optional[float] = None,
    ) -> ForwardCurveModel:
        """Flat/linear initial curve, constant/Vasicek volatility and a chosen drift shape."""
        initial: Dict[str, Any] = (
            {"kind": CurveShape.LINEAR.value, "level": level, "slope": slope}
            if slope
            else {"kind": CurveShape.FLAT.value, "level": level}
        )
        volatility: Dict[str, Any] = {"kind": VolatilityShape.CONSTANT.value, "sigma": list(sigma)}
        if kappa is not None:
            volatility = {"kind": VolatilityShape.VASICEK.value, "sigma": list(sigma), "kappa": kappa}
        drift_block: Dict[str, Any] = {"kind": drift.value}
        if drift is DriftShape.CONSTANT:
            drift_block["value"] = drift_value
        if drift is DriftShape.NO_ARBITRAGE:
            drift_block["scale"] = drift_scale
        short_block: Dict[str, Any] = {"mode": ShortRateMode.DERIVED.value}
        if short_rate is not None:
            short_block = {"mode": ShortRateMode.EXPLICIT.value, "value": short_rate}
        return cls.serialize(
            {
                "initial": initial,
                "volatility": volatility,
                "drift": drift_block,
                "theta_star": list(theta_star) if theta_star is not None else [0.0] * len(sigma),
                "short_rate": short_block,
            }
        )

    @classmethod
    def serialize(cls, data: Dict[str, Any]) -> ForwardCurveModel:
        if not isinstance(data, dict):
            raise ParameterValidationError("curve", "must be a mapping")
        reject_unknown_keys(data, _CURVE_KEYS, "curve")
        for name in ("initial", "volatility"):
            if name not in data:
                raise ParameterValidationError(f"curve.{name}", "missing required block")

        initial_block = dict(data["initial"])
        shape = _choice(CurveShape, initial_block.get("kind", CurveShape.FLAT.value), "curve.initial.kind")
        if shape is CurveShape.FLAT:
            reject_unknown_keys(initial_block, ("kind", "level"), "curve.initial")
            initial_curve = flat_curve(float(initial_block["level"]))
        else:
            reject_unknown_keys(initial_block, ("kind", "level", "slope"), "curve.initial")
            initial_curve = linear_curve(float(initial_block["level"]), float(initial_block["slope"]))
        initial_block["kind"] = shape.value

        volatility_block = dict(data["volatility"])
        vol_shape = _choice(VolatilityShape, volatility_block.get("kind", "constant"), "curve.volatility.kind")
        sigma = _vector(volatility_block["sigma"], "curve.volatility.sigma")
        volatility_block.update(kind=vol_shape.value, sigma=sigma)
        if vol_shape is VolatilityShape.CONSTANT:
            reject_unknown_keys(volatility_block, ("kind", "sigma"), "curve.volatility")
            volatility = constant_volatility(sigma)
        else:
            reject_unknown_keys(volatility_block, ("kind", "sigma", "kappa"), "curve.volatility")
            volatility = vasicek_volatility(sigma, float(volatility_block["kappa"]))
        dim = len(sigma)

        theta = _vector(data.get("theta_star", [0.0] * dim), "curve.theta_star")
        if len(theta) != dim:
            raise ParameterValidationError("curve.theta_star", f"needs {dim} component(s) to match sigma, got {len(theta)}")
        theta_star = constant_vector(theta)

        drift_block = dict(data.get("drift", {"kind": DriftShape.NO_ARBITRAGE.value}))
        drift_shape = _choice(DriftShape, drift_block.get("kind", DriftShape.NO_ARBITRAGE.value), "curve.drift.kind")
        drift_block["kind"] = drift_shape.value
        if drift_shape is DriftShape.ZERO:
            reject_unknown_keys(drift_block, ("kind",), "curve.drift")
            drift = constant_drift(0.0)
        elif drift_shape is DriftShape.CONSTANT:
            reject_unknown_keys(drift_block, ("kind", "value"), "curve.drift")
            drift = constant_drift(float(drift_block["value"]))
        else:
            reject_unknown_keys(drift_block, ("kind", "scale"), "curve.drift")
            drift_block["scale"] = float(drift_block.get("scale", 1.0))
            drift = no_arbitrage_drift(volatility, theta_star, dim, scale=drift_block["scale"])

        short_block = dict(data.get("short_rate", {"mode": ShortRateMode.DERIVED.value}))
        mode = _choice(ShortRateMode, short_block.get("mode", ShortRateMode.DERIVED.value), "curve.short_rate.mode")
        short_block["mode"] = mode.value
        short_rate = None
        if mode is ShortRateMode.EXPLICIT:
            reject_unknown_keys(short_block, ("mode", "value"), "curve.short_rate")
            short_rate = constant_rate(float(short_block["value"]))
        else:
            reject_unknown_keys(short_block, ("mode",), "curve.short_rate")

        return cls(
            initial_curve=initial_curve,
            drift=drift,
            volatility=volatility,
            theta_star=theta_star,
            dim=dim,
            short_rate_mode=mode,
            short_rate=short_rate,
            document={
                "initial": initial_block,
                "volatility": volatility_block,
                "drift": drift_block,
                "theta_star": theta,
                "short_rate": short_block,
            },
        )

    def to_dict(self) -> Dict[str, Any]:
        if self.document is None:
            raise ParameterValidationError("curve", "a model built from custom fields has no document form")
        return self.document

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ForwardCurveModel):
            return False
        if self.document is None or other.document is None:
            return self is other
        return self.document == other.document

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class TermStructure:
    """
    f(t_i, T_j) on one joint grid: row i is the curve seen at t_i, columns j < i are NaN.

    Rows at or after ``default_time`` repeat the last pre-default curve.
    """

    grid: TimeGrid
    forward: np.ndarray = field(repr=False)
    brownian: SamplePath = field(repr=False)
    default_time: Optional[float] = None

    def __post_init__(self) -> None:
        size = self.grid.n_steps + 1
        forward = np.array(self.forward, dtype=float)
        if forward.shape != (size, size):
            raise ParameterValidationError("forward", f"expected a {size}x{size} array, got {forward.shape}")
        upper = np.triu(np.ones((size, size), dtype=bool))
        if not np.all(np.isfinite(forward[upper])):
            raise ParameterValidationError("forward", "forward rates contain non-finite entries")
        forward.setflags(write=False)
        object.__setattr__(self, "forward", forward)

    @property
    def initial_curve(self) -> np.ndarray:
        return self.forward[0]

    @property
    def diagonal(self) -> np.ndarray:
        return np.diagonal(self.forward).copy()

    def row(self, t: float) -> np.ndarray:
        index = self.grid.index_of(t)
        return self.forward[index, index:]

    def to_rows(self) -> List[Dict[str, float]]:
        nodes = self.grid.nodes
        return [
            {"t": float(nodes[i]), "T": float(nodes[j]), "f": float(self.forward[i, j])}
            for i in range(self.grid.n_steps + 1)
            for j in range(i, self.grid.n_steps + 1)
        ]


@dataclass(frozen=True)
class ModelValidationReport:
    initial_curve_l1: float
    drift_double_integral: float
    volatility_sup: float
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "initial_curve_l1": self.initial_curve_l1,
            "drift_double_integral": self.drift_double_integral,
            "volatility_sup": self.volatility_sup,
            "pass": self.passed,
        }


@dataclass(frozen=True, eq=False)
class DriftAuditReport:
    """
    Residuals of the no-arbitrage conditions: ``short_residual[i] = f(t_i, t_i) - r - lambda*``
    and ``drift_residual[i, j] = bar_a - 1/2 |bar_b|^2 + bar_b . theta*`` for t_i <= T_j.
    """

    grid: TimeGrid
    short_residual: np.ndarray = field(repr=False)
    drift_residual: np.ndarray = field(repr=False)
    tolerance: float
    max_residual: float
    passed: bool

    def to_rows(self) -> List[Dict[str, Any]]:
        nodes = self.grid.nodes
        rows: List[Dict[str, Any]] = []
        for i in range(self.grid.n_steps + 1):
            for j in range(i, self.grid.n_steps + 1):
                worst = max(abs(self.short_residual[i]), abs(self.drift_residual[i, j]))
                rows.append(
                    {
                        "t": float(nodes[i]),
                        "T": float(nodes[j]),
                        "residual_short_rate": float(self.short_residual[i]),
                        "residual_drift": float(self.drift_residual[i, j]),
                        "pass": bool(worst <= self.tolerance),
                    }
                )
        return rows


@dataclass(frozen=True, eq=False)
class DecompositionCheck:
    """Both evaluations of int_t^T f(t, u) du for every node pair t_i <= T_j."""

    direct: np.ndarray = field(repr=False)
    decomposed: np.ndarray = field(repr=False)
    max_error: float


@dataclass(frozen=True)
class MartingaleReport:
    initial_price: float
    mean: float
    stderr: float
    gap: float
    n_paths: int
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "initial_price": self.initial_price,
            "mean": self.mean,
            "stderr": self.stderr,
            "gap": self.gap,
            "n_paths": self.n_paths,
            "pass": self.passed,
        }
