"""
Vectorized field builders for forward-curve models.

Scalar fields map broadcastable ``(s, t)`` arrays to arrays of the broadcast shape; vector
fields return an extra trailing axis of length ``dim``. Time functions take ``t`` only.
"""

from typing import Callable, Sequence

import numpy as np
from scipy import integrate

ScalarField = Callable[[np.ndarray, np.ndarray], np.ndarray]
VectorField = Callable[[np.ndarray, np.ndarray], np.ndarray]
CurveFunction = Callable[[np.ndarray], np.ndarray]
VectorFunction = Callable[[np.ndarray], np.ndarray]

# Nodes of the fixed trapezoidal rule used for bar-b inside the no-arbitrage drift.
DRIFT_QUADRATURE_NODES: int = 65


def evaluate_scalar(field: ScalarField, s: np.ndarray, t: np.ndarray) -> np.ndarray:
    s, t = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
    with np.errstate(all="ignore"):
        values = np.asarray(field(s, t), dtype=float)
    return np.broadcast_to(values, s.shape)


def evaluate_vector(field: VectorField, s: np.ndarray, t: np.ndarray, dim: int) -> np.ndarray:
    s, t = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
    with np.errstate(all="ignore"):
        values = np.asarray(field(s, t), dtype=float)
    if values.shape == s.shape or values.ndim == 0:
        values = values[..., None]
    return np.broadcast_to(values, s.shape + (dim,))


def evaluate_time_vector(function: VectorFunction, t: np.ndarray, dim: int) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    values = np.asarray(function(t), dtype=float)
    if values.shape == t.shape and dim == 1 and values.ndim == t.ndim:
        values = values[..., None]
    return np.broadcast_to(values, t.shape + (dim,))


def flat_curve(level: float) -> CurveFunction:
    return lambda maturities: np.full(np.shape(maturities), float(level))


def linear_curve(level: float, slope: float) -> CurveFunction:
    return lambda maturities: float(level) + float(slope) * np.asarray(maturities, dtype=float)


def constant_volatility(sigma: Sequence[float]) -> VectorField:
    vector = np.asarray(sigma, dtype=float)
    return lambda s, t: np.broadcast_to(vector, np.broadcast(s, t).shape + vector.shape)


def vasicek_volatility(sigma: Sequence[float], kappa: float) -> VectorField:
    """b(s, t) = sigma * exp(-kappa (t - s))."""
    vector = np.asarray(sigma, dtype=float)
    return lambda s, t: vector * np.exp(-float(kappa) * (np.asarray(t) - np.asarray(s)))[..., None]


def constant_drift(value: float) -> ScalarField:
    return lambda s, t: np.full(np.broadcast(s, t).shape, float(value))


def constant_vector(values: Sequence[float]) -> VectorFunction:
    vector = np.asarray(values, dtype=float)
    return lambda t: np.broadcast_to(vector, np.shape(t) + vector.shape)


def constant_rate(value: float) -> CurveFunction:
    return lambda t: np.full(np.shape(t), float(value))


def bar_volatility(volatility: VectorField, s: np.ndarray, t: np.ndarray, dim: int, nodes: int) -> np.ndarray:
    """int_s^t b(s, u) du by a fixed trapezoidal rule on ``nodes`` points, shape (..., dim)."""
    s, t = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
    span = t - s
    u = s[..., None] + span[..., None] * np.linspace(0.0, 1.0, nodes)
    values = evaluate_vector(volatility, s[..., None], u, dim)
    return span[..., None] * integrate.trapezoid(values, dx=1.0 / (nodes - 1), axis=-2)


def no_arbitrage_drift(
    volatility: VectorField,
    theta_star: VectorFunction,
    dim: int,
    scale: float = 1.0,
    nodes: int = DRIFT_QUADRATURE_NODES,
) -> ScalarField:
    """
    a(s, t) = scale * b(s, t) . (bar_b(s, t) - theta*_s).

    With ``scale = 1`` its maturity integral satisfies the drift condition
    bar_a = 1/2 |bar_b|^2 - bar_b . theta*; other scales give perturbed models.
    """

    def drift(s: np.ndarray, t: np.ndarray) -> np.ndarray:
        s, t = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
        local = evaluate_vector(volatility, s, t, dim)
        integrated = bar_volatility(volatility, s, t, dim, nodes)
        premium = evaluate_time_vector(theta_star, s, dim)
        return scale * np.sum(local * (integrated - premium), axis=-1)

    return drift
