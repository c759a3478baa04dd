"""
Forward-curve evolution, the no-arbitrage drift condition and defaultable bond prices.

All maturity integrals use the trapezoidal rule on the joint time/maturity grid.
"""

import logging
from typing import Optional, Tuple

import numpy as np
from scipy import integrate

from robust_bond_pricer._base.model import ParameterValidationError
from robust_bond_pricer.hjm import ShortRateMode
from robust_bond_pricer.hjm.model import (
    DecompositionCheck,
    DriftAuditReport,
    ForwardCurveModel,
    ModelValidationReport,
    TermStructure,
)
from robust_bond_pricer.measures.model import IntensitySpec
from robust_bond_pricer.stochastic.model import SamplePath, TimeGrid
from robust_bond_pricer.stochastic.simulate import simulate_brownian

logger = logging.getLogger(__name__)

BAR_QUADRATURE_NODES: int = 1025


class GridMismatchError(ValueError):
    """Raised when a path does not live on the grid it is combined with."""


def _check_order(t: float, T: float) -> None:
    if t > T:
        raise ParameterValidationError("t", f"valuation time {t} is after maturity {T}")


def field_grids(model: ForwardCurveModel, grid: TimeGrid) -> Tuple[np.ndarray, np.ndarray]:
    """
    a(t_i, T_j) with shape (n+1, n+1) and b(t_i, T_j) with shape (n+1, n+1, d),
    evaluated for T_j >= t_i and zero below the diagonal.
    """
    nodes = grid.nodes
    size = grid.n_steps + 1
    drift = np.zeros((size, size))
    volatility = np.zeros((size, size, model.dim))
    for i in range(size):
        drift[i, i:] = model.drift_on(nodes[i], nodes[i:])
        volatility[i, i:] = model.volatility_on(nodes[i], nodes[i:])
    return drift, volatility


def bar_matrices(model: ForwardCurveModel, grid: TimeGrid) -> Tuple[np.ndarray, np.ndarray]:
    """bar_a(t_i, T_j) and bar_b(t_i, T_j) by grid trapezoid along each row; zero below the diagonal."""
    drift, volatility = field_grids(model, grid)
    cumulative_drift = integrate.cumulative_trapezoid(drift, dx=grid.dt, axis=1, initial=0.0)
    cumulative_volatility = integrate.cumulative_trapezoid(volatility, dx=grid.dt, axis=1, initial=0.0)
    index = np.arange(grid.n_steps + 1)
    abar = cumulative_drift - cumulative_drift[index, index][:, None]
    bbar = cumulative_volatility - cumulative_volatility[index, index][:, None, :]
    lower = np.tril(np.ones_like(abar, dtype=bool), k=-1)
    abar[lower] = 0.0
    bbar[lower] = 0.0
    return abar, bbar


def validate_model(model: ForwardCurveModel, grid: TimeGrid) -> ModelValidationReport:
    """
    Numeric surrogates of the integrability assumptions: int |f(0, u)| du, the double integral
    of |a| over s <= t, and the supremum of |b| over the grid.
    """
    logger.debug(f"Validating forward-curve model on {grid}")
    initial = model.initial_on(grid.nodes)
    drift, volatility = field_grids(model, grid)
    upper = np.triu(np.ones(drift.shape, dtype=bool))
    with np.errstate(all="ignore"):
        initial_l1 = float(integrate.trapezoid(np.abs(initial), dx=grid.dt))
        inner = integrate.trapezoid(np.where(upper, np.abs(drift), 0.0), dx=grid.dt, axis=0)
        drift_l1 = float(integrate.trapezoid(inner, dx=grid.dt))
        volatility_sup = float(np.max(np.linalg.norm(volatility, axis=-1)[upper]))
    finite = bool(
        np.all(np.isfinite(initial))
        and np.all(np.isfinite(drift[upper]))
        and np.all(np.isfinite(volatility[upper]))
        and np.isfinite(initial_l1)
        and np.isfinite(drift_l1)
        and np.isfinite(volatility_sup)
    )
    if not finite:
        logger.warning(
            f"Model fails its integrability checks: int|f0| = {initial_l1}, int int|a| = {drift_l1}, sup|b| = {volatility_sup}"
        )
    return ModelValidationReport(
        initial_curve_l1=initial_l1, drift_double_integral=drift_l1, volatility_sup=volatility_sup, passed=finite
    )


def bar_integrals(
    model: ForwardCurveModel, t: float, T: float, nodes: int = BAR_QUADRATURE_NODES
) -> Tuple[float, np.ndarray]:
    """(int_t^T a(t, u) du, int_t^T b(t, u) du)."""
    _check_order(t, T)
    if T == t:
        return 0.0, np.zeros(model.dim)
    maturities = np.linspace(t, T, nodes)
    abar = float(integrate.trapezoid(model.drift_on(t, maturities), maturities))
    bbar = integrate.trapezoid(model.volatility_on(t, maturities), maturities, axis=0)
    return abar, np.asarray(bbar, dtype=float)


def drift_from_condition(model: ForwardCurveModel, t: float, T: float) -> float:
    """The value of bar_a(t, T) the drift condition demands: 1/2 |bar_b|^2 - bar_b . theta*_t."""
    _, bbar = bar_integrals(model, t, T)
    theta = model.theta_on(np.asarray(t))
    return float(0.5 * np.dot(bbar, bbar) - np.dot(bbar, theta))


def evolve_term_structure(
    model: ForwardCurveModel,
    brownian: SamplePath,
    grid: TimeGrid,
    default_time: Optional[float] = None,
) -> TermStructure:
    """
    f(t_{i+1}, T_j) = f(t_i, T_j) + a(t_i, T_j) dt + b(t_i, T_j) . dW_i for every T_j >= t_{i+1}.
    """
    if brownian.grid != grid:
        raise GridMismatchError(f"Brownian path lives on {brownian.grid}, the term structure on {grid}")
    if brownian.dim != model.dim:
        raise GridMismatchError(f"Brownian path has dimension {brownian.dim}, the model needs {model.dim}")
    logger.debug(f"Evolving the forward curve on {grid} (default time {default_time})")
    drift, volatility = field_grids(model, grid)
    shocks = np.diff(brownian.values.reshape(grid.n_steps + 1, model.dim), axis=0)
    increments = drift[:-1] * grid.dt + np.einsum("ijd,id->ij", volatility[:-1], shocks)
    forward = model.initial_on(grid.nodes)[None, :] + np.vstack(
        [np.zeros((1, grid.n_steps + 1)), np.cumsum(increments, axis=0)]
    )
    if default_time is not None and default_time <= grid.horizon:
        frozen = max(int(np.searchsorted(grid.nodes, default_time, side="left")) - 1, 0)
        forward[frozen + 1 :] = forward[frozen]
    forward[np.tril(np.ones_like(forward, dtype=bool), k=-1)] = np.nan
    return TermStructure(grid=grid, forward=forward, brownian=brownian, default_time=default_time)


def audit_drift_condition(
    model: ForwardCurveModel,
    lambda_star: IntensitySpec,
    grid: TimeGrid,
    tol: float,
    term_structure: Optional[TermStructure] = None,
    seed: int = 0,
) -> DriftAuditReport:
    """
    Residuals of the short-rate identity f(t, t) = r_t + lambda*_t and of the drift condition.

    In derived short-rate mode r_t is defined by the identity, so its residual is zero.
    Otherwise the diagonal is read from ``term_structure`` or from a curve evolved on a
    Brownian path drawn from ``seed``.
    """
    logger.debug(f"Auditing the drift condition on {grid} at tolerance {tol}")
    nodes = grid.nodes
    abar, bbar = bar_matrices(model, grid)
    theta = model.theta_on(nodes)
    drift_residual = abar - 0.5 * np.sum(bbar**2, axis=-1) + np.einsum("ijd,id->ij", bbar, theta)
    drift_residual[np.tril(np.ones_like(drift_residual, dtype=bool), k=-1)] = np.nan

    if model.short_rate_mode is ShortRateMode.DERIVED:
        short_residual = np.zeros(grid.n_steps + 1)
    else:
        if term_structure is None:
            term_structure = evolve_term_structure(model, simulate_brownian(grid, model.dim, seed), grid)
        brownian = term_structure.brownian if lambda_star.needs_brownian else None
        intensity = lambda_star.node_values(grid, brownian)
        short_residual = term_structure.diagonal - model.short_rate_on(nodes) - intensity

    max_residual = float(max(np.nanmax(np.abs(drift_residual)), np.max(np.abs(short_residual))))
    passed = max_residual <= tol
    if passed:
        logger.info(f"Drift condition holds: max residual {max_residual:.3e} <= {tol}")
    else:
        logger.warning(f"Drift condition violated: max residual {max_residual:.3e} > {tol}")
    return DriftAuditReport(
        grid=grid,
        short_residual=short_residual,
        drift_residual=drift_residual,
        tolerance=tol,
        max_residual=max_residual,
        passed=passed,
    )


def _exponential_factor(ts: TermStructure, t: float, T: float) -> float:
    _check_order(t, T)
    start, end = ts.grid.index_of(t), ts.grid.index_of(T)
    if start == end:
        return 1.0
    return float(np.exp(-integrate.trapezoid(ts.forward[start, start : end + 1], dx=ts.grid.dt)))


def bond_price_zero_recovery(ts: TermStructure, default_time: Optional[float], t: float, T: float) -> float:
    """1{tau > t} exp(-int_t^T f(t, u) du)."""
    _check_order(t, T)
    if default_time is not None and default_time <= t:
        return 0.0
    return _exponential_factor(ts, t, T)


def bond_price_recovery(ts: TermStructure, recovery: SamplePath, t: float, T: float) -> float:
    """R_t exp(-int_t^T f(t, u) du) under fractional recovery of market value."""
    if recovery.grid != ts.grid:
        raise GridMismatchError(f"recovery path lives on {recovery.grid}, the term structure on {ts.grid}")
    _check_order(t, T)
    return float(recovery.at(t)) * _exponential_factor(ts, t, T)


def check_integral_decomposition(model: ForwardCurveModel, ts: TermStructure) -> DecompositionCheck:
    """
    int_t^T f(t, u) du computed directly from row t and through

        int_0^T f(0, u) du + int_0^t bar_a(u, T) du + int_0^t bar_b(u, T) dW_u - int_0^t f(u, u) du

    for every node pair t_i <= T_j. ``ts`` must be an unfrozen evolution of ``model``.
    """
    grid = ts.grid
    dt = grid.dt
    forward = np.nan_to_num(ts.forward, nan=0.0)
    index = np.arange(grid.n_steps + 1)
    cumulative_rows = integrate.cumulative_trapezoid(forward, dx=dt, axis=1, initial=0.0)
    direct = cumulative_rows - cumulative_rows[index, index][:, None]

    abar, bbar = bar_matrices(model, grid)
    shocks = np.diff(ts.brownian.values.reshape(grid.n_steps + 1, model.dim), axis=0)
    zero_row = np.zeros((1, grid.n_steps + 1))
    drift_part = np.vstack([zero_row, np.cumsum(abar[:-1] * dt, axis=0)])
    noise_part = np.vstack([zero_row, np.cumsum(np.einsum("kjd,kd->kj", bbar[:-1], shocks), axis=0)])
    initial_integral = integrate.cumulative_trapezoid(ts.initial_curve, dx=dt, initial=0.0)
    diagonal_integral = integrate.cumulative_trapezoid(ts.diagonal, dx=dt, initial=0.0)
    decomposed = initial_integral[None, :] + drift_part + noise_part - diagonal_integral[:, None]

    lower = np.tril(np.ones_like(direct, dtype=bool), k=-1)
    direct[lower] = np.nan
    decomposed[lower] = np.nan
    max_error = float(np.nanmax(np.abs(direct - decomposed)))
    logger.debug(f"Integral decomposition max error {max_error:.3e} at dt = {dt}")
    return DecompositionCheck(direct=direct, decomposed=decomposed, max_error=max_error)
