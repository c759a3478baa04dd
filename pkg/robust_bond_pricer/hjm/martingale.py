"""
Monte Carlo checks that discounted defaultable bond prices are martingales under the
measure built from the market price of risk.

Under that measure W = W^Q + int theta* dt with W^Q a Brownian motion. The discounted
terminal payoff is evaluated through the integral decomposition

    exp(-int_0^T f(s, s) ds) = P(0, T) exp(-sum bar_a(t_k, T) dt - sum bar_b(t_k, T) . dW_k)

which involves no time discretization error beyond the maturity quadrature. With an explicit
short rate the bond is valued at an interior node s instead,

    exp(-int_0^s (r + lambda*) du) P(s, T),  P(s, T) from the Euler-evolved row f(s, .),

so both a wrong drift and a curve whose f(t, t) strays from r + lambda* move the mean. Brownian
increments are drawn in antithetic pairs and the pair average is the sampled unit.
"""

import logging
import math
from typing import Optional, Tuple, Union

import numpy as np
from scipy import integrate

from robust_bond_pricer._base.model import ParameterValidationError
from robust_bond_pricer.hjm import ShortRateMode
from robust_bond_pricer.hjm.model import ForwardCurveModel, MartingaleReport
from robust_bond_pricer.hjm.term_structure import bar_matrices, field_grids
from robust_bond_pricer.stochastic import RandomStream
from robust_bond_pricer.stochastic.model import JacobiParams, RecoveryParams, TimeGrid
from robust_bond_pricer.stochastic.simulate import (
    exponential_compensator,
    integrated_jacobi_from_rng,
    recovery_paths_from_rng,
)
from robust_bond_pricer.stochastic.streams import (
    DEFAULT_CHUNK_SIZE,
    SampleMoments,
    map_chunks,
)

logger = logging.getLogger(__name__)

# Absolute slack for checks whose payoff is deterministic.
MARTINGALE_ABSOLUTE_TOLERANCE: float = 1e-12

LambdaStar = Union[JacobiParams, float]


def _check_sizes(n_paths: int, chunk_size: int) -> None:
    if n_paths < 2 or n_paths % 2:
        raise ParameterValidationError("n_paths", f"antithetic pairs need an even count >= 2, got {n_paths}")
    if chunk_size < 2 or chunk_size % 2:
        raise ParameterValidationError("chunk_size", f"antithetic pairs need an even chunk size, got {chunk_size}")


def _decomposition_weights(model: ForwardCurveModel, grid: TimeGrid) -> Tuple[float, float, np.ndarray, np.ndarray]:
    """P(0, T), sum bar_a(t_k, T) dt, bar_b(t_k, T) for k < n, and theta*(t_k) for k < n."""
    initial_price = float(np.exp(-integrate.trapezoid(model.initial_on(grid.nodes), dx=grid.dt)))
    abar, bbar = bar_matrices(model, grid)
    drift_sum = float(np.sum(abar[:-1, -1]) * grid.dt)
    return initial_price, drift_sum, bbar[:-1, -1, :], model.theta_on(grid.nodes[:-1])


def _paired_discount_factors(
    model: ForwardCurveModel, grid: TimeGrid, pairs: int, rng: np.random.Generator, weights: tuple
) -> Tuple[np.ndarray, np.ndarray]:
    """exp(-int_0^T f(s, s) ds) for the plus and minus members of each antithetic pair."""
    initial_price, drift_sum, bbar, theta = weights
    shocks = rng.standard_normal((pairs, grid.n_steps, model.dim)) * math.sqrt(grid.dt)
    premium = float(np.sum(bbar * theta) * grid.dt)
    noise = np.einsum("pkd,kd->p", shocks, bbar)
    plus = initial_price * np.exp(-drift_sum - premium - noise)
    minus = initial_price * np.exp(-drift_sum - premium + noise)
    return plus, minus


def _integrated_intensity(
    lambda_star: LambdaStar, grid: TimeGrid, size: int, rng: np.random.Generator
) -> np.ndarray:
    if isinstance(lambda_star, JacobiParams):
        return integrated_jacobi_from_rng(lambda_star, grid, size, rng)
    return np.full(size, float(lambda_star) * grid.horizon)


def _report(moments: SampleMoments, initial_price: float, n_paths: int, what: str) -> MartingaleReport:
    gap = moments.mean - initial_price
    passed = abs(gap) <= 3.0 * moments.stderr + MARTINGALE_ABSOLUTE_TOLERANCE
    if passed:
        logger.info(f"{what}: mean {moments.mean:.10f} vs P(0,T) {initial_price:.10f} within 3 stderr ({moments.stderr:.3e})")
    else:
        logger.warning(f"{what}: gap {gap:.3e} exceeds 3 stderr ({moments.stderr:.3e})")
    return MartingaleReport(
        initial_price=initial_price,
        mean=moments.mean,
        stderr=moments.stderr,
        gap=gap,
        n_paths=n_paths,
        passed=passed,
    )


def _interior_weights(model: ForwardCurveModel, grid: TimeGrid) -> Tuple[int, float, float, np.ndarray]:
    """
    Interior node index i, exp(-int_0^{t_i} r du), the deterministic part of int_{t_i}^T f(t_i, u) du
    under the measure and the loadings sum_j w_j b(t_k, T_j) of the shocks dW^Q_k, k < i.
    """
    interior = grid.n_steps // 2
    if interior == 0:
        raise ParameterValidationError("grid", "the explicit short-rate check needs at least two time steps")
    dt = grid.dt
    nodes = grid.nodes
    weights = np.full(grid.n_steps + 1 - interior, dt)
    weights[[0, -1]] = 0.5 * dt
    drift, volatility = field_grids(model, grid)
    loadings = np.einsum("kjd,j->kd", volatility[:interior, interior:], weights)
    theta = model.theta_on(nodes[:interior])
    level = float(
        model.initial_on(nodes[interior:]) @ weights
        + np.sum(drift[:interior, interior:] @ weights) * dt
        + np.sum(loadings * theta) * dt
    )
    discount = math.exp(-float(integrate.trapezoid(model.short_rate_on(nodes[: interior + 1]), dx=dt)))
    return interior, discount, level, loadings


def martingale_test_discounted_bond(
    model: ForwardCurveModel,
    lambda_star: LambdaStar,
    grid: TimeGrid,
    n_paths: int,
    seed: int,
    sample_defaults: bool = False,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    n_workers: int = 1,
) -> MartingaleReport:
    """
    Compare the expected discounted defaultable bond with P(0, T) at the maturity ``grid.horizon``.

    In derived short-rate mode (r + lambda* = f(t, t)) the payoff 1{tau > T} is discounted from T.
    In explicit mode the bond price P(s, T) of the simulated curve is discounted from the interior
    node s = t_{n // 2} with the model's short rate and lambda*. By default the default indicator is
    replaced by its conditional expectation exp(-int lambda*); ``sample_defaults`` draws tau from
    lambda* instead.
    """
    _check_sizes(n_paths, chunk_size)
    logger.debug(
        f"Martingale test of the discounted bond to T = {grid.horizon} with {n_paths} paths, "
        f"seed {seed}, sample_defaults={sample_defaults}"
    )
    derived = model.short_rate_mode is ShortRateMode.DERIVED
    weights = _decomposition_weights(model, grid)
    hazard_grid = grid
    interior, discount, level, loadings = grid.n_steps, 1.0, 0.0, np.zeros((0, model.dim))
    if not derived:
        interior, discount, level, loadings = _interior_weights(model, grid)
        hazard_grid = TimeGrid(horizon=float(grid.nodes[interior]), n_steps=interior)

    def chunk(size: int, rng: np.random.Generator) -> SampleMoments:
        pairs = size // 2
        if derived:
            plus, minus = _paired_discount_factors(model, grid, pairs, rng, weights)
            if not sample_defaults:
                return SampleMoments.from_samples(0.5 * (plus + minus))
        else:
            shocks = rng.standard_normal((pairs, interior, model.dim)) * math.sqrt(grid.dt)
            noise = np.einsum("pkd,kd->p", shocks, loadings)
            plus = discount * np.exp(-level - noise)
            minus = discount * np.exp(-level + noise)
        hazard_plus = _integrated_intensity(lambda_star, hazard_grid, pairs, rng)
        hazard_minus = _integrated_intensity(lambda_star, hazard_grid, pairs, rng)
        if sample_defaults:
            survive_plus = rng.standard_exponential(pairs) > hazard_plus
            survive_minus = rng.standard_exponential(pairs) > hazard_minus
            if derived:
                # r = f(t, t) - lambda*, so the discount factor gives exp(int lambda*) back.
                plus, minus = plus * np.exp(hazard_plus), minus * np.exp(hazard_minus)
            plus, minus = plus * survive_plus, minus * survive_minus
        else:
            plus, minus = plus * np.exp(-hazard_plus), minus * np.exp(-hazard_minus)
        return SampleMoments.from_samples(0.5 * (plus + minus))

    moments = SampleMoments.combine(map_chunks(chunk, n_paths, seed, RandomStream.MARTINGALE, chunk_size, n_workers))
    return _report(moments, weights[0], n_paths, "Discounted zero-recovery bond")


def martingale_test_recovery_bond(
    model: ForwardCurveModel,
    recovery: RecoveryParams,
    grid: TimeGrid,
    n_paths: int,
    seed: int,
    compensator: Optional[float] = None,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    n_workers: int = 1,
) -> MartingaleReport:
    """
    Compare E[exp(-int_0^T r_s ds) R_T] with P(0, T) under fractional recovery of market value,
    where r = f(t, t) - h* and h* is the exponential compensator of R (or ``compensator``).
    """
    _check_sizes(n_paths, chunk_size)
    if model.short_rate_mode is not ShortRateMode.DERIVED:
        raise ParameterValidationError("short_rate_mode", "the recovery check needs the derived short-rate mode")
    h_star = exponential_compensator(recovery) if compensator is None else float(compensator)
    logger.debug(f"Martingale test of the recovery bond to T = {grid.horizon} with h* = {h_star}, {n_paths} paths")
    weights = _decomposition_weights(model, grid)
    terminal = TimeGrid(horizon=grid.horizon, n_steps=1)

    def chunk(size: int, rng: np.random.Generator) -> SampleMoments:
        pairs = size // 2
        plus, minus = _paired_discount_factors(model, grid, pairs, rng, weights)
        recovery_plus = recovery_paths_from_rng(recovery, terminal, pairs, rng)[0][:, -1]
        recovery_minus = recovery_paths_from_rng(recovery, terminal, pairs, rng)[0][:, -1]
        growth = math.exp(h_star * grid.horizon)
        return SampleMoments.from_samples(0.5 * growth * (plus * recovery_plus + minus * recovery_minus))

    moments = SampleMoments.combine(map_chunks(chunk, n_paths, seed, RandomStream.MARTINGALE, chunk_size, n_workers))
    return _report(moments, weights[0], n_paths, "Discounted recovery bond")
