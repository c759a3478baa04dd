"""
Seeded simulation of the random primitives.

Each public operation takes a master seed and draws from its own sub-stream (see
:mod:`robust_bond_pricer.stochastic.streams`). The ``*_from_rng`` functions take an explicit
generator and are what the Monte Carlo chunks call.
"""

import logging
import math
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from robust_bond_pricer._base.model import ParameterValidationError
from robust_bond_pricer.stochastic import RandomStream
from robust_bond_pricer.stochastic.model import (
    GRID_TOLERANCE,
    JacobiParams,
    RecoveryParams,
    SamplePath,
    TimeGrid,
)
from robust_bond_pricer.stochastic.streams import make_generator

logger = logging.getLogger(__name__)


def _check_count(name: str, value: int) -> None:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
        raise ParameterValidationError(name, f"must be a positive integer, got {value!r}")


def cumulative_intensity(values: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """Trapezoidal cumulative hazard along the last axis; the first node is 0."""
    values = np.asarray(values, dtype=float)
    if values.shape[-1] != grid.n_steps + 1:
        raise ParameterValidationError(
            "intensity", f"expected {grid.n_steps + 1} nodes on the last axis, got shape {values.shape}"
        )
    return integrate.cumulative_trapezoid(values, dx=grid.dt, axis=-1, initial=0.0)


# Brownian motion


def brownian_paths_from_rng(grid: TimeGrid, dim: int, n_paths: int, rng: np.random.Generator) -> np.ndarray:
    """Brownian paths of shape (n_paths, n_steps + 1, dim) starting at 0."""
    _check_count("dim", dim)
    _check_count("n_paths", n_paths)
    increments = rng.standard_normal((n_paths, grid.n_steps, dim)) * math.sqrt(grid.dt)
    paths = np.zeros((n_paths, grid.n_steps + 1, dim))
    np.cumsum(increments, axis=1, out=paths[:, 1:, :])
    return paths


def simulate_brownian_paths(grid: TimeGrid, dim: int, n_paths: int, seed: int) -> np.ndarray:
    logger.debug(f"Simulating {n_paths} Brownian path(s) of dimension {dim} on {grid} with seed {seed}")
    return brownian_paths_from_rng(grid, dim, n_paths, make_generator(seed, RandomStream.BROWNIAN))


def simulate_brownian(grid: TimeGrid, dim: int, seed: int) -> SamplePath:
    return SamplePath(grid=grid, values=simulate_brownian_paths(grid, dim, 1, seed)[0])


# Jacobi intensity


def jacobi_volatility_squared(x: np.ndarray, params: JacobiParams) -> np.ndarray:
    """sigma^2(x) = beta^2 (x - lambda_lo)(lambda_hi - x) in intensity units."""
    x = np.asarray(x, dtype=float)
    return params.beta**2 * (x - params.lambda_lo) * (params.lambda_hi - x)


def holder_constant(params: JacobiParams) -> float:
    """Lipschitz constant of sigma^2 on the band: beta^2 (lambda_hi - lambda_lo)."""
    return params.beta**2 * params.width


def _gaussian_step(rng: np.random.Generator, n_paths: int, antithetic: bool) -> np.ndarray:
    if not antithetic:
        return rng.standard_normal(n_paths)
    half = rng.standard_normal((n_paths + 1) // 2)
    return np.concatenate([half, -half])[:n_paths]


def _iterate_normalized(
    params: JacobiParams, grid: TimeGrid, n_paths: int, rng: np.random.Generator, antithetic: bool
) -> Iterator[np.ndarray]:
    # One state array, updated in place after each yield; callers copy what they keep.
    alpha, beta = params.alpha, params.beta
    pull, level = alpha * grid.dt, alpha * params.gamma * grid.dt
    scale = beta * math.sqrt(grid.dt)
    x = np.full(n_paths, params.normalize(params.lambda_0))
    spread = np.empty(n_paths)
    yield x
    for _ in range(grid.n_steps):
        if beta > 0:
            np.multiply(x, 1.0 - x, out=spread)
            np.clip(spread, 0.0, None, out=spread)
            np.sqrt(spread, out=spread)
            spread *= scale * _gaussian_step(rng, n_paths, antithetic)
        x *= 1.0 - pull
        x += level
        if beta > 0:
            x += spread
        np.clip(x, 0.0, 1.0, out=x)
        yield x


def iterate_jacobi(
    params: JacobiParams, grid: TimeGrid, n_paths: int, rng: np.random.Generator, antithetic: bool = False
) -> Iterator[np.ndarray]:
    """
    Yield the intensity of every path at each grid node, node 0 first.

    Euler-Maruyama on the normalized state x in [0, 1] with the state clamped back into [0, 1]
    after every step, so the intensity never leaves the band.
    """
    lo, hi, width = params.lambda_lo, params.lambda_hi, params.width
    for x in _iterate_normalized(params, grid, n_paths, rng, antithetic):
        yield np.clip(lo + width * x, lo, hi)


def jacobi_paths_from_rng(
    params: JacobiParams, grid: TimeGrid, n_paths: int, rng: np.random.Generator, antithetic: bool = False
) -> np.ndarray:
    _check_count("n_paths", n_paths)
    return np.stack(list(iterate_jacobi(params, grid, n_paths, rng, antithetic)), axis=1)


def integrated_jacobi_from_rng(
    params: JacobiParams, grid: TimeGrid, n_paths: int, rng: np.random.Generator, antithetic: bool = False
) -> np.ndarray:
    """Trapezoidal integral of the intensity over the whole grid, without storing the paths."""
    _check_count("n_paths", n_paths)
    nodes = _iterate_normalized(params, grid, n_paths, rng, antithetic)
    total = 0.5 * next(nodes)
    for x in nodes:
        total += x
    total -= 0.5 * x
    # In normalized units; lambda = lambda_lo + width * x.
    return params.lambda_lo * grid.horizon + params.width * grid.dt * total


def simulate_jacobi_paths(
    params: JacobiParams, grid: TimeGrid, n_paths: int, seed: int, antithetic: bool = False
) -> np.ndarray:
    logger.debug(f"Simulating {n_paths} Jacobi path(s) with {params} on {grid}, seed {seed}, antithetic={antithetic}")
    return jacobi_paths_from_rng(params, grid, n_paths, make_generator(seed, RandomStream.JACOBI), antithetic)


def simulate_jacobi(params: JacobiParams, grid: TimeGrid, seed: int) -> SamplePath:
    return SamplePath(grid=grid, values=simulate_jacobi_paths(params, grid, 1, seed)[0])


# Default times


def first_passage_times(cumulative: np.ndarray, grid: TimeGrid, thresholds: np.ndarray) -> np.ndarray:
    """
    First time the cumulative hazard reaches each threshold, linearly interpolated inside the
    step; ``np.inf`` where the threshold is never reached on the grid.

    ``cumulative`` is either one curve shared by every threshold or one curve per threshold.
    """
    thresholds = np.asarray(thresholds, dtype=float)
    if cumulative.ndim == 1:
        index = np.searchsorted(cumulative, thresholds, side="left")
        curves = np.broadcast_to(cumulative, (thresholds.size, cumulative.size))
    else:
        index = np.sum(cumulative < thresholds[:, None], axis=1)
        curves = cumulative
    times = np.full(thresholds.size, np.inf)
    hit = np.nonzero(index <= grid.n_steps)[0]
    if hit.size == 0:
        return times
    node = index[hit]
    upper = curves[hit, node]
    lower = curves[hit, np.maximum(node - 1, 0)]
    span = upper - lower
    fraction = np.divide(thresholds[hit] - lower, span, out=np.ones_like(span), where=span > 0)
    times[hit] = np.where(node == 0, 0.0, grid.dt * (node - 1 + np.clip(fraction, 0.0, 1.0)))
    return times


def default_times_from_rng(
    intensity: np.ndarray, grid: TimeGrid, rng: np.random.Generator, n_paths: Optional[int] = None
) -> np.ndarray:
    """Default times for one shared intensity curve (shape (n+1,)) or one curve per path."""
    values = np.asarray(intensity, dtype=float)
    if np.any(values <= 0):
        raise ParameterValidationError("intensity", f"must be strictly positive, got minimum {values.min()}")
    count = values.shape[0] if values.ndim == 2 else (n_paths or 1)
    _check_count("n_paths", count)
    return first_passage_times(cumulative_intensity(values, grid), grid, rng.standard_exponential(count))


def sample_default_times(intensity: SamplePath, n_paths: int, seed: int) -> np.ndarray:
    """Independent default times of one intensity path; ``np.inf`` marks no default before the horizon."""
    if intensity.dim != 1:
        raise ParameterValidationError("intensity", "must be a scalar path")
    logger.debug(f"Sampling {n_paths} default time(s) on {intensity.grid} with seed {seed}")
    return default_times_from_rng(
        intensity.values, intensity.grid, make_generator(seed, RandomStream.DEFAULT_TIME), n_paths
    )


def sample_default_time(intensity: SamplePath, seed: int) -> Optional[float]:
    time = sample_default_times(intensity, 1, seed)[0]
    return None if math.isinf(time) else float(time)


# Recovery


def exponential_compensator(params: RecoveryParams) -> float:
    """Constant h with E[R_t] = exp(-h t)."""
    return params.jump_rate * (1.0 - params.mean_jump_size)


def compensator_band(params: RecoveryParams) -> Tuple[float, float]:
    """Range of compensators over all jump laws supported on [r_lo, r_hi]."""
    return params.jump_rate * (1.0 - params.r_hi), params.jump_rate * (1.0 - params.r_lo)


def _apply_jumps(
    grid: TimeGrid, n_paths: int, owners: np.ndarray, epochs: np.ndarray, sizes: np.ndarray
) -> np.ndarray:
    factors = np.ones((n_paths, grid.n_steps + 1))
    inside = epochs <= grid.horizon + GRID_TOLERANCE
    # A jump at epoch e acts on every node t_i >= e; node 0 always holds the empty product.
    nodes = np.clip(np.ceil(epochs[inside] / grid.dt - GRID_TOLERANCE), 1, grid.n_steps).astype(int)
    np.multiply.at(factors, (owners[inside], nodes), sizes[inside])
    return np.cumprod(factors, axis=1)


def recovery_path_from_jumps(grid: TimeGrid, jump_times: Sequence[float], jump_sizes: Sequence[float]) -> SamplePath:
    """R_t = product of the jump sizes whose epochs are <= t."""
    epochs = np.asarray(jump_times, dtype=float)
    sizes = np.asarray(jump_sizes, dtype=float)
    if epochs.shape != sizes.shape or epochs.ndim != 1:
        raise ParameterValidationError("jump_times", "jump times and sizes must be matching 1-D sequences")
    if np.any(epochs <= 0):
        raise ParameterValidationError("jump_times", "jump epochs must be positive")
    if np.any((sizes <= 0) | (sizes > 1)):
        raise ParameterValidationError("jump_sizes", "jump sizes must lie in (0, 1]")
    values = _apply_jumps(grid, 1, np.zeros(epochs.size, dtype=int), epochs, sizes)
    return SamplePath(grid=grid, values=values[0])


def recovery_paths_from_rng(
    params: RecoveryParams, grid: TimeGrid, n_paths: int, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    """Recovery paths of shape (n_paths, n_steps + 1) and the Poisson jump count of each path."""
    _check_count("n_paths", n_paths)
    counts = rng.poisson(params.jump_rate * grid.horizon, size=n_paths)
    total = int(counts.sum())
    epochs = rng.uniform(0.0, grid.horizon, size=total)
    sizes = rng.uniform(params.r_lo, params.r_hi, size=total)
    owners = np.repeat(np.arange(n_paths), counts)
    return _apply_jumps(grid, n_paths, owners, epochs, sizes), counts


def simulate_recovery_paths(
    params: RecoveryParams, grid: TimeGrid, n_paths: int, seed: int
) -> Tuple[np.ndarray, np.ndarray]:
    logger.debug(f"Simulating {n_paths} recovery path(s) with {params} on {grid}, seed {seed}")
    return recovery_paths_from_rng(params, grid, n_paths, make_generator(seed, RandomStream.RECOVERY))


def simulate_recovery(params: RecoveryParams, grid: TimeGrid, seed: int) -> SamplePath:
    values, _ = simulate_recovery_paths(params, grid, 1, seed)
    return SamplePath(grid=grid, values=values[0])
