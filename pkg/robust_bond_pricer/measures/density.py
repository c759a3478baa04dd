"""
Density processes of intensity changes against the unit-intensity reference measure.

Under the reference measure the default time is standard exponential. Changing the intensity
to lambda is done by the density

    Z_t = exp(int_0^t (1 - lambda_s) ds)                     for t < tau
    Z_t = lambda_tau * exp(int_0^tau (1 - lambda_s) ds)      for t >= tau
"""

import logging
from typing import Optional, Tuple

import numpy as np
from scipy import integrate

from robust_bond_pricer._base.model import ParameterValidationError
from robust_bond_pricer.measures.model import (
    AdmissibilityReport,
    BrownianInput,
    DensityPath,
    IntensitySpec,
    UnitExpectationReport,
)
from robust_bond_pricer.stochastic import RandomStream
from robust_bond_pricer.stochastic.model import GRID_TOLERANCE, SamplePath, TimeGrid
from robust_bond_pricer.stochastic.simulate import brownian_paths_from_rng
from robust_bond_pricer.stochastic.streams import (
    DEFAULT_CHUNK_SIZE,
    SampleMoments,
    make_generator,
    map_chunks,
)

logger = logging.getLogger(__name__)

MIN_UNIT_EXPECTATION_PATHS: int = 100


def log_density_values(lambda_: IntensitySpec, grid: TimeGrid, values: np.ndarray) -> np.ndarray:
    """
    int_0^{t_i} (1 - lambda_s) ds at every node, exact when the spec carries it.

    A functional intensity is held at its left-node value over each step, so the hazard on
    (t_i, t_{i+1}] is known at t_i and matches the jump factor used at a default in that step.
    Other kinds use the trapezoidal rule.
    """
    if lambda_.log_density is not None:
        return np.array(lambda_.log_density)
    if lambda_.needs_brownian:
        steps = np.cumsum((1.0 - values[..., :-1]) * grid.dt, axis=-1)
        return np.concatenate([np.zeros(values.shape[:-1] + (1,)), steps], axis=-1)
    return integrate.cumulative_trapezoid(1.0 - values, dx=grid.dt, axis=-1, initial=0.0)


def cumulative_of(lambda_: IntensitySpec, grid: TimeGrid, brownian: Optional[BrownianInput] = None) -> np.ndarray:
    """Cumulative hazard int_0^{t_i} lambda_s ds at every node."""
    values = lambda_.node_values(grid, brownian)
    return grid.nodes - log_density_values(lambda_, grid, values)


def _default_node(grid: TimeGrid, default_time: np.ndarray) -> np.ndarray:
    """Index of the node strictly left of tau (node 0 when tau = 0)."""
    return np.clip(np.searchsorted(grid.nodes, default_time, side="left") - 1, 0, grid.n_steps - 1)


def _log_density_at(grid: TimeGrid, log_density: np.ndarray, node: np.ndarray, default_time: np.ndarray) -> np.ndarray:
    if log_density.ndim == 1:
        left, right = log_density[node], log_density[node + 1]
    else:
        rows = np.arange(log_density.shape[0])
        left, right = log_density[rows, node], log_density[rows, node + 1]
    fraction = (default_time - grid.nodes[node]) / grid.dt
    return left + fraction * (right - left)


def _check_default_time(grid: TimeGrid, default_time: Optional[float]) -> Optional[float]:
    if default_time is None or np.isinf(default_time):
        return None
    if default_time < 0 or default_time > grid.horizon + GRID_TOLERANCE:
        raise ParameterValidationError(
            "default_time", f"must lie in [0, {grid.horizon}] or be absent, got {default_time}"
        )
    return float(min(default_time, grid.horizon))


def density_process(
    lambda_: IntensitySpec,
    default_time: Optional[float],
    grid: TimeGrid,
    brownian: Optional[SamplePath] = None,
) -> DensityPath:
    tau = _check_default_time(grid, default_time)
    values = lambda_.node_values(grid, brownian)
    log_density = log_density_values(lambda_, grid, values)
    density = np.exp(log_density)
    if tau is not None:
        node = _default_node(grid, np.array([tau]))
        jump = values[node[0]] * np.exp(_log_density_at(grid, log_density, node, np.array([tau]))[0])
        density[grid.nodes >= tau] = jump
    return DensityPath(grid=grid, values=density, default_time=tau)


def terminal_densities(
    lambda_: IntensitySpec,
    grid: TimeGrid,
    default_times: np.ndarray,
    brownian: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Z_{T*} for a batch of paths; ``np.inf`` in ``default_times`` marks survival past the horizon."""
    default_times = np.asarray(default_times, dtype=float)
    values = lambda_.node_values(grid, brownian)
    log_density = log_density_values(lambda_, grid, values)
    last = log_density[..., -1]
    terminal = np.exp(np.broadcast_to(last, default_times.shape)).copy()
    defaulted = np.nonzero(default_times <= grid.horizon)[0]
    if defaulted.size == 0:
        return terminal
    tau = default_times[defaulted]
    node = _default_node(grid, tau)
    if values.ndim == 1:
        jump_values, path_log_density = values[node], log_density
    else:
        jump_values, path_log_density = values[defaulted, node], log_density[defaulted]
    terminal[defaulted] = jump_values * np.exp(_log_density_at(grid, path_log_density, node, tau))
    return terminal


def mixture_intensity(
    lambda_a: IntensitySpec,
    lambda_b: IntensitySpec,
    mix: float,
    grid: TimeGrid,
    band: Optional[Tuple[float, float]] = None,
    brownian: Optional[SamplePath] = None,
) -> IntensitySpec:
    """
    The intensity whose density is the convex mixture mix * Z^a + (1 - mix) * Z^b.

    Its log density is log(mix * e^{L_a} + (1 - mix) * e^{L_b}) with L = int (1 - lambda).
    Node values are the density-weighted combination w * lambda_a + (1 - w) * lambda_b,
    w = mix * Z^a / (mix * Z^a + (1 - mix) * Z^b), which is the derivative of that log-mix.
    """
    if not 0.0 <= mix <= 1.0:
        raise ParameterValidationError("mix", f"must lie in [0, 1], got {mix}")
    logger.debug(f"Mixing intensities {lambda_a.kind.value} and {lambda_b.kind.value} with weight {mix}")
    values_a = lambda_a.node_values(grid, brownian)
    values_b = lambda_b.node_values(grid, brownian)
    if band is not None:
        lo, hi = band
        for name, values in (("lambda_a", values_a), ("lambda_b", values_b)):
            if np.any(values < lo) or np.any(values > hi):
                raise ParameterValidationError(
                    name, f"values in [{values.min()}, {values.max()}] leave the band [{lo}, {hi}]"
                )
    log_a = log_density_values(lambda_a, grid, values_a)
    log_b = log_density_values(lambda_b, grid, values_b)
    if mix == 1.0:
        values, log_density = values_a, log_a
    elif mix == 0.0:
        values, log_density = values_b, log_b
    else:
        log_density = np.logaddexp(np.log(mix) + log_a, np.log1p(-mix) + log_b)
        weight = np.exp(np.log(mix) + log_a - log_density)
        values = weight * values_a + (1.0 - weight) * values_b
    return IntensitySpec.deterministic(SamplePath(grid=grid, values=values), log_density=log_density)


def in_admissible_set(
    lambda_: IntensitySpec,
    band: Tuple[float, float],
    grid: TimeGrid,
    sample_paths: int,
    seed: int,
) -> AdmissibilityReport:
    """
    Whether lambda stays in the closed band. Exact for constant and deterministic intensities;
    functional ones are evaluated on ``sample_paths`` simulated Brownian histories, so a
    negative answer is conclusive and a positive one is probabilistic.
    """
    lo, hi = band
    histories = 0
    if lambda_.needs_brownian:
        rng = make_generator(seed, RandomStream.ADMISSIBILITY)
        brownian = brownian_paths_from_rng(grid, lambda_.dim, sample_paths, rng)
        values = lambda_.raw_node_values(grid, brownian)
        histories = sample_paths
    else:
        values = lambda_.raw_node_values(grid)
    observed_min, observed_max = float(np.min(values)), float(np.max(values))
    admissible = bool(np.all(np.isfinite(values)) and lo <= observed_min and observed_max <= hi)
    if not admissible:
        logger.info(f"Intensity leaves the band [{lo}, {hi}]: observed range [{observed_min}, {observed_max}]")
    return AdmissibilityReport(
        admissible=admissible, observed_min=observed_min, observed_max=observed_max, histories_checked=histories
    )


def verify_unit_expectation(
    lambda_: IntensitySpec,
    grid: TimeGrid,
    n_paths: int,
    seed: int,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    n_workers: int = 1,
) -> UnitExpectationReport:
    """Monte Carlo mean of Z^lambda_{T*} under the reference measure; passes within 3 standard errors of 1."""
    if n_paths < MIN_UNIT_EXPECTATION_PATHS:
        raise ParameterValidationError("n_paths", f"must be at least {MIN_UNIT_EXPECTATION_PATHS}, got {n_paths}")
    logger.debug(f"Checking E[Z_T] = 1 on {grid} with {n_paths} paths, seed {seed}")

    def chunk(size: int, rng: np.random.Generator) -> SampleMoments:
        brownian = brownian_paths_from_rng(grid, lambda_.dim, size, rng) if lambda_.needs_brownian else None
        thresholds = rng.standard_exponential(size)
        # Unit intensity: the cumulative hazard is t itself.
        default_times = np.where(thresholds <= grid.horizon, thresholds, np.inf)
        return SampleMoments.from_samples(terminal_densities(lambda_, grid, default_times, brownian))

    moments = SampleMoments.combine(
        map_chunks(chunk, n_paths, seed, RandomStream.UNIT_EXPECTATION, chunk_size, n_workers)
    )
    passed = abs(moments.mean - 1.0) <= 3.0 * moments.stderr
    if not passed:
        logger.warning(f"Density mean {moments.mean} is more than 3 standard errors ({moments.stderr}) away from 1")
    return UnitExpectationReport(mean=moments.mean, stderr=moments.stderr, n_paths=n_paths, passed=passed)
