import logging
from typing import Optional

import numpy as np

from robust_bond_pricer._base.model import ParameterValidationError
from robust_bond_pricer.pricing.model import MIN_MC_PATHS, McEstimate
from robust_bond_pricer.stochastic import RandomStream
from robust_bond_pricer.stochastic.model import (
    DEFAULT_STEPS_PER_YEAR,
    GRID_TOLERANCE,
    JacobiParams,
    TimeGrid,
)
from robust_bond_pricer.stochastic.simulate import integrated_jacobi_from_rng
from robust_bond_pricer.stochastic.streams import (
    DEFAULT_CHUNK_SIZE,
    SampleMoments,
    map_chunks,
)

logger = logging.getLogger(__name__)


def mc_price(
    params: JacobiParams,
    t: float,
    T: float,
    n_paths: int,
    seed: int,
    grid: Optional[TimeGrid] = None,
    steps_per_year: int = DEFAULT_STEPS_PER_YEAR,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    n_workers: int = 1,
    antithetic: bool = False,
) -> McEstimate:
    """
    Sample mean and standard error of exp(-int_t^T lambda_s ds) over Jacobi paths started at
    ``params.lambda_0``; the integral is the trapezoidal rule on ``grid`` (horizon T - t).

    With ``antithetic`` the paths come in mirrored pairs and the pair average is the sampled unit.
    """
    if n_paths < MIN_MC_PATHS:
        raise ParameterValidationError("n_paths", f"must be at least {MIN_MC_PATHS}, got {n_paths}")
    if t > T:
        raise ParameterValidationError("t", f"valuation time {t} is after maturity {T}")
    if T == t:
        return McEstimate(estimate=1.0, stderr=0.0, n_paths=n_paths)
    if grid is None:
        grid = TimeGrid.from_steps_per_year(T - t, steps_per_year)
    elif abs(grid.horizon - (T - t)) > GRID_TOLERANCE * max(1.0, T):
        raise ParameterValidationError("grid", f"horizon {grid.horizon} does not match T - t = {T - t}")
    if antithetic and (n_paths % 2 or chunk_size % 2):
        raise ParameterValidationError("antithetic", "antithetic pairs need even n_paths and chunk_size")
    logger.debug(f"Monte Carlo price over {grid} with {n_paths} paths, seed {seed}, antithetic={antithetic}")

    def chunk(size: int, rng: np.random.Generator) -> SampleMoments:
        payoff = np.exp(-integrated_jacobi_from_rng(params, grid, size, rng, antithetic))
        if antithetic:
            half = size // 2
            payoff = 0.5 * (payoff[:half] + payoff[half:])
        return SampleMoments.from_samples(payoff)

    moments = SampleMoments.combine(map_chunks(chunk, n_paths, seed, RandomStream.PRICING, chunk_size, n_workers))
    return McEstimate(estimate=moments.mean, stderr=moments.stderr, n_paths=n_paths)
