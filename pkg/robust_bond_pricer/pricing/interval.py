"""
Assembly of robust price intervals for a deterministic short rate.
"""

import logging
from typing import Callable, Optional, Union

import numpy as np
from scipy import integrate

from robust_bond_pricer._base.model import ParameterValidationError
from robust_bond_pricer.pricing import SeriesStatus, UpperBoundForm
from robust_bond_pricer.pricing.bounds import bond_lower_bound, bond_upper_bound
from robust_bond_pricer.pricing.model import McSettings, PriceInterval, SeriesParams
from robust_bond_pricer.pricing.monte_carlo import mc_price
from robust_bond_pricer.pricing.series import SeriesNotAvailableError, series_price
from robust_bond_pricer.stochastic.model import JacobiParams, RecoveryParams, TimeGrid
from robust_bond_pricer.stochastic.simulate import compensator_band, exponential_compensator

logger = logging.getLogger(__name__)

ShortRate = Union[float, Callable[[np.ndarray], np.ndarray]]

# The series must agree with the Monte Carlo oracle within 3 stderr plus this slack.
SERIES_GATE_SLACK: float = 1e-3


def discount_factor(short_rate: ShortRate, t: float, T: float, steps_per_year: int) -> float:
    """exp(-int_t^T r_s ds) by the trapezoidal rule."""
    if T == t:
        return 1.0
    if not callable(short_rate):
        return float(np.exp(-float(short_rate) * (T - t)))
    grid = TimeGrid.from_steps_per_year(T - t, steps_per_year)
    times = t + grid.nodes
    rates = np.broadcast_to(np.asarray(short_rate(times), dtype=float), times.shape)
    return float(np.exp(-integrate.trapezoid(rates, dx=grid.dt)))


def robust_price_interval(
    params: JacobiParams,
    lambda_: float,
    short_rate: ShortRate,
    t: float,
    T: float,
    sp: SeriesParams,
    mc: McSettings,
    seed: int,
    upper_form: UpperBoundForm = UpperBoundForm.REPAIRED,
    with_series: bool = True,
) -> PriceInterval:
    if t > T:
        raise ParameterValidationError("t", f"valuation time {t} is after maturity {T}")
    start = params.with_start(lambda_)
    logger.debug(f"Price interval on [{t}, {T}] for {start}")
    discount = discount_factor(short_rate, t, T, mc.steps_per_year)
    lower = bond_lower_bound(start, lambda_, t, T)
    upper = bond_upper_bound(start, lambda_, t, T, upper_form)
    estimate = mc_price(
        start,
        t,
        T,
        mc.n_paths,
        seed,
        steps_per_year=mc.steps_per_year,
        chunk_size=mc.chunk_size,
        n_workers=mc.n_workers,
        antithetic=mc.antithetic,
    )

    series: Optional[float] = None
    status = SeriesStatus.SKIPPED
    if with_series:
        try:
            series = series_price(start, lambda_, t, T, sp)
            status = SeriesStatus.OK
        except SeriesNotAvailableError as e:
            logger.warning(f"Series price not available on [{t}, {T}]: {e}")
            status = SeriesStatus.NOT_AVAILABLE
        if series is not None and not estimate.contains(series, slack=SERIES_GATE_SLACK):
            logger.warning(
                f"Series price {series} of order {sp.order} disagrees with Monte Carlo "
                f"{estimate.estimate} +- {estimate.stderr}; dropping it"
            )
            series, status = None, SeriesStatus.FAILED_MC_GATE

    return PriceInterval(
        t=t,
        T=T,
        lower=discount * lower,
        upper=discount * upper,
        series=None if series is None else discount * series,
        mc=discount * estimate.estimate,
        mc_stderr=discount * estimate.stderr,
        discount=discount,
        series_status=status,
        upper_form=upper_form,
    )


def compensator_params(
    recovery: RecoveryParams, alpha: float, beta: float, h_mean: Optional[float] = None, h_0: Optional[float] = None
) -> JacobiParams:
    """
    Jacobi parameters for the compensator h* of the recovery process, valued in the band of
    compensators the recovery law allows; the mean and start default to the exponential compensator.
    """
    h_lo, h_hi = compensator_band(recovery)
    centre = exponential_compensator(recovery)
    return JacobiParams(
        lambda_lo=h_lo,
        lambda_hi=h_hi,
        alpha=alpha,
        beta=beta,
        lambda_mean=centre if h_mean is None else h_mean,
        lambda_0=centre if h_0 is None else h_0,
    )


def recovery_price_interval(
    h_params: JacobiParams,
    h_0: float,
    short_rate: ShortRate,
    t: float,
    T: float,
    sp: SeriesParams,
    mc: McSettings,
    seed: int,
    upper_form: UpperBoundForm = UpperBoundForm.REPAIRED,
    with_series: bool = True,
) -> PriceInterval:
    """Price interval of the fractional-recovery bond: the compensator h* takes the place of lambda*."""
    logger.debug(f"Recovery price interval on [{t}, {T}] with h-band [{h_params.lambda_lo}, {h_params.lambda_hi}]")
    return robust_price_interval(h_params, h_0, short_rate, t, T, sp, mc, seed, upper_form, with_series)
