"""
Analytic bounds on B(t, T) = E[exp(-int_t^T lambda_s ds) | lambda_t = lambda] for the
Jacobi intensity.

The lower bound is Jensen's inequality applied to the mean path. The upper bound uses the
convexity of exp on the band: with x the normalized intensity and w its time-averaged mean,
exp(-int lambda) <= (1 - w) e^{-lambda_lo (T-t)} + w e^{-lambda_hi (T-t)} in expectation.
"""

import logging
import math

import numpy as np

from robust_bond_pricer._base.model import ParameterValidationError
from robust_bond_pricer.pricing import UpperBoundForm
from robust_bond_pricer.stochastic.model import JacobiParams

logger = logging.getLogger(__name__)


def _check_inputs(params: JacobiParams, lambda_: float, t: float, T: float) -> float:
    if not params.in_band(lambda_):
        raise ParameterValidationError(
            "lambda", f"{lambda_} lies outside the band [{params.lambda_lo}, {params.lambda_hi}]"
        )
    if t > T:
        raise ParameterValidationError("t", f"valuation time {t} is after maturity {T}")
    return T - t


def mean_integrated_intensity(params: JacobiParams, lambda_: float, tau: float) -> float:
    """E[int_0^tau lambda_s ds] started from lambda."""
    decay = -math.expm1(-params.alpha * tau) / params.alpha
    return params.lambda_mean * tau + (lambda_ - params.lambda_mean) * decay


def bond_lower_bound(params: JacobiParams, lambda_: float, t: float, T: float) -> float:
    tau = _check_inputs(params, lambda_, t, T)
    return math.exp(-mean_integrated_intensity(params, lambda_, tau))


def upper_bound_weight(params: JacobiParams, lambda_: float, tau: float) -> float:
    """Time average of the normalized mean intensity over [0, tau], in [0, 1]."""
    z = params.normalize(lambda_)
    if tau == 0:
        return float(np.clip(z, 0.0, 1.0))
    ratio = -math.expm1(-params.alpha * tau) / (params.alpha * tau)
    return float(np.clip(params.gamma + (z - params.gamma) * ratio, 0.0, 1.0))


def bond_upper_bound(
    params: JacobiParams,
    lambda_: float,
    t: float,
    T: float,
    form: UpperBoundForm = UpperBoundForm.REPAIRED,
) -> float:
    tau = _check_inputs(params, lambda_, t, T)
    if tau == 0:
        return 1.0
    if form is UpperBoundForm.LITERAL:
        weight = params.gamma + (params.normalize(lambda_) - params.gamma) * -math.expm1(-params.alpha * tau) / params.alpha
        logger.debug(f"Literal upper-bound weight {weight} (not normalized by T - t)")
    else:
        weight = upper_bound_weight(params, lambda_, tau)
    return (1.0 - weight) * math.exp(-params.lambda_lo * tau) + weight * math.exp(-params.lambda_hi * tau)
