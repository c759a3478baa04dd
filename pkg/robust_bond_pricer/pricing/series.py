"""
Series expansion of B(t, T) for the Jacobi intensity.

With x = (lambda - lambda_lo) / (lambda_hi - lambda_lo) the generator of x is
L = alpha (gamma - x) d/dx + nu x (1 - x) d^2/dx^2, nu = beta^2 / 2. Its eigenfunctions are the
monic polynomials p_v orthogonal for the Beta(a, b) law, a = 2 alpha gamma / beta^2 and
b = 2 alpha (1 - gamma) / beta^2, with eigenvalues y_v = alpha v + nu v (v - 1), and

    x p_v = p_{v+1} + B_v p_v + C_v p_{v-1}.

Expanding exp(-delta int x) around the semigroup of L gives

    B(t, T) = e^{-lambda_lo tau} [1 + sum_n (-delta)^n sum_{v in V^n} p_{v_n}(z) q(v) I^n(y_{v_n}, ..., y_{v_1})]

over index paths v_0 = 0, |v_j - v_{j-1}| <= 1, where q(v) multiplies the transition
coefficients 1, B_v, C_v of the steps and I^n is the simplex integral of the eigen-decays.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy import integrate, linalg, special

from robust_bond_pricer._base.model import ParameterValidationError
from robust_bond_pricer.pricing.model import SeriesParams
from robust_bond_pricer.stochastic.model import JacobiParams

logger = logging.getLogger(__name__)

# Relative agreement required between recurrence-based and Gamma-function norms.
NORM_TOLERANCE: float = 1e-8
# Absolute agreement required of the deterministic recurrence coefficients.
DETERMINISTIC_TOLERANCE: float = 1e-12


class SeriesNotAvailableError(RuntimeError):
    """Raised when the spectral coefficients cannot be validated for the given parameters."""


@dataclass(frozen=True)
class SpectralCoefficients:
    """Spectral data of the normalized Jacobi generator, derived once per parameter set."""

    alpha: float
    nu: float
    gamma: float

    @classmethod
    def from_params(cls, params: JacobiParams) -> "SpectralCoefficients":
        return cls(alpha=params.alpha, nu=0.5 * params.beta**2, gamma=params.gamma)

    @property
    def beta_parameters(self) -> Tuple[float, float]:
        """(a, b) of the stationary Beta law; infinite in the deterministic case."""
        if self.nu == 0:
            return math.inf, math.inf
        return self.alpha * self.gamma / self.nu, self.alpha * (1.0 - self.gamma) / self.nu

    def eigenvalue(self, v: int) -> float:
        return self.alpha * v + self.nu * v * (v - 1)

    def recurrence(self, n: int) -> Tuple[float, float]:
        """(B_n, C_n) of x p_n = p_{n+1} + B_n p_n + C_n p_{n-1}; C_0 = 0."""
        alpha, nu, gamma = self.alpha, self.nu, self.gamma
        if n == 0:
            return gamma, 0.0
        b_n = 0.5 * (1.0 + (2.0 * gamma - 1.0) * alpha * (alpha - 2.0 * nu) / ((alpha + 2.0 * nu * (n - 1)) * (alpha + 2.0 * nu * n)))
        if n == 1:
            c_n = nu * gamma * (1.0 - gamma) / (alpha + nu)
        else:
            numerator = n * nu * (alpha * (1.0 - gamma) + nu * (n - 1)) * (alpha * gamma + nu * (n - 1)) * (alpha + nu * (n - 2))
            denominator = (alpha + 2.0 * nu * (n - 1)) ** 2 * (alpha + nu * (2 * n - 1)) * (alpha + nu * (2 * n - 3))
            c_n = numerator / denominator
        return b_n, c_n

    def coefficients(self, size: int) -> Tuple[np.ndarray, np.ndarray]:
        """Arrays B_0..B_{size-1} and C_0..C_{size-1}."""
        pairs = [self.recurrence(n) for n in range(size)]
        return np.array([pair[0] for pair in pairs]), np.array([pair[1] for pair in pairs])

    def polynomials(self, z: float, size: int) -> np.ndarray:
        """p_0(z) .. p_{size-1}(z) by the three-term recurrence."""
        b, c = self.coefficients(size)
        values = np.zeros(size)
        values[0] = 1.0
        if size > 1:
            values[1] = z - b[0]
        for n in range(1, size - 1):
            values[n + 1] = (z - b[n]) * values[n] - c[n] * values[n - 1]
        return values

    def log_norms(self, size: int) -> np.ndarray:
        """log of |p_n|^2 under Beta(a, b) for n < size, from the Gamma-function closed form."""
        a, b = self.beta_parameters
        n = np.arange(size, dtype=float)
        log_norms = (
            special.gammaln(n + a)
            + special.gammaln(n + b)
            + special.gammaln(n + 1.0)
            + special.gammaln(n + a + b - 1.0)
            - special.gammaln(2.0 * n + a + b)
            - special.gammaln(2.0 * n + a + b - 1.0)
            - special.betaln(a, b)
        )
        log_norms[0] = 0.0
        return log_norms

    def validate(self, size: int) -> None:
        """
        Cross-check the recurrence against the Gamma-function norms, |p_n|^2 = C_1 ... C_n.

        Raises SeriesNotAvailableError when they disagree or the coefficients are not finite.
        """
        b, c = self.coefficients(size)
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise SeriesNotAvailableError(f"non-finite recurrence coefficients for {self}")
        if self.nu == 0:
            if np.any(c != 0) or not np.allclose(b, self.gamma, rtol=0.0, atol=DETERMINISTIC_TOLERANCE):
                raise SeriesNotAvailableError(f"deterministic recurrence is inconsistent for {self}")
            return
        if np.any(c[1:] <= 0):
            raise SeriesNotAvailableError(f"recurrence coefficients C_n must be positive for {self}")
        from_recurrence = np.concatenate([[0.0], np.cumsum(np.log(c[1:]))])
        from_gamma = self.log_norms(size)
        mismatch = np.abs(from_recurrence - from_gamma)
        a, b_param = self.beta_parameters
        # gammaln terms of size ~ a + b cancel; allow for their rounding
        rounding = 1e-13 * (np.abs(special.gammaln(2.0 * np.arange(size) + a + b_param)) + abs(special.betaln(a, b_param)))
        allowed = NORM_TOLERANCE * np.maximum(1.0, np.abs(from_gamma)) + rounding
        if np.any(~np.isfinite(from_gamma)) or np.any(mismatch > allowed):
            worst = int(np.nanargmax(mismatch))
            raise SeriesNotAvailableError(
                f"spectral norms disagree at index {worst}: recurrence {from_recurrence[worst]}, Gamma form {from_gamma[worst]}"
            )


def divided_difference_exp(nodes: Sequence[float], tau: float) -> float:
    """
    f[y_0, ..., y_n] for f(y) = exp(-tau y).

    Read off the corner of exp(-tau A), A upper bidiagonal with the nodes on its diagonal and
    ones above it, which stays accurate for repeated and nearly repeated nodes.
    """
    y = np.asarray(nodes, dtype=float)
    if y.size == 1:
        return float(np.exp(-tau * y[0]))
    matrix = np.diag(y) + np.diag(np.ones(y.size - 1), k=1)
    return float(linalg.expm(-tau * matrix)[0, -1])


def iterated_integral(y_values: Sequence[float], t: float, T: float) -> float:
    """
    I^n(y_n, ..., y_1) = int over t = s_{n+1} <= s_n <= ... <= s_1 <= T of
    exp(-sum_j y_j (s_j - s_{j+1})) ds_1 ... ds_n, equal to (-1)^n f[0, y_1, ..., y_n]
    with f(y) = exp(-(T - t) y).
    """
    y = [float(value) for value in y_values]
    if not y:
        raise ParameterValidationError("y_values", "need at least one decay rate")
    if any(value < 0 for value in y):
        raise ParameterValidationError("y_values", f"decay rates must be non-negative, got {y}")
    if t > T:
        raise ParameterValidationError("t", f"valuation time {t} is after maturity {T}")
    return (-1) ** len(y) * divided_difference_exp([0.0, *y], T - t)


def iterated_integral_by_quadrature(y_values: Sequence[float], t: float, T: float, nodes: int = 2001) -> float:
    """Nested trapezoidal evaluation of the same integral, innermost variable s_1 first."""
    grid = np.linspace(t, T, nodes)
    inner = np.ones(nodes)
    for y in y_values:
        weighted = np.exp(-y * (grid - t)) * inner
        # int_s^T e^{-y (u - s)} g(u) du for every s on the grid
        tail = integrate.cumulative_trapezoid(weighted[::-1], grid[::-1], initial=0.0)[::-1] * -1.0
        inner = np.exp(y * (grid - t)) * tail
    return float(inner[0])


def _index_paths(order: int, cutoff: int) -> List[Tuple[int, ...]]:
    """Index paths (v_1, ..., v_n) from v_0 = 0 with unit steps, kept inside [0, cutoff]."""
    paths = []
    for steps in itertools.product((1, 0, -1), repeat=order):
        level, path, inside = 0, [], True
        for step in steps:
            level += step
            if level < 0 or level > cutoff:
                inside = False
                break
            path.append(level)
        if inside:
            paths.append(tuple(path))
    return paths


def _series_terms(params: JacobiParams, lambda_: float, t: float, T: float, sp: SeriesParams) -> np.ndarray:
    """Order-n contributions inside the bracket, n = 0..J."""
    if not params.in_band(lambda_):
        raise ParameterValidationError(
            "lambda", f"{lambda_} lies outside the band [{params.lambda_lo}, {params.lambda_hi}]"
        )
    if t > T:
        raise ParameterValidationError("t", f"valuation time {t} is after maturity {T}")
    order = sp.order
    cutoff = min(sp.index_cutoff, max(order, 1))
    spectral = SpectralCoefficients.from_params(params)
    spectral.validate(cutoff + 2)
    b, c = spectral.coefficients(cutoff + 2)
    polynomials = spectral.polynomials(params.normalize(lambda_), cutoff + 2)
    eigenvalues = [spectral.eigenvalue(v) for v in range(cutoff + 2)]
    tau = T - t
    terms = np.zeros(order + 1)
    terms[0] = 1.0
    for n in range(1, order + 1):
        total = 0.0
        for path in _index_paths(n, cutoff):
            weight, previous = 1.0, 0
            for level in path:
                if level == previous + 1:
                    factor = 1.0
                elif level == previous:
                    factor = b[previous]
                else:
                    factor = c[previous]
                weight *= factor
                previous = level
            if weight == 0.0:
                continue
            decays = [eigenvalues[level] for level in reversed(path)]
            total += weight * polynomials[path[-1]] * (-1) ** n * divided_difference_exp([0.0, *decays], tau)
        terms[n] = (-params.width) ** n * total
    if not np.all(np.isfinite(terms)):
        raise SeriesNotAvailableError(f"series terms are not finite for {params} at lambda = {lambda_}")
    return terms


def series_truncation_path(params: JacobiParams, lambda_: float, t: float, T: float, sp: SeriesParams) -> List[float]:
    """B^0, B^1, ..., B^J."""
    terms = _series_terms(params, lambda_, t, T, sp)
    scale = math.exp(-params.lambda_lo * (T - t))
    return [scale * float(value) for value in np.cumsum(terms)]


def series_price(params: JacobiParams, lambda_: float, t: float, T: float, sp: SeriesParams) -> float:
    """
    B^J(t, T). Raises SeriesNotAvailableError when the spectral coefficients fail validation.
    """
    logger.debug(f"Series price of order {sp.order} for {params} at lambda = {lambda_}, tau = {T - t}")
    return series_truncation_path(params, lambda_, t, T, sp)[-1]
