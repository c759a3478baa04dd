from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Dict, Optional

from robust_bond_pricer._base.model import (
    BaseImmutableModel,
    ParameterValidationError,
    integer_field,
    reject_unknown_keys,
)
from robust_bond_pricer.pricing import SeriesStatus, UpperBoundForm
from robust_bond_pricer.stochastic.model import DEFAULT_STEPS_PER_YEAR
from robust_bond_pricer.stochastic.streams import DEFAULT_CHUNK_SIZE

MIN_MC_PATHS: int = 100
# Allowance for the time discretization of the Monte Carlo integral.
DISCRETIZATION_SLACK: float = 1e-4


@dataclass(frozen=True)
class SeriesParams(BaseImmutableModel):
    """Truncation order J, index cutoff V_max and the node count of the quadrature cross-check."""

    order: int = 4
    index_cutoff: int = 12
    quadrature_nodes: int = 2001

    def __post_init__(self) -> None:
        if self.order < 0:
            raise ParameterValidationError("order", f"must be non-negative, got {self.order}")
        if self.index_cutoff < 1:
            raise ParameterValidationError("index_cutoff", f"must be at least 1, got {self.index_cutoff}")
        if self.quadrature_nodes < 2:
            raise ParameterValidationError("quadrature_nodes", f"must be at least 2, got {self.quadrature_nodes}")

    @classmethod
    def serialize(cls, data: Dict[str, Any]) -> SeriesParams:
        reject_unknown_keys(data, cls.__dataclass_fields__, "series")
        return cls(
            order=integer_field(data, "order", 4, "series"),
            index_cutoff=integer_field(data, "index_cutoff", 12, "series"),
            quadrature_nodes=integer_field(data, "quadrature_nodes", 2001, "series"),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {"order": self.order, "index_cutoff": self.index_cutoff, "quadrature_nodes": self.quadrature_nodes}


@dataclass(frozen=True)
class McSettings(BaseImmutableModel):
    n_paths: int = 100_000
    steps_per_year: int = DEFAULT_STEPS_PER_YEAR
    chunk_size: int = DEFAULT_CHUNK_SIZE
    n_workers: int = 1
    antithetic: bool = False

    def __post_init__(self) -> None:
        if self.n_paths < MIN_MC_PATHS:
            raise ParameterValidationError("n_paths", f"must be at least {MIN_MC_PATHS}, got {self.n_paths}")
        if self.steps_per_year < 1:
            raise ParameterValidationError("steps_per_year", f"must be positive, got {self.steps_per_year}")
        if self.chunk_size < 1:
            raise ParameterValidationError("chunk_size", f"must be positive, got {self.chunk_size}")
        if self.n_workers < 1:
            raise ParameterValidationError("n_workers", f"must be positive, got {self.n_workers}")
        if self.antithetic and (self.n_paths % 2 or self.chunk_size % 2):
            raise ParameterValidationError("antithetic", "antithetic pairs need even n_paths and chunk_size")

    @classmethod
    def serialize(cls, data: Dict[str, Any]) -> McSettings:
        reject_unknown_keys(data, cls.__dataclass_fields__, "monte_carlo")
        antithetic = data.get("antithetic", False)
        if not isinstance(antithetic, bool):
            raise ParameterValidationError("monte_carlo.antithetic", f"must be a boolean, got {antithetic!r}")
        return cls(
            n_paths=integer_field(data, "n_paths", 100_000, "monte_carlo"),
            steps_per_year=integer_field(data, "steps_per_year", DEFAULT_STEPS_PER_YEAR, "monte_carlo"),
            chunk_size=integer_field(data, "chunk_size", DEFAULT_CHUNK_SIZE, "monte_carlo"),
            n_workers=integer_field(data, "n_workers", 1, "monte_carlo"),
            antithetic=antithetic,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_paths": self.n_paths,
            "steps_per_year": self.steps_per_year,
            "chunk_size": self.chunk_size,
            "n_workers": self.n_workers,
            "antithetic": self.antithetic,
        }


@dataclass(frozen=True)
class McEstimate:
    estimate: float
    stderr: float
    n_paths: int

    def contains(self, value: float, n_sigma: float = 3.0, slack: float = 0.0) -> bool:
        return abs(self.estimate - value) <= n_sigma * self.stderr + slack


@dataclass(frozen=True)
class PriceInterval:
    """
    Robust price of a defaultable zero-coupon bond over [t, T]; every price field is already
    multiplied by ``discount`` = exp(-int_t^T r_s ds).
    """

    t: float
    T: float
    lower: float
    upper: float
    series: Optional[float]
    mc: float
    mc_stderr: float
    discount: float
    series_status: SeriesStatus = SeriesStatus.OK
    upper_form: UpperBoundForm = UpperBoundForm.REPAIRED

    def __post_init__(self) -> None:
        # The literal upper form is kept for comparison and may cross the lower bound.
        if self.upper_form is UpperBoundForm.REPAIRED and self.lower > self.upper:
            raise ParameterValidationError("lower/upper ordering", f"lower bound {self.lower} exceeds upper bound {self.upper}")
        if not math.isfinite(self.mc) or self.mc_stderr < 0:
            raise ParameterValidationError("mc", f"invalid Monte Carlo estimate {self.mc} +- {self.mc_stderr}")

    def is_consistent(self, n_sigma: float = 3.0, slack: float = DISCRETIZATION_SLACK) -> bool:
        """Whether the Monte Carlo estimate sits inside the bounds up to its noise and ``slack``."""
        allowance = n_sigma * self.mc_stderr + slack * self.discount
        return self.lower - allowance <= self.mc <= self.upper + allowance

    @property
    def passed(self) -> bool:
        return self.is_consistent() and self.series_status is not SeriesStatus.FAILED_MC_GATE

    def to_row(self) -> Dict[str, Any]:
        return {
            "t": self.t,
            "T": self.T,
            "lower": self.lower,
            "upper": self.upper,
            "series": self.series,
            "mc": self.mc,
            "stderr": self.mc_stderr,
            "discount": self.discount,
            "series_status": self.series_status.value,
            "upper_form": self.upper_form.value,
            "pass": self.passed,
        }
