"""
Dispatch of one RunConfig to the library operations and emission of its result tables.
"""

import logging
import math
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Iterator, List, Optional

from robust_bond_pricer.hjm import ShortRateMode
from robust_bond_pricer.hjm.martingale import (
    martingale_test_discounted_bond,
    martingale_test_recovery_bond,
)
from robust_bond_pricer.hjm.term_structure import audit_drift_condition, validate_model
from robust_bond_pricer.measures.density import in_admissible_set, verify_unit_expectation
from robust_bond_pricer.measures.model import IntensitySpec
from robust_bond_pricer.model import Command, RunConfig
from robust_bond_pricer.pricing import SeriesStatus
from robust_bond_pricer.pricing.bounds import bond_lower_bound, bond_upper_bound
from robust_bond_pricer.pricing.interval import (
    ShortRate,
    compensator_params,
    recovery_price_interval,
    robust_price_interval,
)
from robust_bond_pricer.report import Row, companion_path, write_table
from robust_bond_pricer.stochastic import RandomStream
from robust_bond_pricer.stochastic.simulate import (
    default_times_from_rng,
    simulate_brownian_paths,
    simulate_jacobi_paths,
    simulate_recovery_paths,
)
from robust_bond_pricer.stochastic.streams import make_generator

logger = logging.getLogger(__name__)


class RunError(RuntimeError):
    """A library operation failed during a run; ``operation`` names it."""

    def __init__(self, operation: str, cause: Exception):
        self.operation = operation
        self.cause = cause
        super().__init__(f"{operation} failed: {cause}")


@contextmanager
def _operation(name: str) -> Iterator[None]:
    try:
        yield
    except RunError:
        raise
    except (ArithmeticError, RuntimeError, ValueError) as e:
        logger.error(f"Operation {name} failed: {e}")
        raise RunError(name, e) from e


@dataclass
class RunOutcome:
    rows: List[Row]
    passed: bool
    companions: Dict[str, List[Row]] = field(default_factory=dict)
    artifacts: List[Path] = field(default_factory=list)

    @property
    def exit_status(self) -> int:
        return 0 if self.passed else 1


def _short_rate(config: RunConfig) -> ShortRate:
    settings = config.short_rate
    return settings.value if settings.slope == 0 else settings.rate


def _simulate(config: RunConfig) -> RunOutcome:
    assert config.jacobi is not None and config.simulation is not None
    simulation, seed = config.simulation, config.seed
    grid = simulation.grid
    with _operation("simulate_jacobi"):
        intensity = simulate_jacobi_paths(config.jacobi, grid, simulation.n_paths, seed)
    with _operation("simulate_brownian"):
        brownian = simulate_brownian_paths(grid, simulation.dim, simulation.n_paths, seed)
    with _operation("sample_default_time"):
        default_times = default_times_from_rng(intensity, grid, make_generator(seed, RandomStream.DEFAULT_TIME))
    recovery = None
    if config.recovery is not None:
        with _operation("simulate_recovery"):
            recovery, _ = simulate_recovery_paths(config.recovery, grid, simulation.n_paths, seed)

    rows: List[Row] = []
    nodes = grid.nodes
    for p in range(simulation.n_paths):
        default_time = None if math.isinf(default_times[p]) else float(default_times[p])
        for k, t in enumerate(nodes):
            row: Row = {"path": p, "t": float(t), "intensity": float(intensity[p, k])}
            for d in range(simulation.dim):
                row[f"brownian_{d + 1}"] = float(brownian[p, k, d])
            if recovery is not None:
                row["recovery"] = float(recovery[p, k])
            row["default_time"] = default_time
            rows.append(row)
    return RunOutcome(rows=rows, passed=True)


def _price(config: RunConfig) -> RunOutcome:
    assert config.schedule is not None
    rows: List[Row] = []
    for params in config.parameter_sets():
        for t, T in config.schedule.pairs:
            with _operation("series_price/mc_price"):
                # Intensity-only price: no short-rate discount.
                interval = robust_price_interval(
                    params, params.lambda_0, 0.0, t, T, config.series, config.monte_carlo, config.seed
                )
            rows.append(
                {
                    **params.to_dict(),
                    "t": t,
                    "T": T,
                    "series": interval.series,
                    "mc": interval.mc,
                    "stderr": interval.mc_stderr,
                    "series_status": interval.series_status.value,
                    "pass": interval.series_status is not SeriesStatus.FAILED_MC_GATE,
                }
            )
    return RunOutcome(rows=rows, passed=all(row["pass"] for row in rows))


def _bounds(config: RunConfig) -> RunOutcome:
    assert config.schedule is not None
    form = config.schedule.upper_form
    rows: List[Row] = []
    for params in config.parameter_sets():
        for t, T in config.schedule.pairs:
            with _operation("bond_bounds"):
                lower = bond_lower_bound(params, params.lambda_0, t, T)
                upper = bond_upper_bound(params, params.lambda_0, t, T, form)
            rows.append(
                {
                    **params.to_dict(),
                    "t": t,
                    "T": T,
                    "lower": lower,
                    "upper": upper,
                    "upper_form": form.value,
                    "pass": lower <= upper,
                }
            )
    return RunOutcome(rows=rows, passed=all(row["pass"] for row in rows))


def _interval(config: RunConfig) -> RunOutcome:
    assert config.schedule is not None
    schedule, short_rate = config.schedule, _short_rate(config)
    rows: List[Row] = []
    for params in config.parameter_sets():
        for t, T in schedule.pairs:
            with _operation("robust_price_interval"):
                interval = robust_price_interval(
                    params,
                    params.lambda_0,
                    short_rate,
                    t,
                    T,
                    config.series,
                    config.monte_carlo,
                    config.seed,
                    schedule.upper_form,
                )
            rows.append({"leg": "zero_recovery", **params.to_dict(), **interval.to_row()})
            if config.recovery is None:
                continue
            with _operation("recovery_price_interval"):
                h_params = compensator_params(config.recovery, params.alpha, params.beta)
                interval = recovery_price_interval(
                    h_params,
                    h_params.lambda_0,
                    short_rate,
                    t,
                    T,
                    config.series,
                    config.monte_carlo,
                    config.seed,
                    schedule.upper_form,
                )
            rows.append({"leg": "recovery", **h_params.to_dict(), **interval.to_row()})
    return RunOutcome(rows=rows, passed=all(row["pass"] for row in rows))


def _audit_drift(config: RunConfig) -> RunOutcome:
    assert config.curve is not None
    model, audit, mc = config.curve, config.audit, config.monte_carlo
    grid = audit.grid
    with _operation("validate_model"):
        validation = validate_model(model, grid)
    if not validation.passed:
        logger.warning(f"Forward-curve model failed validation: {validation.to_dict()}")
    with _operation("audit_drift_condition"):
        report = audit_drift_condition(
            model, IntensitySpec.constant(audit.lambda_star), grid, audit.tolerance, seed=config.seed
        )
    if not report.passed:
        logger.warning(f"Drift condition violated: max residual {report.max_residual} > {audit.tolerance}")
    outcome = RunOutcome(rows=report.to_rows(), passed=report.passed and validation.passed)
    outcome.companions["validation"] = [validation.to_dict()]

    if audit.martingale_paths:
        checks: List[Row] = []
        with _operation("martingale_test_discounted_bond"):
            discounted = martingale_test_discounted_bond(
                model,
                audit.lambda_star,
                grid,
                audit.martingale_paths,
                config.seed,
                chunk_size=mc.chunk_size,
                n_workers=mc.n_workers,
            )
        checks.append({"test": "discounted_bond", **discounted.to_dict()})
        if config.recovery is not None and model.short_rate_mode is ShortRateMode.DERIVED:
            with _operation("martingale_test_recovery_bond"):
                recovered = martingale_test_recovery_bond(
                    model,
                    config.recovery,
                    grid,
                    audit.martingale_paths,
                    config.seed,
                    chunk_size=mc.chunk_size,
                    n_workers=mc.n_workers,
                )
            checks.append({"test": "recovery_bond", **recovered.to_dict()})
        outcome.companions["martingale"] = checks
        outcome.passed = outcome.passed and all(check["pass"] for check in checks)
    return outcome


def _verify_measure(config: RunConfig) -> RunOutcome:
    assert config.measure is not None and config.simulation is not None
    measure, mc = config.measure, config.monte_carlo
    grid = config.simulation.grid
    with _operation("verify_unit_expectation"):
        report = verify_unit_expectation(
            measure.intensity, grid, measure.n_paths, config.seed, chunk_size=mc.chunk_size, n_workers=mc.n_workers
        )
    row: Row = {"kind": measure.intensity.kind.value, "horizon": grid.horizon, **report.to_dict()}
    passed = report.passed
    if measure.band is not None:
        with _operation("in_admissible_set"):
            admissibility = in_admissible_set(
                measure.intensity, measure.band, grid, measure.admissibility_paths, config.seed
            )
        row.pop("pass")
        row.update(admissibility.to_dict())
        passed = passed and admissibility.admissible
        row["pass"] = passed
    return RunOutcome(rows=[row], passed=passed)


_HANDLERS: Dict[Command, Callable[[RunConfig], RunOutcome]] = {
    Command.SIMULATE: _simulate,
    Command.PRICE: _price,
    Command.BOUNDS: _bounds,
    Command.INTERVAL: _interval,
    Command.AUDIT_DRIFT: _audit_drift,
    Command.VERIFY_MEASURE: _verify_measure,
}


def execute(config: RunConfig) -> RunOutcome:
    """Run the configured command and collect its rows without writing anything."""
    logger.info(f"Running '{config.command.value}' with seed {config.seed}")
    outcome = _HANDLERS[config.command](config)
    if not outcome.passed:
        logger.warning(f"'{config.command.value}' finished with at least one failing pass flag")
    return outcome


def run(config: RunConfig, out: Optional[Path] = None) -> RunOutcome:
    """
    Run the configured command and write its tables.

    Args:
        config: Validated run configuration
        out: Output path; defaults to ``config.output.path``. Without either nothing is written

    Returns:
        The outcome, whose ``exit_status`` is 0 iff every emitted pass flag is true
    """
    outcome = execute(config)
    target = out if out is not None else config.output.path
    if target is not None:
        output_format = config.output.format
        outcome.artifacts.append(write_table(outcome.rows, target, output_format))
        for label, rows in outcome.companions.items():
            outcome.artifacts.append(write_table(rows, companion_path(target, label, output_format), output_format))
    logger.info(f"Run '{config.command.value}' done with exit status {outcome.exit_status}")
    return outcome
