"""
Run configuration: one YAML document per run, parsed into frozen blocks.
"""

import itertools
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import yaml

from robust_bond_pricer._base.model import (
    BaseImmutableModel,
    ParameterValidationError,
    integer_field,
    reject_unknown_keys,
)
from robust_bond_pricer.hjm.model import ForwardCurveModel
from robust_bond_pricer.measures.model import IntensitySpec
from robust_bond_pricer.pricing import UpperBoundForm
from robust_bond_pricer.pricing.model import McSettings, SeriesParams
from robust_bond_pricer.stochastic.model import (
    DEFAULT_STEPS_PER_YEAR,
    JacobiParams,
    RecoveryParams,
    TimeGrid,
)

logger = logging.getLogger(__name__)


class Command(Enum):
    SIMULATE = "simulate"
    PRICE = "price"
    BOUNDS = "bounds"
    INTERVAL = "interval"
    AUDIT_DRIFT = "audit-drift"
    VERIFY_MEASURE = "verify-measure"


class OutputFormat(Enum):
    CSV = "csv"
    JSON = "json"


class ConfigError(ValueError):
    """Raised for malformed or invalid run configurations; ``field`` names the offending entry."""

    def __init__(self, field: str, reason: str):
        self.field = field
        self.reason = reason
        super().__init__(f"Invalid configuration '{field}': {reason}")


def load_yaml_config(config_path: Union[str, Path]) -> Dict[str, Any]:
    """
    Load configuration from a YAML file.

    Args:
        config_path: Path to the YAML configuration file

    Returns:
        Dictionary containing the configuration

    Raises:
        FileNotFoundError: If the configuration file does not exist
        ConfigError: If the file is not valid YAML or not a mapping
    """
    config_path = Path(config_path)
    if not config_path.exists():
        raise FileNotFoundError(f"Configuration file not found: {config_path}")

    with open(config_path, "r", encoding="utf-8") as f:
        return _load_document(f.read(), str(config_path))


def _load_document(text: str, source: str) -> Dict[str, Any]:
    try:
        config = yaml.safe_load(text)
    except yaml.YAMLError as e:
        logger.error(f"Error parsing YAML configuration {source}: {str(e)}")
        raise ConfigError("document", f"malformed YAML in {source}: {e}") from e

    if config is None:
        # Empty file or only comments
        return {}

    if not isinstance(config, dict):
        raise ConfigError("document", f"invalid configuration format in {source}; expected a mapping")
    return config


def _block(data: Dict[str, Any], name: str) -> Dict[str, Any]:
    value = data.get(name) or {}
    if not isinstance(value, dict):
        raise ParameterValidationError(name, "must be a mapping")
    return value


@dataclass(frozen=True)
class ScanSettings(BaseImmutableModel):
    """
    Parameter grid over JacobiParams fields. Values of ``lambda_0`` may also name a band point:
    ``lambda_lo``, ``lambda_mean`` or ``lambda_hi``.
    """

    axes: Tuple[Tuple[str, Tuple[Union[float, str], ...]], ...] = ()

    _BAND_POINTS = ("lambda_lo", "lambda_mean", "lambda_hi")

    def expand(self, base: JacobiParams) -> List[JacobiParams]:
        if not self.axes:
            return [base]
        names = [name for name, _ in self.axes]
        grids = []
        for values in itertools.product(*(values for _, values in self.axes)):
            overrides = dict(zip(names, values))
            start = overrides.pop("lambda_0", base.lambda_0)
            # Start at the mean first: the overrides may move the band away from base.lambda_0.
            candidate = replace(base, **{"lambda_0": overrides.get("lambda_mean", base.lambda_mean), **overrides})
            if isinstance(start, str):
                start = getattr(candidate, start)
            grids.append(candidate.with_start(float(start)))
        return grids

    @classmethod
    def serialize(cls, data: Dict[str, Any]) -> "ScanSettings":
        reject_unknown_keys(data, JacobiParams.__dataclass_fields__, "scan")
        axes = []
        for name in JacobiParams.__dataclass_fields__:
            if name not in data:
                continue
            raw = data[name]
            if not isinstance(raw, list) or not raw:
                raise ParameterValidationError(f"scan.{name}", "must be a non-empty list")
            values: List[Union[float, str]] = []
            for value in raw:
                if isinstance(value, str):
                    if name != "lambda_0" or value not in cls._BAND_POINTS:
                        raise ParameterValidationError(
                            f"scan.{name}", f"unknown value {value!r}; named points are {list(cls._BAND_POINTS)}"
                        )
                    values.append(value)
                else:
                    values.append(float(value))
            axes.append((name, tuple(values)))
        return cls(axes=tuple(axes))

    def to_dict(self) -> Dict[str, Any]:
        return {name: list(values) for name, values in self.axes}


@dataclass(frozen=True)
class ScheduleSettings(BaseImmutableModel):
    pairs: Tuple[Tuple[float, float], ...]
    start: Optional[float] = None
    upper_form: UpperBoundForm = UpperBoundForm.REPAIRED

    def __post_init__(self) -> None:
        if not self.pairs:
            raise ParameterValidationError("schedule.pairs", "need at least one (t, T) pair")
        for t, T in self.pairs:
            if t < 0 or t > T:
                raise ParameterValidationError("schedule.pairs", f"need 0 <= t <= T, got ({t}, {T})")

    @classmethod
    def serialize(cls, data: Dict[str, Any]) -> "ScheduleSettings":
        reject_unknown_keys(data, ("pairs", "start", "upper_form"), "schedule")
        raw_pairs = data.get("pairs")
        if not isinstance(raw_pairs, list):
            raise ParameterValidationError("schedule.pairs", "must be a list of [t, T] pairs")
        pairs = []
        for pair in raw_pairs:
            if not isinstance(pair, (list, tuple)) or len(pair) != 2:
                raise ParameterValidationError("schedule.pairs", f"each entry must be [t, T], got {pair!r}")
            pairs.append((float(pair[0]), float(pair[1])))
        try:
            upper_form = UpperBoundForm(data.get("upper_form", UpperBoundForm.REPAIRED.value))
        except ValueError:
            raise ParameterValidationError(
                "schedule.upper_form", f"accepted values are {[form.value for form in UpperBoundForm]}"
            ) from None
        start = data.get("start")
        return cls(pairs=tuple(pairs), start=None if start is None else float(start), upper_form=upper_form)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"pairs": [list(pair) for pair in self.pairs], "upper_form": self.upper_form.value}
        if self.start is not None:
            data["start"] = self.start
        return data


@dataclass(frozen=True)
class ShortRateSettings(BaseImmutableModel):
    """Deterministic short rate r(t) = value + slope * t."""

    value: float = 0.0
    slope: float = 0.0

    def rate(self, times: Any) -> Any:
        return self.value + self.slope * times

    @classmethod
    def serialize(cls, data: Dict[str, Any]) -> "ShortRateSettings":
        reject_unknown_keys(data, cls.__dataclass_fields__, "short_rate")
        return cls(value=float(data.get("value", 0.0)), slope=float(data.get("slope", 0.0)))

    def to_dict(self) -> Dict[str, Any]:
        return {"value": self.value, "slope": self.slope}


@dataclass(frozen=True)
class SimulationSettings(BaseImmutableModel):
    horizon: float
    steps_per_year: int = DEFAULT_STEPS_PER_YEAR
    dim: int = 1
    n_paths: int = 1

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ParameterValidationError("simulation.dim", f"must be at least 1, got {self.dim}")
        if self.n_paths < 1:
            raise ParameterValidationError("simulation.n_paths", f"must be at least 1, got {self.n_paths}")

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid.from_steps_per_year(self.horizon, self.steps_per_year)

    @classmethod
    def serialize(cls, data: Dict[str, Any]) -> "SimulationSettings":
        reject_unknown_keys(data, cls.__dataclass_fields__, "simulation")
        if "horizon" not in data:
            raise ParameterValidationError("simulation.horizon", "missing required field")
        settings = cls(
            horizon=float(data["horizon"]),
            steps_per_year=integer_field(data, "steps_per_year", DEFAULT_STEPS_PER_YEAR, "simulation"),
            dim=integer_field(data, "dim", 1, "simulation"),
            n_paths=integer_field(data, "n_paths", 1, "simulation"),
        )
        settings.grid  # validates horizon and step count
        return settings

    def to_dict(self) -> Dict[str, Any]:
        return {"horizon": self.horizon, "steps_per_year": self.steps_per_year, "dim": self.dim, "n_paths": self.n_paths}


@dataclass(frozen=True)
class AuditSettings(BaseImmutableModel):
    horizon: float = 1.0
    n_steps: int = 50
    tolerance: float = 1e-8
    lambda_star: float = 0.03
    martingale_paths: int = 0

    def __post_init__(self) -> None:
        if self.tolerance < 0:
            raise ParameterValidationError("audit.tolerance", f"must be non-negative, got {self.tolerance}")
        if self.martingale_paths < 0 or self.martingale_paths % 2:
            raise ParameterValidationError(
                "audit.martingale_paths", f"must be an even non-negative count, got {self.martingale_paths}"
            )

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(horizon=self.horizon, n_steps=self.n_steps)

    @classmethod
    def serialize(cls, data: Dict[str, Any]) -> "AuditSettings":
        reject_unknown_keys(data, cls.__dataclass_fields__, "audit")
        settings = cls(
            horizon=float(data.get("horizon", 1.0)),
            n_steps=integer_field(data, "n_steps", 50, "audit"),
            tolerance=float(data.get("tolerance", 1e-8)),
            lambda_star=float(data.get("lambda_star", 0.03)),
            martingale_paths=integer_field(data, "martingale_paths", 0, "audit"),
        )
        settings.grid  # validates horizon and step count
        return settings

    def to_dict(self) -> Dict[str, Any]:
        return {
            "horizon": self.horizon,
            "n_steps": self.n_steps,
            "tolerance": self.tolerance,
            "lambda_star": self.lambda_star,
            "martingale_paths": self.martingale_paths,
        }


@dataclass(frozen=True)
class MeasureSettings(BaseImmutableModel):
    intensity: IntensitySpec
    n_paths: int = 100_000
    band: Optional[Tuple[float, float]] = None
    admissibility_paths: int = 1000

    @classmethod
    def serialize(cls, data: Dict[str, Any]) -> "MeasureSettings":
        reject_unknown_keys(data, cls.__dataclass_fields__, "measure")
        if "intensity" not in data:
            raise ParameterValidationError("measure.intensity", "missing required block")
        band = data.get("band")
        if band is not None:
            if not isinstance(band, (list, tuple)) or len(band) != 2 or float(band[0]) > float(band[1]):
                raise ParameterValidationError("measure.band", f"must be [lower, upper] with lower <= upper, got {band!r}")
            band = (float(band[0]), float(band[1]))
        return cls(
            intensity=IntensitySpec.serialize(dict(data["intensity"])),
            n_paths=integer_field(data, "n_paths", 100_000, "measure"),
            band=band,
            admissibility_paths=integer_field(data, "admissibility_paths", 1000, "measure"),
        )

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "intensity": self.intensity.to_dict(),
            "n_paths": self.n_paths,
            "admissibility_paths": self.admissibility_paths,
        }
        if self.band is not None:
            data["band"] = list(self.band)
        return data


@dataclass(frozen=True)
class OutputSettings(BaseImmutableModel):
    path: Optional[str] = None
    format: OutputFormat = OutputFormat.CSV

    @classmethod
    def serialize(cls, data: Dict[str, Any]) -> "OutputSettings":
        reject_unknown_keys(data, ("path", "format"), "output")
        try:
            output_format = OutputFormat(str(data.get("format", OutputFormat.CSV.value)).lower())
        except ValueError:
            raise ParameterValidationError(
                "output.format", f"accepted formats are {[member.value for member in OutputFormat]}"
            ) from None
        path = data.get("path")
        return cls(path=None if path is None else str(path), format=output_format)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"format": self.format.value}
        if self.path is not None:
            data["path"] = self.path
        return data


_REQUIRED_BLOCKS: Dict[Command, Tuple[str, ...]] = {
    Command.SIMULATE: ("jacobi", "simulation"),
    Command.PRICE: ("jacobi", "schedule"),
    Command.BOUNDS: ("jacobi", "schedule"),
    Command.INTERVAL: ("jacobi", "schedule"),
    Command.AUDIT_DRIFT: ("curve",),
    Command.VERIFY_MEASURE: ("measure", "simulation"),
}

_OPTIONAL_BLOCKS = ("jacobi", "scan", "schedule", "simulation", "recovery", "curve", "measure")


@dataclass(frozen=True)
class RunConfig(BaseImmutableModel):
    """Everything one run needs; exactly one command."""

    command: Command
    seed: int = 0
    jacobi: Optional[JacobiParams] = None
    scan: Optional[ScanSettings] = None
    schedule: Optional[ScheduleSettings] = None
    short_rate: ShortRateSettings = field(default_factory=ShortRateSettings)
    series: SeriesParams = field(default_factory=SeriesParams)
    monte_carlo: McSettings = field(default_factory=McSettings)
    simulation: Optional[SimulationSettings] = None
    recovery: Optional[RecoveryParams] = None
    curve: Optional[ForwardCurveModel] = None
    audit: AuditSettings = field(default_factory=AuditSettings)
    measure: Optional[MeasureSettings] = None
    output: OutputSettings = field(default_factory=OutputSettings)

    def __post_init__(self) -> None:
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise ParameterValidationError("seed", f"must be a non-negative integer, got {self.seed!r}")
        for name in _REQUIRED_BLOCKS[self.command]:
            if getattr(self, name) is None:
                raise ParameterValidationError(name, f"block is required by the '{self.command.value}' command")
        if self.scan is not None and self.schedule is not None and self.schedule.start is not None:
            if any(name == "lambda_0" for name, _ in self.scan.axes):
                raise ParameterValidationError("schedule.start", "cannot be combined with a lambda_0 scan")

    def parameter_sets(self) -> List[JacobiParams]:
        """The Jacobi parameter sets of the run: the base block expanded by the scan."""
        assert self.jacobi is not None
        sets = self.scan.expand(self.jacobi) if self.scan is not None else [self.jacobi]
        if self.schedule is not None and self.schedule.start is not None:
            sets = [params.with_start(self.schedule.start) for params in sets]
        return sets

    def with_overrides(
        self, out: Optional[str] = None, output_format: Optional[str] = None, seed: Optional[int] = None
    ) -> "RunConfig":
        """Apply command-line overrides on top of the document values."""
        output = self.output
        if out is not None:
            output = replace(output, path=out)
        if output_format is not None:
            output = replace(output, format=OutputFormat(output_format))
        return replace(self, output=output, seed=self.seed if seed is None else seed)

    @classmethod
    def serialize(cls, data: Dict[str, Any]) -> "RunConfig":
        reject_unknown_keys(data, cls.__dataclass_fields__, "config")
        if "command" not in data:
            raise ParameterValidationError("command", f"missing; accepted commands are {[c.value for c in Command]}")
        try:
            command = Command(data["command"])
        except ValueError:
            raise ParameterValidationError(
                "command", f"unknown command {data['command']!r}; accepted commands are {[c.value for c in Command]}"
            ) from None

        parsers = {
            "jacobi": JacobiParams.serialize,
            "scan": ScanSettings.serialize,
            "schedule": ScheduleSettings.serialize,
            "simulation": SimulationSettings.serialize,
            "recovery": RecoveryParams.serialize,
            "curve": ForwardCurveModel.serialize,
            "measure": MeasureSettings.serialize,
        }
        optional = {name: parsers[name](_block(data, name)) for name in _OPTIONAL_BLOCKS if data.get(name) is not None}
        seed = data.get("seed", 0)
        return cls(
            command=command,
            seed=seed,
            short_rate=ShortRateSettings.serialize(_block(data, "short_rate")),
            series=SeriesParams.serialize(_block(data, "series")),
            monte_carlo=McSettings.serialize(_block(data, "monte_carlo")),
            audit=AuditSettings.serialize(_block(data, "audit")),
            output=OutputSettings.serialize(_block(data, "output")),
            **optional,
        )

    @classmethod
    def from_config_file(cls, config_path: Union[str, Path]) -> "RunConfig":
        return _wrap(lambda: cls.serialize(load_yaml_config(config_path)))

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"command": self.command.value, "seed": self.seed}
        for name in _OPTIONAL_BLOCKS:
            value = getattr(self, name)
            if value is not None:
                data[name] = value.to_dict()
        for name in ("short_rate", "series", "monte_carlo", "audit", "output"):
            data[name] = getattr(self, name).to_dict()
        return data


def _wrap(build: Any) -> RunConfig:
    try:
        return build()
    except ParameterValidationError as e:
        logger.error(f"Invalid configuration: {e}")
        raise ConfigError(e.field, e.reason) from e
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        logger.error(f"Invalid configuration: {e}")
        raise ConfigError("document", str(e)) from e


def parse_config(text: str) -> RunConfig:
    """Parse a YAML run document into a validated RunConfig."""
    return _wrap(lambda: RunConfig.serialize(_load_document(text, "<document>")))
