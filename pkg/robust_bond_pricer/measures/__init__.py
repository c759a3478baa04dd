from enum import Enum


class IntensityKind(Enum):
    CONSTANT = "constant"
    DETERMINISTIC = "deterministic"
    FUNCTIONAL = "functional"


class IntensityFamily(Enum):
    """Functional intensities that can be written in a run configuration."""

    BROWNIAN_INDICATOR = "brownian_indicator"
    CLAMPED_BROWNIAN = "clamped_brownian"
