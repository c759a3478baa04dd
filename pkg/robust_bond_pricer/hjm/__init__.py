from enum import Enum


class ShortRateMode(Enum):
    # r_t = f(t, t) - lambda*_t
    DERIVED = "derived"
    EXPLICIT = "explicit"


class CurveShape(Enum):
    FLAT = "flat"
    LINEAR = "linear"


class VolatilityShape(Enum):
    CONSTANT = "constant"
    VASICEK = "vasicek"


class DriftShape(Enum):
    ZERO = "zero"
    CONSTANT = "constant"
    NO_ARBITRAGE = "no_arbitrage"
