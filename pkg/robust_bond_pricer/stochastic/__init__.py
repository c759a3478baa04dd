from enum import Enum


class RandomStream(Enum):
    """Sub-stream identifiers mixed into the master seed, one per random primitive."""

    BROWNIAN = 1
    JACOBI = 2
    DEFAULT_TIME = 3
    RECOVERY = 4
    ADMISSIBILITY = 5
    UNIT_EXPECTATION = 6
    MARTINGALE = 7
    PRICING = 8
