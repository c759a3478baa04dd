from enum import Enum


class UpperBoundForm(Enum):
    # Convex combination with the time-averaged mean weight.
    REPAIRED = "repaired"
    # Weight without the 1/(T - t) normalization, kept for comparison only.
    LITERAL = "literal"


class SeriesStatus(Enum):
    OK = "ok"
    NOT_AVAILABLE = "not_available"
    FAILED_MC_GATE = "failed_mc_gate"
    SKIPPED = "skipped"
