from abc import ABCMeta, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, Iterable, Mapping


class ParameterValidationError(ValueError):
    """Raised when a model field or an operation argument breaks its invariant."""

    def __init__(self, field: str, reason: str):
        self.field = field
        self.reason = reason
        super().__init__(f"Invalid '{field}': {reason}")


def reject_unknown_keys(data: Mapping[str, Any], accepted: Iterable[str], where: str) -> None:
    accepted_keys = sorted(accepted)
    unknown = sorted(set(data) - set(accepted_keys))
    if unknown:
        raise ParameterValidationError(
            f"{where}.{unknown[0]}",
            f"unknown key(s) {unknown}; accepted keys are {accepted_keys}",
        )


def integer_field(data: Mapping[str, Any], name: str, default: int, where: str) -> int:
    """``data[name]`` (or ``default``) as an int; floats and booleans are rejected, not truncated."""
    value = data.get(name, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParameterValidationError(f"{where}.{name}", f"must be an integer, got {value!r}")
    return value


@dataclass(frozen=True)
class BaseImmutableModel(metaclass=ABCMeta):
    @classmethod
    @abstractmethod
    def serialize(cls, data: Dict[str, Any]) -> "BaseImmutableModel":
        pass

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        pass
