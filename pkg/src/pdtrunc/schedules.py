"""Dimension-indexed parameter schedules used by sweeps and regime rules.

A schedule maps the matrix dimension ``k`` to a parameter value.  Only two
families are supported on purpose: constants and pure powers ``coef * k^e``.
Asymptotic regime classification refuses anything richer, so free-form
callables are deliberately not representable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .errors import ConfigError


@dataclass(frozen=True)
class Const:
    value: float

    def at(self, k: int) -> float:
        return self.value

    def label(self) -> str:
        return _fmt(self.value)

    def to_json(self) -> dict:
        return {"kind": "const", "value": self.value}


@dataclass(frozen=True)
class Power:
    """The schedule ``coef * k**exponent``."""

    coef: float
    exponent: float

    def at(self, k: int) -> float:
        return self.coef * float(k) ** self.exponent

    def label(self) -> str:
        if self.coef == 1.0:
            return f"k^{_fmt(self.exponent)}"
        return f"{_fmt(self.coef)}*k^{_fmt(self.exponent)}"

    def to_json(self) -> dict:
        return {"kind": "power", "coef": self.coef, "exponent": self.exponent}


Schedule = Union[Const, Power]


def schedule_from_json(obj: dict, path: str = "schedule") -> Schedule:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigError(f"{path}: expected an object with a 'kind' field")
    kind = obj["kind"]
    try:
        if kind == "const":
            return Const(float(obj["value"]))
        if kind == "power":
            return Power(float(obj["coef"]), float(obj["exponent"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: malformed {kind} schedule: {exc}") from exc
    raise ConfigError(f"{path}.kind: unknown schedule kind {kind!r}")


def _fmt(x: float) -> str:
    if x == int(x):
        return str(int(x))
    return repr(x)
