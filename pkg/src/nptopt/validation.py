"""Input checks shared by the estimator, the config loader and the CLI."""
from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .exceptions import ConfigError
from .fock import TwoModeState


def check_states(X) -> list[TwoModeState]:
    """Accept one state or an iterable of states."""
    if isinstance(X, TwoModeState):
        return [X]
    try:
        states = list(X)
    except TypeError:
        raise TypeError(f"expected TwoModeState or an iterable of them, got {type(X).__name__}") from None
    if not states:
        raise ValueError("no states given")
    for s in states:
        if not isinstance(s, TwoModeState):
            raise TypeError(f"expected TwoModeState, got {type(s).__name__}")
    return states


def check_fraction(name: str, value: float) -> float:
    value = float(value)
    if not (math.isfinite(value) and 0.0 <= value <= 1.0):
        raise ConfigError(f"{name} must lie in [0, 1], got {value}")
    return value


def check_nonnegative(name: str, value: float) -> float:
    value = float(value)
    if not (math.isfinite(value) and value >= 0.0):
        raise ConfigError(f"{name} must be a nonnegative number, got {value}")
    return value


def check_positive(name: str, value: float) -> float:
    value = float(value)
    if not (math.isfinite(value) and value > 0.0):
        raise ConfigError(f"{name} must be a positive number, got {value}")
    return value


def check_positive_int(name: str, value, minimum: int = 1) -> int:
    if isinstance(value, bool) or int(value) != value or value < minimum:
        raise ConfigError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def expand_grid(name: str, spec) -> list[float]:
    """Grid from a scalar, a list, ``{start, stop, step}`` or ``{start, stop, num, log}``.

    Ranges include both end points.
    """
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        values = [float(spec)]
    elif isinstance(spec, Sequence) and not isinstance(spec, str):
        values = [float(v) for v in spec]
    elif isinstance(spec, dict):
        unknown = set(spec) - {"start", "stop", "step", "num", "log"}
        if unknown:
            raise ConfigError(f"{name}: unknown range keys {sorted(unknown)}")
        try:
            start, stop = float(spec["start"]), float(spec["stop"])
        except KeyError as exc:
            raise ConfigError(f"{name}: range needs {exc.args[0]!r}") from None
        if "num" in spec:
            num = check_positive_int(f"{name}.num", spec["num"])
            if spec.get("log"):
                if start <= 0 or stop <= 0:
                    raise ConfigError(f"{name}: log range needs positive bounds")
                values = list(np.geomspace(start, stop, num))
            else:
                values = list(np.linspace(start, stop, num))
        elif "step" in spec:
            step = check_positive(f"{name}.step", spec["step"])
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            values = [round(start + k * step, 12) for k in range(max(count, 0))]
        else:
            raise ConfigError(f"{name}: range needs 'step' or 'num'")
    else:
        raise ConfigError(f"{name}: cannot interpret grid {spec!r}")
    if not values:
        raise ConfigError(f"{name}: grid is empty")
    if not all(math.isfinite(v) for v in values):
        raise ConfigError(f"{name}: grid has non-finite values")
    return [float(v) for v in values]


def unique_sorted(values: Iterable[float]) -> list[float]:
    return sorted(set(values))
