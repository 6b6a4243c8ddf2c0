from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class NoiseModel:
    """Thermal beam-splitter loss applied identically and independently to both modes.

    ``eta`` is the transmissivity, ``n_bar`` the mean occupation of the bath.
    """

    eta: float = 1.0
    n_bar: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.eta) and 0.0 <= self.eta <= 1.0):
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")
        if not (math.isfinite(self.n_bar) and self.n_bar >= 0.0):
            raise ValueError(f"n_bar must be nonnegative, got {self.n_bar}")

    @property
    def is_identity(self) -> bool:
        return self.eta == 1.0


IDEAL = NoiseModel()
