"""How far the source's pairs can be sent over lossy multi-core fiber."""

from __future__ import annotations

import math
from dataclasses import dataclass

DEFAULT_ATTENUATION = 0.4  # dB/km at 1550 nm


@dataclass(frozen=True)
class LinkBudget:
    brightness: float = 350_000.0  # pairs / (s mW nm)
    pump_power: float = 1.0  # mW
    bandwidth: float = 1.0  # nm
    attenuation: float = DEFAULT_ATTENUATION  # dB/km per arm
    arms: int = 2
    coincidence_efficiency: float = 1.0
    min_rate: float = 0.0  # pairs/s

    def __post_init__(self):
        for name in ("brightness", "pump_power", "bandwidth", "attenuation", "coincidence_efficiency", "min_rate"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be finite and nonnegative, got {value}")
        if self.arms not in (1, 2):
            raise ValueError(f"arms must be 1 or 2, got {self.arms}")

    @property
    def source_rate(self) -> float:
        return self.brightness * self.pump_power * self.bandwidth * self.coincidence_efficiency


@dataclass(frozen=True)
class MaxDistance:
    km: float
    reachable: bool  # False when min_rate exceeds the zero-length rate


def rate_at_distance(budget: LinkBudget, L: float) -> float:
    """Pair rate (1/s) after ``L`` km of fiber on each lossy arm."""
    if L < 0:
        raise ValueError("distance must be nonnegative")
    loss_db = budget.arms * budget.attenuation * L
    return budget.source_rate * 10.0 ** (-loss_db / 10.0)


def max_distance(budget: LinkBudget) -> MaxDistance:
    """Longest fiber length keeping the rate at or above ``budget.min_rate``."""
    if not budget.attenuation > 0:
        raise ValueError("max_distance needs a positive attenuation")
    if not budget.min_rate > 0:
        raise ValueError("max_distance needs a positive min_rate")
    r0 = budget.source_rate
    if budget.min_rate > r0:
        return MaxDistance(0.0, False)
    km = 10.0 * math.log10(r0 / budget.min_rate) / (budget.arms * budget.attenuation)
    return MaxDistance(km, True)
