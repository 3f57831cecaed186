"""Two-photon states emitted by the four-region down-conversion source."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .devices import PhaseVector
from .qcore import DIM, PAIR_DIM, TwoPhotonState

DEFAULT_PAIR_RATE = 350_000.0  # pairs / (s mW nm)
DEFAULT_PUMP_POWER = 1.0  # mW per core
DEFAULT_BANDWIDTH = 1.0  # nm


@dataclass(frozen=True)
class SourceConfig:
    """Pump distribution, pair phases, white-noise visibility and brightness.

    ``pump_weights`` are normalized on construction.
    """

    pump_weights: tuple = (0.25, 0.25, 0.25, 0.25)
    core_phases: tuple = (0.0, 0.0, 0.0, 0.0)
    visibility: float = 1.0
    pair_rate: float = DEFAULT_PAIR_RATE
    pump_power_per_core: float = DEFAULT_PUMP_POWER
    bandwidth: float = DEFAULT_BANDWIDTH
    n_cores: int = field(default=DIM, init=False)

    def __post_init__(self):
        w = np.asarray(self.pump_weights, dtype=float)
        if w.shape != (DIM,) or not np.all(np.isfinite(w)):
            raise ValueError(f"pump_weights must be {DIM} finite numbers")
        if np.any(w < 0):
            raise ValueError("pump_weights must be nonnegative")
        if w.sum() <= 0:
            raise ValueError("pump_weights are all zero")
        object.__setattr__(self, "pump_weights", tuple((w / w.sum()).tolist()))
        object.__setattr__(self, "core_phases", tuple(PhaseVector(self.core_phases).phi.tolist()))
        if not 0.0 <= self.visibility <= 1.0:
            raise ValueError(f"visibility must be in [0, 1], got {self.visibility}")
        for name in ("pair_rate", "pump_power_per_core", "bandwidth"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be nonnegative")

    @property
    def generated_pair_rate(self) -> float:
        """Pairs per second produced by all illuminated regions."""
        return self.pair_rate * self.pump_power_per_core * self.n_cores * self.bandwidth


def ideal_state() -> TwoPhotonState:
    """(|00> + |11> + |22> + |33>) / 2."""
    return TwoPhotonState.pure(np.eye(DIM) / 2.0)


def weighted_state(config: SourceConfig) -> TwoPhotonState:
    """Pure state ``sum_j sqrt(w_j) exp(i theta_j) |jj>`` for the configured pump split."""
    w = np.asarray(config.pump_weights)
    theta = np.asarray(config.core_phases)
    return TwoPhotonState.pure(np.diag(np.sqrt(w) * np.exp(1j * theta)))


def werner_state(v: float, pure: TwoPhotonState | None = None) -> TwoPhotonState:
    """White-noise mixture ``v |psi><psi| + (1 - v) I / 16``.

    ``pure`` defaults to the ideal state.
    """
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"visibility must be in [0, 1], got {v}")
    psi = ideal_state() if pure is None else pure
    if v == 1.0:
        return psi
    rho = v * psi.density_matrix() + (1.0 - v) * np.eye(PAIR_DIM) / PAIR_DIM
    return TwoPhotonState.mixed(rho)


def source_state(config: SourceConfig) -> TwoPhotonState:
    """State emitted under ``config``: weighted amplitudes mixed with white noise."""
    return werner_state(config.visibility, weighted_state(config))
