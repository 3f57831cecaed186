"""Optical elements: the four-core fiber beam splitter, core phases, demux loss."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .qcore import DIM, InvariantError, LocalUnitary

# Sign pattern u[k, j] of the symmetric four-port splitter.
SPLITTER_SIGNS = np.array(
    [
        [1, 1, 1, 1],
        [1, 1, -1, -1],
        [1, -1, 1, -1],
        [1, -1, -1, 1],
    ],
    dtype=int,
)
SPLITTER_SIGNS.setflags(write=False)

# Measured pump split ratios of the 775 nm splitter.
MEASURED_PUMP_SPLIT = (0.2379, 0.2488, 0.2719, 0.2414)

# Per-core phase tables selecting the four X bases.
X_PHASES = {
    "X0": (0.0, 0.0, 0.0, 0.0),
    "X1": (0.0, np.pi, np.pi / 2, np.pi / 2),
    "X2": (0.0, np.pi / 2, np.pi, np.pi / 2),
    "X3": (0.0, np.pi / 2, np.pi / 2, np.pi),
}
BASIS_NAMES = ("Z", "X0", "X1", "X2", "X3")


class SplitterMatrix(LocalUnitary):
    """Transfer matrix of a four-core splitter (a validated unitary)."""

    @property
    def signs(self) -> np.ndarray:
        """Entry signs, meaningful for the real +-1/2 nominal device."""
        return np.sign(self.matrix.real).astype(int)


def ideal_4cfbs() -> SplitterMatrix:
    return SplitterMatrix(0.5 * SPLITTER_SIGNS)


@dataclass(frozen=True, eq=False)
class PhaseVector:
    """Per-core phases in radians; stored as given, compared modulo 2 pi."""

    phi: np.ndarray

    def __post_init__(self):
        phi = np.array(self.phi, dtype=float).reshape(-1)
        if phi.shape != (DIM,):
            raise InvariantError(f"need {DIM} core phases, got {phi.size}")
        if not np.all(np.isfinite(phi)):
            raise InvariantError("core phases must be finite")
        phi.setflags(write=False)
        object.__setattr__(self, "phi", phi)

    def __eq__(self, other):
        if not isinstance(other, PhaseVector):
            return NotImplemented
        d = np.angle(np.exp(1j * (self.phi - other.phi)))
        return bool(np.all(np.abs(d) < 1e-12))

    def shifted(self, delta: float) -> "PhaseVector":
        return PhaseVector(self.phi + delta)

    @property
    def phasors(self) -> np.ndarray:
        return np.exp(1j * self.phi)


@dataclass(frozen=True, eq=False)
class MeasurementBasis:
    """A named projective measurement on one photon.

    Row ``j`` of ``unitary.matrix`` gives the amplitudes routed to detector j.
    ``phases`` is None for the Z basis.
    """

    name: str
    unitary: LocalUnitary
    phases: Optional[PhaseVector] = None

    @property
    def matrix(self) -> np.ndarray:
        return self.unitary.matrix


def phase_basis(phases: Union[PhaseVector, Sequence[float]], name: str = "custom",
                splitter: Optional[SplitterMatrix] = None) -> MeasurementBasis:
    """Splitter preceded by per-core phase shifts: ``U_BS diag(exp(i phi))``."""
    if not isinstance(phases, PhaseVector):
        phases = PhaseVector(phases)
    u = ideal_4cfbs() if splitter is None else splitter
    return MeasurementBasis(name, LocalUnitary(u.matrix @ np.diag(phases.phasors)), phases)


def basis(name: str, splitter: Optional[SplitterMatrix] = None) -> MeasurementBasis:
    """One of the five standard bases ``Z, X0, X1, X2, X3``."""
    if name == "Z":
        return MeasurementBasis("Z", LocalUnitary.identity())
    if name in X_PHASES:
        return phase_basis(X_PHASES[name], name=name, splitter=splitter)
    raise ValueError(f"unknown basis {name!r}; expected one of {', '.join(BASIS_NAMES)}")


def demux_loss(per_core_transmittance: Sequence[float]) -> np.ndarray:
    """Coincidence transmittance map ``T[j, k] = t_j * t_k``.

    Multiplies expected coincidence rates; distributions are renormalized only
    when estimated from counts.
    """
    t = np.asarray(per_core_transmittance, dtype=float)
    if t.shape != (DIM,):
        raise ValueError(f"need {DIM} transmittances, got shape {t.shape}")
    if np.any(~np.isfinite(t)) or np.any(t < 0) or np.any(t > 1):
        raise ValueError(f"transmittances must lie in [0, 1], got {t.tolist()}")
    return np.outer(t, t)
