"""Dense linear algebra over the four-core path basis.

Single-photon states live in C^4 (one basis vector per fiber core) and
photon pairs in C^4 (x) C^4, flattened row-major so that index ``4*j + k``
holds the amplitude of ``|j>_A |k>_B``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

DIM = 4
PAIR_DIM = DIM * DIM

NORM_TOL = 1e-12
UNITARY_TOL = 1e-10
EIGEN_FLOOR = -1e-10


class InvariantError(ValueError):
    """A state or operator failed its validity check."""


def _as_matrix(entries, shape, name):
    arr = np.array(entries, dtype=complex)
    if arr.shape != shape:
        raise InvariantError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvariantError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LocalUnitary:
    """A 4x4 unitary acting on one photon's core index."""

    matrix: np.ndarray

    def __post_init__(self):
        m = _as_matrix(self.matrix, (DIM, DIM), "LocalUnitary")
        err = np.max(np.abs(m.conj().T @ m - np.eye(DIM)))
        if err > UNITARY_TOL:
            raise InvariantError(f"matrix is not unitary: max|U^H U - I| = {err:.3e}")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls) -> "LocalUnitary":
        return cls(np.eye(DIM))

    def __matmul__(self, other: "LocalUnitary") -> "LocalUnitary":
        return LocalUnitary(self.matrix @ other.matrix)


@dataclass(frozen=True, eq=False)
class TwoPhotonState:
    """Pure or mixed state of a photon pair over the 16-dim core-pair basis.

    Build with :meth:`pure` or :meth:`mixed`; exactly one of ``amplitudes``
    and ``rho`` is set.
    """

    amplitudes: Optional[np.ndarray] = None
    rho: Optional[np.ndarray] = None

    def __post_init__(self):
        if (self.amplitudes is None) == (self.rho is None):
            raise InvariantError("give exactly one of amplitudes or rho")
        if self.amplitudes is not None:
            psi = _as_matrix(np.ravel(self.amplitudes), (PAIR_DIM,), "amplitudes")
            norm = float(np.vdot(psi, psi).real)
            if abs(norm - 1.0) > NORM_TOL:
                raise InvariantError(f"amplitudes not normalized: sum |c|^2 = {norm!r}")
            object.__setattr__(self, "amplitudes", psi)
        else:
            rho = _as_matrix(self.rho, (PAIR_DIM, PAIR_DIM), "rho")
            herm = np.max(np.abs(rho - rho.conj().T))
            if herm > NORM_TOL:
                raise InvariantError(f"rho is not Hermitian (max deviation {herm:.3e})")
            tr = np.trace(rho).real
            if abs(tr - 1.0) > NORM_TOL:
                raise InvariantError(f"rho has trace {tr!r}, expected 1")
            lam = np.linalg.eigvalsh(rho).min()
            if lam < EIGEN_FLOOR:
                raise InvariantError(f"rho has negative eigenvalue {lam:.3e}")
            object.__setattr__(self, "rho", rho)

    @classmethod
    def pure(cls, amplitudes) -> "TwoPhotonState":
        """From 16 amplitudes, or a 4x4 array ``c[j, k]``."""
        return cls(amplitudes=np.asarray(amplitudes, dtype=complex).ravel())

    @classmethod
    def mixed(cls, rho) -> "TwoPhotonState":
        return cls(rho=rho)

    @property
    def is_pure(self) -> bool:
        return self.amplitudes is not None

    def density_matrix(self) -> np.ndarray:
        if self.is_pure:
            return np.outer(self.amplitudes, self.amplitudes.conj())
        return self.rho

    def coefficient_table(self) -> np.ndarray:
        """Amplitudes reshaped to ``c[j, k]`` (pure states only)."""
        if not self.is_pure:
            raise InvariantError("mixed state has no amplitude table")
        return self.amplitudes.reshape(DIM, DIM)


def basis_state(j: int, k: int) -> TwoPhotonState:
    """Product state ``|j>_A |k>_B``."""
    for idx in (j, k):
        if idx not in range(DIM):
            raise InvariantError(f"core label {idx} outside 0..{DIM - 1}")
    psi = np.zeros(PAIR_DIM, dtype=complex)
    psi[DIM * j + k] = 1.0
    return TwoPhotonState.pure(psi)


def tensor_apply(u_a: LocalUnitary, u_b: LocalUnitary, state: TwoPhotonState) -> TwoPhotonState:
    """Apply ``U_A (x) U_B`` to a pair state, keeping its pure/mixed form."""
    if state.is_pure:
        c = state.coefficient_table()
        return TwoPhotonState.pure(u_a.matrix @ c @ u_b.matrix.T)
    m = np.kron(u_a.matrix, u_b.matrix)
    rho = m @ state.rho @ m.conj().T
    # re-symmetrize so rounding does not trip the Hermiticity check
    return TwoPhotonState.mixed(0.5 * (rho + rho.conj().T))


def born_probabilities(state: TwoPhotonState, basis_a: LocalUnitary, basis_b: LocalUnitary) -> np.ndarray:
    """Outcome table ``P[j, k] = |<j|<k| (A (x) B) |psi>|^2`` as a 4x4 array."""
    if state.is_pure:
        c = basis_a.matrix @ state.coefficient_table() @ basis_b.matrix.T
        p = np.abs(c) ** 2
    else:
        m = np.kron(basis_a.matrix, basis_b.matrix)
        # diag(M rho M^H) without forming the full product
        p = np.einsum("ij,jk,ik->i", m, state.rho, m.conj()).real.reshape(DIM, DIM)
    return np.clip(p, 0.0, None)


def born_joint_distribution(state: TwoPhotonState, basis_a: LocalUnitary, basis_b: LocalUnitary):
    """Exact joint outcome distribution for local measurements on both photons."""
    from .measure import JointDistribution

    return JointDistribution.exact(born_probabilities(state, basis_a, basis_b))


def fidelity_direct(state: TwoPhotonState, target: TwoPhotonState) -> float:
    """Overlap ``<target| rho |target>`` with a pure target."""
    if not target.is_pure:
        raise InvariantError("fidelity target must be a pure state")
    t = target.amplitudes
    if state.is_pure:
        f = abs(np.vdot(t, state.amplitudes)) ** 2
    else:
        f = np.vdot(t, state.rho @ t).real
    return float(min(max(f, 0.0), 1.0))
