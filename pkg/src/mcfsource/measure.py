"""Coincidence probabilities, photon-count sampling and distribution estimates."""

from __future__ import annotations

import csv
import io
import os
import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .devices import SPLITTER_SIGNS, PhaseVector
from .qcore import DIM, PAIR_DIM

EXACT_SUM_TOL = 1e-9
COUNT_HEADER = ("j", "k", "C", "a")

SeedLike = Union[None, int, np.random.SeedSequence, np.random.Generator]


class CountDataError(ValueError):
    """Count data that cannot be turned into a probability estimate."""


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """4x4 coincidence probabilities ``P[j, k]`` with their uncertainty.

    ``cov`` is the 16x16 covariance of ``P.ravel()``; all zeros for exact
    tables. ``origin`` records which model or estimator produced the table.
    """

    P: np.ndarray
    cov: np.ndarray
    origin: str = "exact"

    def __post_init__(self):
        p = np.array(self.P, dtype=float)
        if p.shape != (DIM, DIM):
            raise ValueError(f"P must be {DIM}x{DIM}, got {p.shape}")
        if np.any(p < 0):
            raise ValueError("probabilities must be nonnegative")
        cov = np.array(self.cov, dtype=float)
        if cov.shape != (PAIR_DIM, PAIR_DIM):
            raise ValueError(f"cov must be {PAIR_DIM}x{PAIR_DIM}, got {cov.shape}")
        total = p.sum()
        if not np.any(cov):
            if abs(total - 1.0) > EXACT_SUM_TOL:
                raise ValueError(f"exact distribution sums to {total!r}")
        else:
            spread = np.sqrt(max(np.ones(PAIR_DIM) @ cov @ np.ones(PAIR_DIM), 0.0))
            if abs(total - 1.0) > max(3 * spread, EXACT_SUM_TOL):
                raise ValueError(f"estimated distribution sums to {total!r}")
        p.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "P", p)
        object.__setattr__(self, "cov", cov)

    @classmethod
    def exact(cls, P, origin: str = "exact") -> "JointDistribution":
        return cls(P, np.zeros((PAIR_DIM, PAIR_DIM)), origin)

    @property
    def sigma(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.cov), 0.0, None)).reshape(DIM, DIM)

    @property
    def is_exact(self) -> bool:
        return not np.any(self.cov)


def physical_probabilities(phases) -> np.ndarray:
    """Co-propagation coincidence probabilities for the ideal source state.

    Both photons of a pair travel through the same core m and pick up
    ``exp(2i phi_m)`` before the splitter, so

        P[j, k] = |1/8 sum_m u[m, j] u[m, k] exp(2i phi_m)|^2

    ``phases`` may have shape ``(..., 4)``; the result has shape ``(..., 4, 4)``.
    """
    phi = np.asarray(phases, dtype=float)
    u = SPLITTER_SIGNS
    # w[m, j, k] = u[m, j] * u[m, k]
    w = u[:, :, None] * u[:, None, :]
    amp = np.einsum("...m,mjk->...jk", np.exp(2j * phi), w) / 8.0
    return np.abs(amp) ** 2


def physical_distribution(phases) -> JointDistribution:
    if not isinstance(phases, PhaseVector):
        phases = PhaseVector(phases)
    return JointDistribution.exact(physical_probabilities(phases.phi), origin="copropagation")


@dataclass(frozen=True, eq=False)
class CountRecord:
    """Raw coincidences ``C``, accidental estimates ``a`` and integration time."""

    C: np.ndarray
    a: np.ndarray
    integration_time: float = 0.0

    def __post_init__(self):
        c = np.array(self.C)
        if c.shape != (DIM, DIM):
            raise CountDataError(f"C must be {DIM}x{DIM}, got {c.shape}")
        if not np.all(np.isfinite(c)) or np.any(c < 0) or np.any(c != np.round(c)):
            raise CountDataError("coincidence counts must be nonnegative integers")
        a = np.broadcast_to(np.asarray(self.a, dtype=float), (DIM, DIM)).copy()
        if not np.all(np.isfinite(a)) or np.any(a < 0):
            raise CountDataError("accidental counts must be nonnegative")
        if not self.integration_time >= 0:
            raise CountDataError("integration time must be nonnegative")
        c = c.astype(np.int64)
        c.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "C", c)
        object.__setattr__(self, "a", a)

    @property
    def raw_corrected(self) -> np.ndarray:
        return self.C - self.a

    @property
    def clamped(self) -> np.ndarray:
        """Mask of entries whose corrected count went negative."""
        return self.raw_corrected < 0

    @property
    def corrected(self) -> np.ndarray:
        return np.clip(self.raw_corrected, 0.0, None)

    @property
    def total(self) -> int:
        return int(self.C.sum())

    def to_csv(self, path: Union[str, os.PathLike, None] = None) -> str:
        """Write the 16-row ``j,k,C,a`` table; returns the text."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COUNT_HEADER)
        for j in range(DIM):
            for k in range(DIM):
                writer.writerow([j, k, int(self.C[j, k]), repr(float(self.a[j, k]))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, source, integration_time: float = 0.0) -> "CountRecord":
        """Parse a count table from a path or text.

        Raises :class:`CountDataError` naming the offending row and column.
        """
        if isinstance(source, os.PathLike) or (isinstance(source, str) and "\n" not in source):
            label = os.fspath(source)
            try:
                with open(source, newline="") as fh:
                    text = fh.read()
            except OSError as exc:
                raise CountDataError(f"{label}: cannot read count table: {exc.strerror}") from None
        else:
            text = str(source)
            label = "<text>"
        rows = [r for r in csv.reader(io.StringIO(text)) if any(cell.strip() for cell in r)]
        if not rows:
            raise CountDataError(f"{label}: empty count table")
        header = tuple(cell.strip() for cell in rows[0])
        if header != COUNT_HEADER:
            raise CountDataError(f"{label}: row 1: header must be {','.join(COUNT_HEADER)}, got {','.join(header)}")
        body = rows[1:]
        if len(body) != PAIR_DIM:
            raise CountDataError(f"{label}: expected {PAIR_DIM} data rows, found {len(body)}")
        C = np.full((DIM, DIM), -1, dtype=np.int64)
        a = np.zeros((DIM, DIM))
        for lineno, row in enumerate(body, start=2):
            if len(row) != 4:
                raise CountDataError(f"{label}: row {lineno}: expected 4 columns, got {len(row)}")
            try:
                j, k = int(row[0]), int(row[1])
            except ValueError:
                raise CountDataError(f"{label}: row {lineno}: j,k must be integers") from None
            if not (0 <= j < DIM and 0 <= k < DIM):
                raise CountDataError(f"{label}: row {lineno}: index ({j},{k}) out of range")
            if C[j, k] >= 0:
                raise CountDataError(f"{label}: row {lineno}: duplicate entry ({j},{k})")
            try:
                count = float(row[2])
            except ValueError:
                raise CountDataError(f"{label}: row {lineno}, column C: not a number: {row[2]!r}") from None
            if count < 0 or count != round(count):
                raise CountDataError(f"{label}: row {lineno}, column C: must be a nonnegative integer")
            try:
                acc = float(row[3])
            except ValueError:
                raise CountDataError(f"{label}: row {lineno}, column a: not a number: {row[3]!r}") from None
            if not np.isfinite(acc) or acc < 0:
                raise CountDataError(f"{label}: row {lineno}, column a: must be finite and nonnegative")
            C[j, k] = int(round(count))
            a[j, k] = acc
        return cls(C, a, integration_time)


def as_generator(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def spawn_seeds(seed: SeedLike, n: int) -> list:
    """Independent child streams; the list is reproducible from ``seed``."""
    if isinstance(seed, np.random.Generator):
        return seed.spawn(n)
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.default_rng(child) for child in ss.spawn(n)]


def expected_counts(P, rate: float, time: float, accidental_rate=0.0,
                    transmittance: Optional[np.ndarray] = None) -> np.ndarray:
    """Mean coincidences per entry: signal through the loss map plus background."""
    p = P.P if isinstance(P, JointDistribution) else np.asarray(P, dtype=float)
    signal = p * rate * time
    if transmittance is not None:
        signal = signal * np.asarray(transmittance, dtype=float)
    return signal + np.broadcast_to(np.asarray(accidental_rate, dtype=float), (DIM, DIM)) * time


def sample_counts(P, rate: float, time: float, accidental_rate=0.0, seed: SeedLike = None,
                  transmittance: Optional[np.ndarray] = None) -> CountRecord:
    """Poisson coincidence counts for one integration window.

    ``accidental_rate`` is counts/s, scalar or per (j, k). The recorded
    accidental estimate is its mean ``accidental_rate * time``.
    """
    if rate < 0 or time < 0:
        raise ValueError("rate and time must be nonnegative")
    acc = np.broadcast_to(np.asarray(accidental_rate, dtype=float), (DIM, DIM))
    if np.any(acc < 0):
        raise ValueError("accidental rates must be nonnegative")
    lam = expected_counts(P, rate, time, acc, transmittance)
    rng = as_generator(seed)
    return CountRecord(rng.poisson(lam), acc * time, time)


def estimate_distribution(counts: CountRecord) -> JointDistribution:
    """Normalize accidental-corrected counts, with first-order Poisson errors.

    Raw counts carry variance ``C``; accidentals are treated as known. The
    covariance includes the correlations introduced by normalization.
    """
    if np.any(counts.clamped):
        idx = [tuple(map(int, x)) for x in np.argwhere(counts.clamped)]
        warnings.warn(f"negative corrected counts clamped to zero at {idx}", RuntimeWarning, stacklevel=2)
    cc = counts.corrected.ravel()
    total = cc.sum()
    if not total > 0:
        raise CountDataError("no coincidences left after accidental subtraction; cannot estimate")
    p = cc / total
    var_c = np.where(counts.clamped.ravel(), 0.0, counts.C.ravel().astype(float))
    jac = (np.eye(PAIR_DIM) - p[:, None]) / total
    cov = (jac * var_c) @ jac.T
    return JointDistribution(p.reshape(DIM, DIM), cov, origin="estimated")
