"""Slow inter-core phase drift and the spectrum of the resulting coincidences."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .measure import SeedLike, as_generator, physical_probabilities
from .qcore import DIM

DEFAULT_DT = 5.0
DEFAULT_DURATION = 7200.0
BAND_LIMIT_HZ = 0.008
# Fringe periods seen in the coincidences. At the X-basis operating points the
# coincidence rate is quadratic in the phase, so a phase oscillation of period
# T shows up at T/2; drive periods are therefore twice these. The lower bound
# sits one Hann main-lobe width (for a 2 h record) under the band limit.
FRINGE_PERIOD_RANGE = (130.0, 390.0)
MIN_SERIES_LENGTH = 16
WINDOWS = ("boxcar", "hann")


@dataclass(frozen=True)
class Sinusoid:
    """Phase oscillation ``offset + amplitude * sin(2 pi t / period + phase)`` on one core."""

    core: int
    period: float
    amplitude: float
    phase: float = 0.0
    offset: float = 0.0

    def __post_init__(self):
        if self.core not in range(DIM):
            raise ValueError(f"core {self.core} outside 0..{DIM - 1}")
        if not self.period > 0:
            raise ValueError("sinusoid period must be positive")

    def __call__(self, t: np.ndarray) -> np.ndarray:
        return self.offset + self.amplitude * np.sin(2 * np.pi * t / self.period + self.phase)


@dataclass(frozen=True)
class DriftModel:
    """Deterministic sinusoids plus an independent random walk on each core.

    ``diffusion`` is the random-walk rate in rad^2/s: increments over ``dt``
    have variance ``diffusion * dt``. ``base_phases`` is the static operating
    point (e.g. an X-basis phase table) the drift is added to.
    """

    sinusoids: Tuple[Sinusoid, ...] = ()
    diffusion: float = 0.0
    base_phases: Tuple[float, ...] = (0.0, 0.0, 0.0, 0.0)
    walk_cores: Tuple[int, ...] = (1, 2, 3)

    def __post_init__(self):
        if self.diffusion < 0:
            raise ValueError("diffusion rate must be nonnegative")
        if len(self.base_phases) != DIM:
            raise ValueError(f"base_phases needs {DIM} entries")

    def to_dict(self) -> dict:
        return {
            "sinusoids": [vars(s) for s in self.sinusoids],
            "diffusion": self.diffusion,
            "base_phases": list(self.base_phases),
            "walk_cores": list(self.walk_cores),
        }


def default_drift_model(seed: SeedLike = None, base_phases: Sequence[float] = (0.0, 0.0, 0.0, 0.0),
                        amplitude: float = 0.5, diffusion: float = 1e-6) -> DriftModel:
    """Laboratory-like drift: 1 to 3 slow core-phase oscillations and a weak random walk.

    Drive periods are drawn so the coincidence fringes fall between
    ``FRINGE_PERIOD_RANGE`` seconds; core 0 is the phase reference and each
    oscillation sits on its own core. Two tones on one core can beat almost to
    silence, leaving the broadband random walk to dominate the spectrum. The
    per-sinusoid amplitude shrinks as 1/sqrt(n) to bound the total excursion,
    which keeps higher-order mixing products out of the band above 0.008 Hz.
    """
    rng = as_generator(seed)
    n = int(rng.integers(1, DIM))
    cores = rng.permutation(np.arange(1, DIM))[:n]
    lo, hi = FRINGE_PERIOD_RANGE
    sins = tuple(
        Sinusoid(
            core=int(core),
            period=2.0 * float(rng.uniform(lo, hi)),
            amplitude=amplitude / np.sqrt(n) * float(rng.uniform(0.5, 1.0)),
            phase=float(rng.uniform(0, 2 * np.pi)),
        )
        for core in cores
    )
    return DriftModel(sins, diffusion, tuple(float(x) for x in base_phases))


@dataclass(frozen=True, eq=False)
class DriftTrace:
    dt: float
    phases: np.ndarray  # shape (N, 4)
    model: DriftModel = field(default_factory=DriftModel)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        phi = np.asarray(self.phases, dtype=float)
        if phi.ndim != 2 or phi.shape[1] != DIM or phi.shape[0] == 0:
            raise ValueError(f"phases must have shape (N, {DIM}) with N >= 1")
        object.__setattr__(self, "phases", phi)

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.phases)) * self.dt


def simulate_drift(model: DriftModel, duration: float, dt: float = DEFAULT_DT, seed: SeedLike = None) -> DriftTrace:
    """Sample core phases every ``dt`` seconds over ``duration``; reproducible under ``seed``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    if duration < dt:
        raise ValueError("duration must be at least one time step")
    n = int(np.floor(duration / dt + 1e-9))
    t = np.arange(n) * dt
    phi = np.tile(np.asarray(model.base_phases, dtype=float), (n, 1))
    for s in model.sinusoids:
        phi[:, s.core] += s(t)
    if model.diffusion > 0 and model.walk_cores:
        rng = as_generator(seed)
        steps = rng.normal(0.0, np.sqrt(model.diffusion * dt), size=(n, len(model.walk_cores)))
        steps[0] = 0.0
        phi[:, list(model.walk_cores)] += np.cumsum(steps, axis=0)
    return DriftTrace(dt, phi, model)


def coincidence_series(trace: DriftTrace, pair: Tuple[int, int]) -> np.ndarray:
    """Ideal-state coincidence probability for detectors ``pair`` at each sample."""
    j, k = pair
    if j not in range(DIM) or k not in range(DIM):
        raise ValueError(f"detector pair {pair} out of range")
    return physical_probabilities(trace.phases)[:, j, k]


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    """One-sided spectrum of a real series.

    ``magnitudes`` are ``|DFT|`` of the windowed series after removing its
    window-weighted mean ``m = sum(w x) / sum(w)``, in arbitrary units; the
    plain series mean is reported in ``dc``. ``power`` is scaled so its
    non-DC sum equals ``sum(w^2 (x - m)^2) / sum(w^2)``, which is the series
    variance for the boxcar window.
    """

    frequencies: np.ndarray
    magnitudes: np.ndarray
    power: np.ndarray
    dc: float
    dt: float
    n: int
    window: str = "boxcar"

    def dominant_frequency(self) -> float:
        """Frequency of the largest non-DC bin."""
        return float(self.frequencies[1 + np.argmax(self.magnitudes[1:])])

    def power_fraction_below(self, f_max: float) -> float:
        """Share of non-DC power at frequencies ``<= f_max``."""
        total = self.power[1:].sum()
        if total == 0:
            return 1.0
        sel = self.frequencies[1:] <= f_max
        return float(self.power[1:][sel].sum() / total)

    def to_csv(self, path: Optional[str] = None) -> str:
        lines = ["frequency_hz,magnitude"]
        lines += [f"{float(f)!r},{float(m)!r}" for f, m in zip(self.frequencies, self.magnitudes)]
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def spectrum(series, dt: float = DEFAULT_DT, window: str = "boxcar") -> SpectrumResult:
    """Magnitude and power spectrum of a uniformly sampled series.

    Use ``window="hann"`` when judging band limits on records that do not hold
    whole periods; the boxcar leaks slowly decaying sidelobes.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or x.size < MIN_SERIES_LENGTH:
        raise ValueError(f"spectrum needs a 1-d series of at least {MIN_SERIES_LENGTH} samples")
    if not dt > 0:
        raise ValueError("dt must be positive")
    if window not in WINDOWS:
        raise ValueError(f"window must be one of {WINDOWS}, got {window!r}")
    n = x.size
    w = np.ones(n) if window == "boxcar" else np.hanning(n)
    mean = float(x.mean())
    # removing the weighted mean empties the windowed DC bin, so no power hides there
    X = np.fft.rfft((x - np.sum(w * x) / np.sum(w)) * w)
    freqs = np.fft.rfftfreq(n, dt)
    power = np.abs(X) ** 2 / (n * np.sum(w**2))
    # fold negative frequencies into the one-sided bins (DC and Nyquist are unpaired)
    if n % 2 == 0:
        power[1:-1] *= 2
    else:
        power[1:] *= 2
    power[0] = mean**2
    return SpectrumResult(freqs, np.abs(X), power, mean, dt, n, window)


def pattern_power_fraction(trace: DriftTrace, f_max: float = BAND_LIMIT_HZ, window: str = "hann") -> float:
    """Share of non-DC power at or below ``f_max``, pooled over all 16 detector pairs.

    Pooling weights each pair by how much it actually moves. A pair parked at
    an interference extremum barely fluctuates, and its own fraction is then
    set by tiny residuals such as the broadband random walk.
    """
    P = physical_probabilities(trace.phases)
    total = None
    for j in range(DIM):
        for k in range(DIM):
            sp = spectrum(P[:, j, k], trace.dt, window=window)
            total = sp.power[1:] if total is None else total + sp.power[1:]
    if total.sum() == 0:
        return 1.0
    return float(total[sp.frequencies[1:] <= f_max].sum() / total.sum())


def series_to_csv(series, dt: float, path: Optional[str] = None) -> str:
    lines = ["time_s,value"] + [f"{float(i * dt)!r},{float(v)!r}" for i, v in enumerate(np.asarray(series, dtype=float))]
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
