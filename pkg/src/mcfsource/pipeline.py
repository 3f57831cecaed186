"""Experiment orchestration: simulate count tables, certify them, write outputs."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from dataclasses import asdict
from pathlib import Path
from typing import Dict, Mapping, Optional

import numpy as np

from . import __version__
from .certify import X_NAMES, CertificationReport, certify_tables
from .config import ExperimentConfig
from .devices import X_PHASES, basis, demux_loss, phase_basis
from .drift import (
    BAND_LIMIT_HZ,
    coincidence_series,
    default_drift_model,
    pattern_power_fraction,
    series_to_csv,
    simulate_drift,
    spectrum,
)
from .linkbudget import max_distance, rate_at_distance
from .measure import CountDataError, CountRecord, JointDistribution, estimate_distribution, sample_counts
from .qcore import DIM, born_joint_distribution
from .source import source_state

CERTIFY_BASES = ("Z", *X_NAMES)
TENSOR_MODEL = "tensor-product Born rule on the source state"


def counts_path(out_dir, name: str) -> Path:
    return Path(out_dir) / f"counts_{name}.csv"


def exact_path(out_dir, name: str) -> Path:
    return Path(out_dir) / f"exact_{name}.csv"


def exact_table_csv(P: np.ndarray) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("j", "k", "P"))
    for j in range(DIM):
        for k in range(DIM):
            writer.writerow((j, k, repr(float(P[j, k]))))
    return buf.getvalue()


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _measurement_basis(config: ExperimentConfig, name: str):
    m = config.measurement
    if name in m.custom_bases:
        return phase_basis(m.custom_bases[name], name=name, splitter=m.splitter)
    return basis(name, splitter=m.splitter)


def exact_tables(config: ExperimentConfig) -> Dict[str, JointDistribution]:
    state = source_state(config.source)
    out = {}
    for name in config.measurement.bases:
        u = _measurement_basis(config, name).unitary
        dist = born_joint_distribution(state, u, u)
        out[name] = JointDistribution.exact(dist.P, origin=TENSOR_MODEL)
    return out


def simulate_counts(config: ExperimentConfig) -> Dict[str, CountRecord]:
    """One count record per configured basis, each from its own seed stream."""
    m = config.measurement
    exact = exact_tables(config)
    # spawn a fixed number of streams so adding a basis never reshuffles the others
    streams = np.random.SeedSequence(m.seed).spawn(max(len(m.bases), 16))
    transmittance = demux_loss(m.demux_transmittance)
    rate = config.detected_rate
    return {
        name: sample_counts(exact[name], rate, m.integration_time, m.accidental_rate,
                            np.random.default_rng(streams[i]), transmittance)
        for i, name in enumerate(m.bases)
    }


def run_simulate(config: ExperimentConfig, out_dir=None) -> Dict[str, CountRecord]:
    """Write ``counts_<basis>.csv``, ``exact_<basis>.csv`` and ``simulate.json``."""
    out = Path(out_dir or config.output_dir)
    records = simulate_counts(config)
    exact = exact_tables(config)
    for name, rec in records.items():
        _write(counts_path(out, name), rec.to_csv())
        _write(exact_path(out, name), exact_table_csv(exact[name].P))
    manifest = {
        "tool": f"mcfsource {__version__}",
        "seed": config.measurement.seed,
        "bases": list(config.measurement.bases),
        "table_model": TENSOR_MODEL,
        "integration_time_s": config.measurement.integration_time,
        "detected_pair_rate": config.detected_rate,
        "source": asdict(config.source),
        "total_counts": {name: rec.total for name, rec in records.items()},
    }
    _write(out / "simulate.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return records


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def load_count_tables(paths: Mapping[str, os.PathLike]) -> Dict[str, CountRecord]:
    return {name: CountRecord.from_csv(Path(p)) for name, p in paths.items()}


def certify_counts(records: Mapping[str, CountRecord], provenance: Optional[dict] = None) -> CertificationReport:
    missing = [n for n in CERTIFY_BASES if n not in records]
    if missing:
        raise CountDataError(f"missing count tables for bases: {', '.join(missing)}")
    tables = {}
    for name in CERTIFY_BASES:
        try:
            tables[name] = estimate_distribution(records[name])
        except CountDataError as exc:
            raise CountDataError(f"basis {name}: {exc}") from None
    prov = {"total_counts": {n: records[n].total for n in CERTIFY_BASES}}
    if provenance:
        prov.update(provenance)
    return certify_tables(tables, prov)


def run_certify(table_dir=None, paths: Optional[Mapping[str, os.PathLike]] = None, out_dir=None) -> CertificationReport:
    """Certify the five count tables and write ``report.json`` and ``report.txt``.

    Tables come from ``paths`` or, by default, ``counts_<basis>.csv`` in
    ``table_dir``. A ``simulate.json`` beside them supplies the table model.
    """
    if paths is None:
        if table_dir is None:
            raise ValueError("give a table directory or explicit paths")
        paths = {name: counts_path(table_dir, name) for name in CERTIFY_BASES}
    paths = {n: Path(p) for n, p in paths.items()}
    for name, p in paths.items():
        if not p.exists():
            raise CountDataError(f"basis {name}: count table {p} not found")
    records = load_count_tables(paths)

    prov = {
        "tool": f"mcfsource {__version__}",
        "inputs": {n: {"file": p.name, "sha256": _sha256(p)} for n, p in sorted(paths.items())},
        "table_model": "external data",
    }
    manifest = Path(next(iter(paths.values()))).parent / "simulate.json"
    if manifest.exists():
        meta = json.loads(manifest.read_text())
        prov["table_model"] = meta.get("table_model", prov["table_model"])
        prov["simulation_seed"] = meta.get("seed")
    report = certify_counts(records, prov)
    target = Path(out_dir) if out_dir is not None else Path(table_dir or next(iter(paths.values())).parent)
    _write(target / "report.json", report.to_json() + "\n")
    _write(target / "report.txt", report.summary())
    return report


def run_drift(config: ExperimentConfig, out_dir=None) -> dict:
    """Drift trace, coincidence series and spectrum for one detector pair."""
    d = config.drift
    seeds = np.random.SeedSequence(d.seed).spawn(2)
    model = default_drift_model(np.random.default_rng(seeds[0]), X_PHASES[d.basis], d.amplitude, d.diffusion)
    trace = simulate_drift(model, d.duration, d.dt, np.random.default_rng(seeds[1]))
    series = coincidence_series(trace, d.pair)
    sp = spectrum(series, d.dt, window=d.window)
    summary = {
        "basis": d.basis,
        "pair": list(d.pair),
        "dt_s": d.dt,
        "samples": int(series.size),
        "window": d.window,
        "dominant_frequency_hz": sp.dominant_frequency(),
        "power_fraction_below_0.008_hz": sp.power_fraction_below(BAND_LIMIT_HZ),
        "pattern_power_fraction_below_0.008_hz": pattern_power_fraction(trace, BAND_LIMIT_HZ, d.window),
        "magnitude_units": "arbitrary",
        "power_normalization": "non-DC power sums to the (window-weighted) variance of the series",
        "model": model.to_dict(),
        "seed": d.seed,
    }
    if out_dir is not None:
        out = Path(out_dir)
        _write(out / "drift_series.csv", series_to_csv(series, d.dt))
        _write(out / "drift_spectrum.csv", sp.to_csv())
        _write(out / "drift.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def run_linkbudget(config: ExperimentConfig, out_dir=None) -> dict:
    b = config.linkbudget
    result = {"budget": asdict(b), "distance_km": config.distance,
              "rate_at_distance": rate_at_distance(b, config.distance)}
    if b.attenuation > 0 and b.min_rate > 0:
        md = max_distance(b)
        result["max_distance_km"] = md.km
        result["min_rate_reachable"] = md.reachable
    if out_dir is not None:
        _write(Path(out_dir) / "linkbudget.json", json.dumps(result, indent=2, sort_keys=True) + "\n")
    return result


def run_report(config: ExperimentConfig, out_dir=None) -> dict:
    out = Path(out_dir or config.output_dir)
    run_simulate(config, out)
    report = run_certify(out)
    drift = run_drift(config, out)
    link = run_linkbudget(config, out)
    return {"certification": report.to_dict(), "drift": drift, "linkbudget": link}
