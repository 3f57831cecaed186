"""Command line front end.

    mcfsource simulate   --config exp.toml --seed 7 --out run1
    mcfsource certify    --out run1
    mcfsource drift      --config exp.toml --out run1
    mcfsource linkbudget --min-rate 0.35 --arms 2
    mcfsource report     --config exp.toml --seed 7 --out run1

Exit codes: 0 success, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, ExperimentConfig, load_config
from .measure import CountDataError
from .pipeline import CERTIFY_BASES, run_certify, run_drift, run_linkbudget, run_report, run_simulate
from .qcore import InvariantError

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _pair(text: str):
    try:
        j, k = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("pair must look like 'j,k'") from None
    if not (0 <= j < 4 and 0 <= k < 4):
        raise argparse.ArgumentTypeError("detector indices must be 0..3")
    return (j, k)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML experiment configuration")
    common.add_argument("--seed", type=_u64, help="master seed (overrides the config)")
    common.add_argument("--out", type=Path, help="output directory (overrides output.dir)")

    p = argparse.ArgumentParser(prog="mcfsource", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", parents=[common], help="sample count tables for each basis")
    sim.add_argument("--visibility", type=float)
    sim.add_argument("--integration-time", type=float, help="seconds per basis")
    sim.add_argument("--rate", type=float, help="detected pairs per second")

    cert = sub.add_parser("certify", parents=[common], help="certify five count tables")
    cert.add_argument("--tables", type=Path, help="directory holding counts_<basis>.csv (default: --out)")
    for name in CERTIFY_BASES:
        cert.add_argument(f"--{name}", type=Path, metavar="CSV", help=f"count table for basis {name}")

    dr = sub.add_parser("drift", parents=[common], help="phase drift and coincidence spectrum")
    dr.add_argument("--duration", type=float)
    dr.add_argument("--dt", type=float)
    dr.add_argument("--basis", choices=("X0", "X1", "X2", "X3"))
    dr.add_argument("--pair", type=_pair)

    lb = sub.add_parser("linkbudget", parents=[common], help="rate versus fiber distance")
    lb.add_argument("--brightness", type=float)
    lb.add_argument("--pump-power", type=float)
    lb.add_argument("--bandwidth", type=float)
    lb.add_argument("--attenuation", type=float, help="dB/km per arm")
    lb.add_argument("--arms", type=int, choices=(1, 2))
    lb.add_argument("--efficiency", type=float, dest="coincidence_efficiency")
    lb.add_argument("--min-rate", type=float)
    lb.add_argument("--distance", type=float, help="km")

    sub.add_parser("report", parents=[common], help="simulate, certify, drift and link budget in one go")
    return p


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    cfg = cfg.with_seed(args.seed)
    if args.out is not None:
        cfg = replace(cfg, output_dir=str(args.out))
    return cfg


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    cmd = args.command
    try:
        if cmd == "simulate":
            if args.visibility is not None:
                cfg = replace(cfg, source=replace(cfg.source, visibility=args.visibility))
            m = {}
            if args.integration_time is not None:
                if args.integration_time < 0:
                    raise ConfigError("--integration-time must be nonnegative")
                m["integration_time"] = args.integration_time
            if args.rate is not None:
                if args.rate < 0:
                    raise ConfigError("--rate must be nonnegative")
                m["rate"] = args.rate
            cfg = replace(cfg, measurement=replace(cfg.measurement, **m))
        elif cmd == "drift":
            d = {k: getattr(args, k) for k in ("duration", "dt", "basis", "pair") if getattr(args, k) is not None}
            if d.get("dt", cfg.drift.dt) <= 0 or d.get("duration", cfg.drift.duration) < d.get("dt", cfg.drift.dt):
                raise ConfigError("drift needs dt > 0 and duration >= dt")
            cfg = replace(cfg, drift=replace(cfg.drift, **d))
        elif cmd == "linkbudget":
            keys = ("brightness", "pump_power", "bandwidth", "attenuation", "arms", "coincidence_efficiency", "min_rate")
            b = {k: getattr(args, k) for k in keys if getattr(args, k) is not None}
            cfg = replace(cfg, linkbudget=replace(cfg.linkbudget, **b))
            if args.distance is not None:
                if args.distance < 0:
                    raise ConfigError("--distance must be nonnegative")
                cfg = replace(cfg, distance=args.distance)
    except (ValueError, InvariantError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(_config(args), args)
        out = Path(cfg.output_dir)
        if args.command == "simulate":
            records = run_simulate(cfg, out)
            for name, rec in records.items():
                print(f"{name}: {rec.total} coincidences -> {out / f'counts_{name}.csv'}")
        elif args.command == "certify":
            explicit = {n: getattr(args, n) for n in CERTIFY_BASES if getattr(args, n) is not None}
            if explicit and len(explicit) != len(CERTIFY_BASES):
                raise CountDataError("give all five of --Z --X0 --X1 --X2 --X3, or none")
            if explicit:
                report = run_certify(paths=explicit, out_dir=out)
            else:
                report = run_certify(args.tables or out, out_dir=out)
            sys.stdout.write(report.summary())
        elif args.command == "drift":
            summary = run_drift(cfg, out)
            print(json.dumps({k: summary[k] for k in ("dominant_frequency_hz", "power_fraction_below_0.008_hz",
                                                  "pattern_power_fraction_below_0.008_hz")}))
        elif args.command == "linkbudget":
            result = run_linkbudget(cfg, args.out)
            print(json.dumps(result, indent=2, sort_keys=True))
        elif args.command == "report":
            run_report(cfg, out)
            sys.stdout.write((out / "report.txt").read_text())
    except ConfigError as exc:
        print(f"mcfsource: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CountDataError as exc:
        print(f"mcfsource: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
