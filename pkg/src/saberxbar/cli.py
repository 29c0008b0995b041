"""Command-line entry point.

Subcommands: verify, noise, sweep, cost, roundtrip.
Exit codes: 0 success, 1 verification/roundtrip failure, 2 configuration error.
"""

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import replace

from .costmodel import ArchConfig, estimate
from .experiments import (ConfigError, ExperimentConfig, load_config,
                          run_verify, run_noise, run_sweep, run_roundtrips,
                          default_sweep_points, sweep_to_csv, sweep_to_json,
                          noise_to_csv, noise_to_json, DEFAULT_VARIANCE_GRID)

EXIT_OK = 0
EXIT_VERIFY_FAILURE = 1
EXIT_CONFIG_ERROR = 2


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="flat key=value config file")
    common.add_argument("--seed", type=int, metavar="N",
                        help="master RNG seed (overrides config)")
    common.add_argument("--trials", type=int, metavar="N",
                        help="trial count (overrides config)")
    common.add_argument("--out", metavar="DIR",
                        help="directory for result files (default: stdout only)")
    common.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="result file format")
    parser = argparse.ArgumentParser(
        prog="saberxbar", parents=[common],
        description="SABER PKE on simulated memristor crossbars: "
                    "verification, noise Monte Carlo, and cost sweeps.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("verify", parents=[common],
                   help="run the oracle-equivalence suites")
    noise = sub.add_parser("noise", parents=[common],
                           help="decryption-failure Monte Carlo")
    noise.add_argument("--variances", metavar="CSV",
                       help="comma-separated cell-variance grid")
    noise.add_argument("--retries", metavar="CSV", default="0",
                       help="comma-separated retry budgets")
    sub.add_parser("sweep", parents=[common],
                   help="cost sweep over algorithms x architectures")
    sub.add_parser("cost", parents=[common],
                   help="cost report for the configured design point")
    sub.add_parser("roundtrip", parents=[common],
                   help="keygen/encrypt/decrypt roundtrips")
    return parser


def _load(args) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if args.config:
        cfg = load_config(args.config, cfg)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    return replace(cfg, **overrides) if overrides else cfg


def _emit(args, name: str, text: str) -> None:
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, f"{name}.{args.format}")
        with open(path, "w") as fh:
            fh.write(text)
        print(f"wrote {path}")
    else:
        print(text, end="")


def _cmd_verify(args, cfg: ExperimentConfig) -> int:
    report = run_verify(cfg)
    for suite in report.suites:
        status = "pass" if suite.passed else "FAIL"
        line = f"[{status}] {suite.name}"
        if suite.detail:
            line += f": {suite.detail}"
        print(line)
    return EXIT_OK if report.passed else EXIT_VERIFY_FAILURE


def _parse_grid(text: str, cast, what: str):
    try:
        values = tuple(cast(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise ConfigError(f"bad {what} grid {text!r}: {exc}") from exc
    if not values:
        raise ConfigError(f"{what} grid is empty")
    return values


def _cmd_noise(args, cfg: ExperimentConfig) -> int:
    variances = (DEFAULT_VARIANCE_GRID if args.variances is None
                 else _parse_grid(args.variances, float, "variance"))
    retries = _parse_grid(args.retries, int, "retries")
    curve = run_noise(cfg, variances, retries)
    text = noise_to_csv(curve) if args.format == "csv" else noise_to_json(curve)
    _emit(args, "noise", text)
    return EXIT_OK


def _cmd_sweep(args, cfg: ExperimentConfig) -> int:
    rows = run_sweep(default_sweep_points(cfg.operation), cfg.catalog)
    text = (sweep_to_csv(rows, cfg.catalog) if args.format == "csv"
            else sweep_to_json(rows, cfg.catalog))
    _emit(args, "sweep", text)
    return EXIT_OK


def _cmd_cost(args, cfg: ExperimentConfig) -> int:
    report = estimate(ArchConfig(cfg.operation, cfg.algorithm, cfg.architecture,
                                 cfg.params), cfg.catalog)
    payload = {
        "operation": cfg.operation.value,
        "algorithm": cfg.algorithm.value,
        "architecture": cfg.architecture.value,
        "latency_ns": report.latency_ns,
        "energy_pj": report.energy_pj,
        "total_energy_pj": report.total_energy_pj,
        "area_um2": report.area_um2,
        "total_area_um2": report.total_area_um2,
        "samples_converted": report.samples_converted,
        "cells_written": report.cells_written,
        "logical_cell_bits": report.logical_cell_bits,
        "ce_gbit_s_mm2": report.ce_gbit_s_mm2,
        "ee_gbit_j": report.ee_gbit_j,
        "catalog": dataclasses.asdict(cfg.catalog),
    }
    _emit(args, "cost", json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_roundtrip(args, cfg: ExperimentConfig) -> int:
    failures = run_roundtrips(cfg.trials, cfg.seed, params=cfg.params)
    print(f"{cfg.trials} roundtrips, {failures} failures")
    return EXIT_OK if failures == 0 else EXIT_VERIFY_FAILURE


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load(args)
        handler = {
            "verify": _cmd_verify,
            "noise": _cmd_noise,
            "sweep": _cmd_sweep,
            "cost": _cmd_cost,
            "roundtrip": _cmd_roundtrip,
        }[args.command]
        return handler(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
