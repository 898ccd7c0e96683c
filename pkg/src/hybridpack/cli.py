"""
Command-line front end.

    hybridpack simulate --config pack.yaml --out run/
    hybridpack figures --out figs/
    hybridpack sweep --config sweep.yaml --out sweep/ --workers 4

Exit codes: 0 ok, 2 config error, 3 numerical/stability error,
4 infeasible pack voltage.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .config import ConfigError, config_hash, expand_sweep, load_config, load_raw
from .diffusion import StabilityError
from .electrochem import pack_specific_energy
from .engine import InfeasibleError, PackConfig, SimulationTrace, run_simulation
from .figures import fmt, write_csv, write_figures

logger = logging.getLogger("hybridpack")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_INFEASIBLE = 4

TRACE_SCHEMA_VERSION = 1
CLUSTER_COLUMNS = ("mode", "current", "surface", "temperature", "resistance", "soc")
EVENTS_HEADER = ["time_s", "cluster_id", "event", "reason"]


def trace_header(trace: SimulationTrace) -> list[str]:
    header = ["time_s", "applied_level", "pack_voltage"]
    for cid in trace.cluster_ids:
        header += [f"cluster{cid}_{col}" for col in CLUSTER_COLUMNS]
    for name in sorted(trace.capacity):
        header += [f"capacity_{name}_pct", f"cycles_{name}"]
    return header


def trace_rows(trace: SimulationTrace):
    for r in range(len(trace.time)):
        row = [fmt(trace.time[r]), fmt(trace.applied_level[r]), fmt(trace.pack_voltage[r])]
        for j in range(len(trace.cluster_ids)):
            row += [
                "REST" if trace.mode[r, j] else "ACTIVE",
                fmt(trace.cluster_current[r, j]),
                fmt(trace.surface_concentration[r, j]),
                fmt(trace.temperature[r, j]),
                fmt(trace.resistance[r, j]),
                fmt(trace.soc[r, j]),
            ]
        for name in sorted(trace.capacity):
            row += [fmt(trace.capacity[name][r]), fmt(trace.cycles[name][r])]
        yield row


def summarize(config: PackConfig, trace: SimulationTrace) -> dict:
    return {
        "protocol": type(config.protocol).__name__,
        "pack_specific_energy_wh_per_kg": pack_specific_energy(config.composition),
        "final_capacity_pct": {name: float(v[-1]) if len(v) else None for name, v in sorted(trace.capacity.items())},
        "peak_surface_concentration": trace.peak_surface_concentration,
        "rest_event_count": trace.rest_event_count,
        "total_rest_time_s": float(sum(trace.rest_time)),
        "dt_s": trace.dt,
        "samples": int(len(trace.time)),
    }


def _write_manifest(out: Path, config: PackConfig, started: float, outputs, summary) -> Path:
    manifest = {
        "tool": "hybridpack",
        "version": __version__,
        "trace_schema_version": TRACE_SCHEMA_VERSION,
        "config_hash": config_hash(config),
        "wall_clock_s": time.perf_counter() - started,
        "outputs": [p.name for p in outputs],
        "summary": summary,
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def cmd_simulate(config_path: str, out_dir: str) -> int:
    started = time.perf_counter()
    config = load_config(config_path)
    trace = run_simulation(config)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trace_path = out / "trace.csv"
    write_csv(trace_path, trace_header(trace), trace_rows(trace))
    events_path = out / "events.csv"
    write_csv(events_path, EVENTS_HEADER,
              ([fmt(e.time), str(e.cluster_id), e.event, e.reason] for e in trace.events))
    _write_manifest(out, config, started, [trace_path, events_path], summarize(config, trace))
    logger.info("wrote %s and %s", trace_path, events_path)
    return EXIT_OK


def cmd_figures(out_dir: str, charge_matched: bool = False) -> int:
    for p in write_figures(out_dir, charge_matched):
        logger.info("wrote %s", p)
    return EXIT_OK


def _run_summary(config: PackConfig) -> dict:
    return summarize(config, run_simulation(config))


def cmd_sweep(config_path: str, out_dir: str, workers: int = 1) -> int:
    started = time.perf_counter()
    raw = load_raw(config_path)
    try:
        names, grid, configs = expand_sweep(raw)
    except ConfigError as exc:
        raise ConfigError(f"{config_path}: {exc}") from None
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            summaries = list(pool.map(_run_summary, configs))
    else:
        summaries = [_run_summary(c) for c in configs]

    chems = sorted(summaries[0]["final_capacity_pct"])
    header = ["run", *names, "pack_specific_energy_wh_per_kg",
              *[f"final_capacity_{c}_pct" for c in chems],
              "peak_surface_concentration", "rest_event_count", "total_rest_time_s", "config_hash"]
    rows = []
    for i, (values, summary, cfg) in enumerate(zip(grid, summaries, configs)):
        rows.append([
            str(i),
            *[v if isinstance(v, str) else fmt(v) for v in values],
            fmt(summary["pack_specific_energy_wh_per_kg"]),
            *[fmt(summary["final_capacity_pct"][c]) for c in chems],
            fmt(summary["peak_surface_concentration"]),
            str(summary["rest_event_count"]),
            fmt(summary["total_rest_time_s"]),
            config_hash(cfg),
        ])
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary_path = out / "summary.csv"
    write_csv(summary_path, header, rows)
    manifest = {
        "tool": "hybridpack",
        "version": __version__,
        "wall_clock_s": time.perf_counter() - started,
        "outputs": [summary_path.name],
        "runs": [{"parameters": dict(zip(names, values)), "config_hash": config_hash(cfg)}
                 for values, cfg in zip(grid, configs)],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybridpack", description="Hybrid energy/power battery pack simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one pack simulation")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seedless", action="store_true", help="reserved; all runs are deterministic")

    p = sub.add_parser("figures", help="write fig1.csv, fig2.csv, fig3.csv")
    p.add_argument("--out", required=True)
    p.add_argument("--charge-matched", action="store_true",
                   help="set the constant-flux level to the pulse time-average")
    p.add_argument("--seedless", action="store_true", help="reserved; all runs are deterministic")

    p = sub.add_parser("sweep", help="run a Cartesian parameter sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seedless", action="store_true", help="reserved; all runs are deterministic")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "simulate":
            return cmd_simulate(args.config, args.out)
        if args.command == "figures":
            return cmd_figures(args.out, args.charge_matched)
        if args.workers < 1:
            raise ConfigError(f"--workers must be >= 1 (got {args.workers})")
        return cmd_sweep(args.config, args.out, args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StabilityError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
