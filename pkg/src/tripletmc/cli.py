"""Command line driver: ``tripletmc {run, sweep-r, ed} --config FILE``.

Exit status is 0 on success, 2 for an unusable configuration (including
sectors too large for the requested operation) and 3 when a simulation
aborts because the ensemble died or the free-evolution resolvent is singular.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import ed
from .config import ConfigError, RunConfig, config_echo, load_config
from .engine import EngineError, run_simulation
from .hamiltonians import make_model
from .lattice import CapacityError

log = logging.getLogger("tripletmc")

SERIES_HEADER = "loop,shift,population,triplet_count,trace,energy_numerator,energy"
EXIT_CONFIG = 2
EXIT_RUN = 3


def _fmt(x: float) -> str:
    return repr(float(x))


def write_series(path: Path, records) -> None:
    """One row per loop; the energy column is ``NA`` when the trace vanished."""
    lines = [SERIES_HEADER]
    for r in records:
        energy = _fmt(r.energy_numerator / r.trace) if r.trace != 0 else "NA"
        lines.append(f"{r.loop},{_fmt(r.shift)},{_fmt(r.population)},{r.triplet_count},"
                     f"{_fmt(r.trace)},{_fmt(r.energy_numerator)},{energy}")
    path.write_text("\n".join(lines) + "\n")


def _finite_or_none(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def run_command(cfg: RunConfig, out_dir: Path, threads: int) -> dict:
    model = make_model(cfg.model)
    records, s = run_simulation(model, cfg.engine, threads=threads)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_series(out_dir / cfg.output.series, records)
    summary = {
        "E_mean": _finite_or_none(s.energy_mean),
        "E_error": _finite_or_none(s.energy_error),
        "S_mean": _finite_or_none(s.shift_mean),
        "S_error": _finite_or_none(s.shift_error),
        "S_final": s.final_shift,
        "final_population": s.final_population,
        "final_triplet_count": s.final_triplet_count,
        "shift_armed_at": s.shift_armed_at,
        "n_loops": len(records),
        "n_sampling": s.n_sampling,
        "seed": cfg.engine.rng_seed,
        "wall_time": s.wall_time,
        "config": config_echo(cfg),
    }
    (out_dir / cfg.output.summary).write_text(json.dumps(summary, indent=2) + "\n")
    return summary


@dataclass
class SweepRow:
    r: float
    completed: int
    failed: int
    mean_energy: float
    variance: float
    relative_variance: float


def sweep_r(cfg: RunConfig, r_list, replicas: int, *, threads: int = 1, estimator: str = "projected",
            fit_window=(0.0, math.inf)):
    """Replica variance of the energy estimate for each ``r``.

    Every replica uses the base configuration with its own seed (base seed +
    replica index). Returns the table rows and the log-log slope of the
    relative variance against ``r`` inside ``fit_window`` (NaN with fewer
    than two usable points).
    """
    if replicas < 2:
        raise ConfigError("sweep-r needs at least 2 replicas to estimate a variance")
    model = make_model(cfg.model)
    rows = []
    for r in r_list:
        energies, failed = [], 0
        for k in range(replicas):
            engine = replace(cfg.engine, r=float(r), rng_seed=cfg.engine.rng_seed + k)
            try:
                _, s = run_simulation(model, engine, threads=threads)
            except (EngineError, ValueError) as exc:
                log.warning("r=%g replica %d failed: %s", r, k, exc)
                failed += 1
                continue
            value = s.energy_mean if estimator == "projected" else s.shift_mean
            if math.isfinite(value):
                energies.append(value)
            else:
                failed += 1
        e = np.array(energies)
        if len(e) >= 2:
            mean, var = float(e.mean()), float(e.var(ddof=1))
            rel = var / mean**2
        else:
            mean = var = rel = math.nan
        rows.append(SweepRow(float(r), len(e), failed, mean, var, rel))
    return rows, fit_slope(rows, fit_window)


def fit_slope(rows, window=(0.0, math.inf)) -> float:
    pts = [(row.r, row.relative_variance) for row in rows
           if window[0] <= row.r <= window[1] and row.relative_variance > 0]
    if len(pts) < 2:
        return math.nan
    x, y = np.log(np.array(pts)).T
    return float(np.polyfit(x, y, 1)[0])


def write_sweep(out_dir: Path, rows, slope) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = ["r,completed,failed,mean_energy,variance,relative_variance"]
    lines += [f"{_fmt(w.r)},{w.completed},{w.failed},{_fmt(w.mean_energy)},{_fmt(w.variance)},"
              f"{_fmt(w.relative_variance)}" for w in rows]
    (out_dir / "sweep.csv").write_text("\n".join(lines) + "\n")
    (out_dir / "sweep.json").write_text(json.dumps({"slope": _finite_or_none(slope)}, indent=2) + "\n")


def ed_command(cfg: RunConfig) -> dict:
    model = make_model(cfg.model)
    basis = ed.enumerate_sector(model)
    e0, _ = ed.ground_state_energy(model, basis=basis)
    return {"dimension": len(basis), "E0": e0}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tripletmc", description="Triplet-ensemble ground-state Monte Carlo.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in [("run", "run one simulation"),
                       ("sweep-r", "replica variance of the energy versus r"),
                       ("ed", "exact ground state of the configured sector")]:
        s = sub.add_parser(name, help=text)
        s.add_argument("--config", required=True, type=Path)
        if name != "ed":
            s.add_argument("--seed", type=int, help="overrides engine.rng_seed")
            s.add_argument("--threads", type=int, default=1)
            s.add_argument("--out", type=Path, help="overrides output.directory")
        if name == "sweep-r":
            s.add_argument("--r-list", type=lambda t: [float(x) for x in t.split(",") if x.strip()],
                           help="comma separated, overrides sweep.r_list")
            s.add_argument("--replicas", type=int)
            s.add_argument("--fit-window", type=float, nargs=2, metavar=("R_MIN", "R_MAX"))
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if getattr(args, "seed", None) is not None:
            cfg.engine = replace(cfg.engine, rng_seed=args.seed)
        if getattr(args, "threads", 1) < 1:
            raise ConfigError("--threads must be at least 1")
        out_dir = Path(args.out) if getattr(args, "out", None) else Path(cfg.output.directory)
        if args.command == "run":
            summary = run_command(cfg, out_dir, args.threads)
            print(f"E = {summary['E_mean']} +- {summary['E_error']}   S_final = {summary['S_final']}")
        elif args.command == "sweep-r":
            r_list = args.r_list if args.r_list is not None else cfg.sweep.r_list
            replicas = args.replicas if args.replicas is not None else cfg.sweep.replicas
            window = tuple(args.fit_window) if args.fit_window else cfg.sweep.fit_window
            rows, slope = sweep_r(cfg, r_list, replicas, threads=args.threads,
                                  estimator=cfg.sweep.estimator, fit_window=window)
            write_sweep(out_dir, rows, slope)
            for w in rows:
                print(f"r = {w.r:g}  sigma^2/E^2 = {w.relative_variance:.4g}  ({w.completed} ok, {w.failed} failed)")
            print(f"log-log slope = {slope:.4g}")
        else:
            res = ed_command(cfg)
            print(f"dimension = {res['dimension']}")
            print(f"E0 = {res['E0']!r}")
    except (ConfigError, CapacityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EngineError as exc:
        print(f"simulation aborted: {exc}", file=sys.stderr)
        return EXIT_RUN
    return 0


if __name__ == "__main__":
    sys.exit(main())
