"""Command line entry point: ``hawkflow simulate | verify | sweep``.

Exit codes: 0 success, 1 failed verification check or I/O error,
2 configuration error, 3 numerical failure, 4 every tracked sphere starts
at the speed singularity (``|R|`` below the guard).
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import DEFAULTS, RunConfig, config_from_mapping, load_config
from .diagnostics import (
    DecayReport,
    MonotonicityReport,
    ale_decay_report,
    calibrate_eps_disc,
    find_monotonicity_radius,
    positivity_monitor,
)
from .errors import ConfigError, ConvergenceError, DomainError, HawkflowError, IoError, StabilityError
from .flow_engine import FlowState
from .output import emit_svg, jsonable, write_json, write_traces
from .radial_metric import curvature
from .surface_flow import MassTrace, SpeedKind, run_coupled
from .verification import CheckResult, run_checks

log = logging.getLogger("hawkflow")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_SINGULAR = 4


@dataclass
class SimulationResult:
    exit_status: int
    traces: List[MassTrace] = field(default_factory=list)
    report: Optional[MonotonicityReport] = None
    decay_start: Optional[DecayReport] = None
    decay_end: Optional[DecayReport] = None
    positivity: List[dict] = field(default_factory=list)
    eps_disc: float = 0.0
    message: str = ""
    output_dir: Optional[Path] = None


def _prepare_dir(path) -> Path:
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(path, exc.strerror or str(exc)) from None
    return path


def _write_summary(config: RunConfig, result: SimulationResult, out: Path):
    summary = {
        "exit_status": result.exit_status,
        "message": result.message,
        "config": config.to_text(),
        "monotonicity": result.report.as_dict() if result.report else None,
        "decay": {
            "start": result.decay_start.as_dict() if result.decay_start else None,
            "end": result.decay_end.as_dict() if result.decay_end else None,
        },
        "positivity": {
            "eps_disc": result.eps_disc,
            "min_R_over_run": min((p["min_R"] for p in result.positivity), default=None),
            "violations": sum(p["violated"] for p in result.positivity),
            "samples": len(result.positivity),
        },
        "traces": [
            {"sphere_id": t.sphere_id, "initial_radius": t.initial_radius, "status": t.status,
             "reason": t.reason, "n_samples": len(t.samples)}
            for t in result.traces
        ],
    }
    write_json(summary, out / "summary.json")


def cmd_simulate(config: RunConfig) -> SimulationResult:
    """Run the coupled flow described by ``config`` and write its artifacts."""
    out = _prepare_dir(config.output_dir)
    (out / "config_echo.toml").write_text(config.to_text(), encoding="utf-8")
    result = SimulationResult(EXIT_OK, output_dir=out)

    profile = config.initial_profile()
    grid = profile.grid
    initial = FlowState(0.0, profile, config.radii)
    field0 = curvature(profile)
    R_at = np.interp(initial.tracked_radii, grid.nodes, field0.scalar)
    result.decay_start = ale_decay_report(profile, 0.0)
    result.eps_disc = calibrate_eps_disc(grid, config.mass if config.mass > 0 else 1.0)

    if np.all(np.abs(R_at) < config.epsilon_R):
        result.exit_status = EXIT_SINGULAR
        result.message = (f"every tracked sphere has |R| < {config.epsilon_R:g} at t = 0; "
                          "the speed H/R is undefined")
        _write_summary(config, result, out)
        return result

    final = {}

    def observe(state, field):
        rec = positivity_monitor(field, result.eps_disc)
        result.positivity.append({"t": state.t, "min_R": rec.min_R,
                                  "r_at_min": float(grid.nodes[rec.argmin]),
                                  "violated": rec.violated})
        final["state"] = state

    try:
        traces = run_coupled(initial, config.speed, config.scheme, config.t_end,
                             config.sample_every, config.epsilon_R, observer=observe)
    except (StabilityError, ConvergenceError) as exc:
        result.exit_status = EXIT_NUMERICAL
        result.message = f"{type(exc).__name__}: {exc}"
        _write_summary(config, result, out)
        return result

    result.traces = traces
    end = final["state"]
    result.decay_end = ale_decay_report(end.profile, end.t)
    metadata = {
        "grid": [grid.r_min, grid.r_max, grid.n_points],
        "scheme": config.scheme.scheme.value,
        "speed": config.speed.value,
        "t_end": config.t_end,
        "steps": end.step_count,
        "direction": "increasing" if config.speed is SpeedKind.FORWARD else "decreasing",
    }
    try:
        result.report = find_monotonicity_radius(
            traces, metadata, decreasing=config.speed is SpeedKind.BACKWARD)
    except DomainError as exc:
        result.message = f"no monotonicity radius: {exc}"

    write_traces(traces, out)
    if config.emit_svg:
        emit_svg(traces, out / "mass_vs_time.svg", "mass")
        emit_svg(traces, out / "rate_vs_radius.svg", "rate")
    _write_summary(config, result, out)
    return result


def cmd_verify(config: RunConfig, k0_sign: float = 1.0) -> Tuple[int, List[CheckResult]]:
    """Run the oracle checks and write ``verify.json``.

    Exit status 3 if any check broke down numerically, 1 if any other check
    failed, 0 otherwise. SKIP does not count as a failure.
    """
    results = run_checks(config, k0_sign)
    out = _prepare_dir(config.output_dir)
    write_json({"checks": [r.as_dict() for r in results]}, out / "verify.json")
    if any("error" in r.details for r in results):
        for r in results:
            if "error" in r.details:
                log.error("%s broke down: %s", r.name, r.details["error"])
        return EXIT_NUMERICAL, results
    status = EXIT_OK if all(r.passed for r in results) else EXIT_FAILED
    return status, results


# -- sweeps ------------------------------------------------------------------

_SWEEPABLE = {k for k, v in DEFAULTS.items()
              if isinstance(v, (int, float)) and not isinstance(v, bool)} | {"scheme.fixed_dt"}


def parse_sweep(text: str) -> Tuple[str, List[float]]:
    """``"key=start:stop:n"`` to ``(key, n evenly spaced values)``."""
    key, sep, rng = text.partition("=")
    key = key.strip()
    if not sep:
        raise ConfigError("--sweep", f"expected key=start:stop:n, got {text!r}")
    if key not in _SWEEPABLE:
        raise ConfigError(key, "not a numeric configuration key")
    parts = rng.split(":")
    if len(parts) != 3:
        raise ConfigError(key, f"expected start:stop:n, got {rng!r}")
    try:
        start, stop, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(key, f"cannot parse range {rng!r}") from None
    if n < 1:
        raise ConfigError(key, "empty sweep range")
    values = np.linspace(start, stop, n).tolist()
    if isinstance(DEFAULTS[key], int):
        values = [int(round(v)) for v in values]
    return key, values


def _sweep_point(base: Dict, overrides: Dict, out_dir: str) -> Dict:
    row = dict(overrides)
    started = time.perf_counter()
    try:
        merged = dict(base)
        merged.update(overrides)
        merged["output.directory"] = out_dir
        merged["output.emit_svg"] = False
        result = cmd_simulate(config_from_mapping(merged))
        row["exit_status"] = result.exit_status
        r0 = result.report.r0 if result.report else None
        row["r0"] = r0
        row["min_dm_dt_at_r0"] = next(
            (s.min_dm_dt for s in result.report.per_radius if s.radius == r0), None
        ) if r0 is not None else None
        row["status"] = "OK" if result.exit_status == EXIT_OK else "FAILED"
        row["reason"] = result.message
    except HawkflowError as exc:
        row.update(exit_status=EXIT_CONFIG if isinstance(exc, ConfigError) else EXIT_NUMERICAL,
                   r0=None, min_dm_dt_at_r0=None, status="FAILED",
                   reason=f"{type(exc).__name__}: {exc}")
    row["wall_time_s"] = time.perf_counter() - started
    return row


def cmd_sweep(config: RunConfig, sweeps: Sequence[Tuple[str, List[float]]],
              jobs: int = 1) -> Tuple[int, List[Dict]]:
    """Independent simulations over the cartesian product of 1 or 2 sweep ranges."""
    if not sweeps:
        raise ConfigError("--sweep", "no sweep range given")
    if len(sweeps) > 2:
        raise ConfigError("--sweep", "at most two parameters can be swept")
    keys = [k for k, _ in sweeps]
    if len(set(keys)) != len(keys):
        raise ConfigError("--sweep", "a parameter is swept twice")
    for key, values in sweeps:
        if not values:
            raise ConfigError(key, "empty sweep range")

    out = _prepare_dir(config.output_dir)
    base = config.to_mapping()
    points = [dict(zip(keys, combo)) for combo in itertools.product(*(v for _, v in sweeps))]
    dirs = [str(out / f"point_{i:03d}") for i in range(len(points))]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_point, [base] * len(points), points, dirs))
    else:
        rows = [_sweep_point(base, p, d) for p, d in zip(points, dirs)]
    rows.sort(key=lambda row: tuple(row[k] for k in keys))

    columns = keys + ["status", "exit_status", "r0", "min_dm_dt_at_r0", "wall_time_s", "reason"]
    try:
        with open(out / "sweep.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow(["" if row.get(c) is None else row.get(c) for c in columns])
    except OSError as exc:
        raise IoError(out / "sweep.csv", exc.strerror or str(exc)) from None
    return EXIT_OK, rows


# -- argument parsing ---------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hawkflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="dotted key-value run configuration")
    common.add_argument("--out", help="output directory (overrides output.directory)")
    common.add_argument("--svg", action="store_true", help="also write SVG plots")
    common.add_argument("-v", "--verbose", action="store_true")

    sub.add_parser("simulate", parents=[common], help="run the coupled flow")
    verify = sub.add_parser("verify", parents=[common], help="run the oracle checks")
    verify.add_argument("--flip-k0-sign", action="store_true",
                        help="debug: use the opposite sign for K0")
    sweep = sub.add_parser("sweep", parents=[common], help="parameter sweep of simulate")
    sweep.add_argument("--sweep", action="append", default=[], metavar="KEY=START:STOP:N")
    sweep.add_argument("--jobs", type=int, default=1)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        config = load_config(args.config) if args.config else config_from_mapping({})
        config = config.with_output(args.out, True if args.svg else None)
        if args.command == "simulate":
            result = cmd_simulate(config)
            r0 = result.report.r0 if result.report else None
            print(json.dumps(jsonable({"exit_status": result.exit_status, "r0": r0,
                                       "message": result.message,
                                       "output": str(result.output_dir)})))
            return result.exit_status
        if args.command == "verify":
            status, results = cmd_verify(config, -1.0 if args.flip_k0_sign else 1.0)
            for r in results:
                print(f"{r.status:4s}  {r.name}  value={r.value}  ({r.threshold})")
            return status
        status, rows = cmd_sweep(config, [parse_sweep(s) for s in args.sweep], args.jobs)
        for row in rows:
            print(json.dumps(jsonable(row)))
        return status
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IoError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
