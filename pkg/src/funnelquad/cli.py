"""Command-line entry point: ``funnelquad run --config ascent.json``.

Exit codes: 0 violation-free run, 1 configuration error, 2 funnel violation
(including failed initial compliance), 3 numerical failure (singular
attitude, degenerate thrust or non-finite state).
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from ._jit import JIT_ENABLED
from .config import PRESETS, load_config_with_outputs
from .controller import gain_ratio_condition
from .errors import (ConfigError, FunnelViolation, FunnelquadError, InitialComplianceError)
from .funnel import CHANNELS
from .plant import DISTURBANCE_KINDS, DisturbanceSpec
from .sim import RunReport, SimConfig, metrics, run
from .telemetry import CSV_SCHEMA_VERSION, write_csv, write_funnel_svg

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_VIOLATION = 2
EXIT_NUMERIC = 3

DEFAULT_OUT_DIR = "funnelquad_out"
MAX_LISTED_VIOLATIONS = 100

# Parameters used by --disturbance when the config leaves them at zero.
# The sinusoid keeps |F_d| <= 0.5 N and |tau_d| <= 0.05 N m.
DISTURBANCE_DEFAULTS = {
    "none": ((0.0, 0.0, 0.0), (0.0, 0.0, 0.0), 0.0),
    "constant": ((0.1, 0.1, 0.1), (0.01, 0.01, 0.01), 0.0),
    "sinusoid": ((0.5 / math.sqrt(3),) * 3, (0.05 / math.sqrt(3),) * 3, 1.0),
    "linear_drag": ((0.1, 0.1, 0.1), (0.001, 0.001, 0.001), 0.0),
}


def default_disturbance(kind: str) -> DisturbanceSpec:
    force, torque, freq = DISTURBANCE_DEFAULTS[kind]
    return DisturbanceSpec(kind, force, torque, freq)


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors (exit 1), not argparse's default 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="funnelquad", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="simulate a scenario and write telemetry")
    r.add_argument("--config", required=True,
                   help=f"scenario JSON file or bundled preset name ({', '.join(PRESETS)})")
    r.add_argument("--out-dir", default=None,
                   help=f"output directory (default: $FUNNELQUAD_OUT or ./{DEFAULT_OUT_DIR})")
    r.add_argument("--duration", type=float, default=None, help="override the run length [s]")
    r.add_argument("--dt", type=float, default=None, help="override the control/telemetry period [s]")
    r.add_argument("--disturbance", choices=DISTURBANCE_KINDS, default=None,
                   help="override the disturbance kind")
    r.add_argument("--plots", action="store_true", help="write funnel_<channel>.svg files")
    return parser


def _apply_disturbance(cfg: SimConfig, kind: str) -> SimConfig:
    d = cfg.disturbance
    if d.kind == kind and (np.any(d.force_params) or np.any(d.torque_params)):
        return cfg
    return replace(cfg, disturbance=default_disturbance(kind))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _summary(cfg: SimConfig, status: str, exit_code: int, elapsed: float, report: RunReport | None,
             extra: dict | None = None) -> dict:
    ratio, bound, ok = gain_ratio_condition(cfg.funnels, cfg.gains, cfg.conditions)
    doc = {
        "schema": "funnelquad.metrics/1",
        "csv_schema": CSV_SCHEMA_VERSION,
        "status": status,
        "exit_code": exit_code,
        "scenario": cfg.scenario.name,
        "duration": cfg.duration,
        "dt": cfg.dt,
        "substeps": cfg.substeps,
        "hold": cfg.hold,
        "violation_mode": cfg.violation_mode,
        "disturbance": cfg.disturbance.kind,
        "jit": JIT_ENABLED,
        "elapsed_s": elapsed,
        "gain_ratio_condition": {"ratio": ratio, "bound": bound, "holds": ok},
    }
    if report is not None:
        doc["records"] = len(report.t)
        doc["violations"] = [v._asdict() for v in report.violations[:MAX_LISTED_VIOLATIONS]]
        doc["violation_count"] = report.violation_count
        doc["assumption1_ok"] = report.assumption1_ok
        if report.failure:
            doc["failure"] = {k: v for k, v in report.failure.items()}
        if len(report.t):
            doc["metrics"] = metrics(report).to_dict()
    doc.update(extra or {})
    return _jsonable(doc)


def _write_outputs(out_dir: Path, report: RunReport, plots: bool, channels) -> list[Path]:
    written = [write_csv(report, out_dir / "telemetry.csv")]
    if plots and len(report.t):
        for ch in channels:
            written.append(write_funnel_svg(report, ch, out_dir / f"funnel_{ch}.svg"))
    return written


def run_command(args: argparse.Namespace) -> int:
    out_dir = Path(args.out_dir or os.environ.get("FUNNELQUAD_OUT") or DEFAULT_OUT_DIR)
    overrides = {k: v for k, v in (("duration", args.duration), ("dt", args.dt)) if v is not None}
    try:
        cfg, outputs = load_config_with_outputs(args.config, overrides)
        if args.disturbance is not None:
            cfg = _apply_disturbance(cfg, args.disturbance)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    channels = outputs.get("plot_channels") or list(CHANNELS)
    out_dir.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    report = None
    extra = None
    try:
        report = run(cfg)
        status = "ok" if report.violation_count == 0 else "funnel_violation"
        code = EXIT_OK if report.violation_count == 0 else EXIT_VIOLATION
        message = f"{report.violation_count} funnel violation(s)"
    except InitialComplianceError as exc:
        status, code, message = "initial_compliance_failure", EXIT_VIOLATION, str(exc)
        extra = {"initial_violations": [{"channel": ch, "xi0": xi} for ch, xi in exc.violations]}
    except FunnelViolation as exc:
        report = exc.report
        status, code, message = "funnel_violation", EXIT_VIOLATION, str(exc)
    except FunnelquadError as exc:
        report = getattr(exc, "report", None)
        status, code, message = report.status if report is not None else "error", EXIT_NUMERIC, str(exc)
    elapsed = time.perf_counter() - t0

    written = []
    if report is not None:
        written = _write_outputs(out_dir, report, args.plots, channels)
    metrics_path = out_dir / "metrics.json"
    metrics_path.write_text(json.dumps(_summary(cfg, status, code, elapsed, report, extra), indent=2) + "\n",
                            encoding="utf-8")
    written.append(metrics_path)

    stream = sys.stdout if code == EXIT_OK else sys.stderr
    print(f"{status}: {message} ({elapsed:.2f} s)", file=stream)
    if report is not None and len(report.t):
        worst = metrics(report).max_abs_xi
        i = int(np.nanargmax(worst))
        print(f"max |xi| = {worst[i]:.4f} on {CHANNELS[i]}", file=stream)
    for p in written:
        print(f"wrote {p}", file=stream)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "run":
        return run_command(args)
    parser.error(f"unknown command {args.command}")  # pragma: no cover
    return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
