"""Telemetry files: fixed-schema CSV and self-contained SVG funnel plots."""
from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .funnel import CHANNEL_INDEX, CHANNELS
from .sim import RunReport, reference_angles

CSV_SCHEMA_VERSION = 1

CSV_COLUMNS = (
    ("t",)
    + ("p_x", "p_y", "p_z", "v_x", "v_y", "v_z", "phi", "theta", "psi",
       "omega_phi", "omega_theta", "omega_psi")
    + ("p_r_x", "p_r_y", "p_r_z", "psi_r")
    + ("v_r_x", "v_r_y", "v_r_z", "omega_r_phi", "omega_r_theta", "omega_r_psi")
    + ("phi_r", "theta_r", "F_z", "tau_x", "tau_y", "tau_z")
    + tuple(f"e_{ch}" for ch in CHANNELS)
    + tuple(f"rho_{ch}" for ch in CHANNELS)
    + tuple(f"xi_{ch}" for ch in CHANNELS)
    + ("cond_a", "cond_b", "cond_c")
)
CSV_HEADER = ",".join(CSV_COLUMNS)

CHANNEL_UNITS = {
    "p_x": "m", "p_y": "m", "p_z": "m",
    "v_x": "m/s", "v_y": "m/s", "v_z": "m/s",
    "tilt_1": "-", "tilt_2": "-", "psi": "rad",
    "omega_phi": "rad/s", "omega_theta": "rad/s", "omega_psi": "rad/s",
}
SVG_MAX_POINTS = 2001


def format_value(x: float) -> str:
    """Positional decimal with 9 significant digits, trailing zeros trimmed."""
    s = "%.9g" % x
    if "e" in s:
        s = np.format_float_positional(x, precision=9, unique=False, fractional=False, trim="-")
    return s


def telemetry_table(report: RunReport) -> np.ndarray:
    """(n, 68) float table in CSV column order."""
    n = len(report.t)
    angles = reference_angles(report)
    table = np.hstack([
        report.t.reshape(n, 1), report.x, report.ref, report.v_r, report.omega_r, angles,
        report.command, report.e, report.rho, report.xi, report.flags.astype(float),
    ])
    assert table.shape[1] == len(CSV_COLUMNS)
    return table


def write_csv(report: RunReport, path) -> Path:
    path = Path(path)
    table = telemetry_table(report)
    flag_cols = len(CSV_COLUMNS) - 3
    lines = [CSV_HEADER]
    for row in table:
        vals = [format_value(v) for v in row[:flag_cols]]
        vals.extend("1" if v else "0" for v in row[flag_cols:])
        lines.append(",".join(vals))
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    return path


def _ticks(lo, hi, n=5):
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def write_funnel_svg(report: RunReport, channel: str, path) -> Path:
    """Plot e(t) against +/-rho(t) for one channel."""
    if channel not in CHANNEL_INDEX:
        raise ValueError(f"unknown channel {channel!r}; expected one of {CHANNELS}")
    if len(report.t) == 0:
        raise ValueError("cannot plot an empty report")
    i = CHANNEL_INDEX[channel]
    t, e, rho = report.t, report.e[:, i], report.rho[:, i]
    keep = np.isfinite(e) & np.isfinite(rho)
    stride = max(1, math.ceil(len(t) / SVG_MAX_POINTS))
    idx = np.flatnonzero(keep)[::stride]
    t, e, rho = t[idx], e[idx], rho[idx]
    if len(t) == 0:
        raise ValueError(f"channel {channel} has no finite samples")

    width, height = 720, 360
    left, right, top, bottom = 80, 20, 40, 50
    pw, ph = width - left - right, height - top - bottom
    t0, t1 = float(t[0]), float(t[-1])
    if t1 <= t0:
        t1 = t0 + 1.0
    ymax = float(max(np.max(rho), np.max(np.abs(e)))) * 1.05 or 1.0

    def sx(v):
        return left + (v - t0) / (t1 - t0) * pw

    def sy(v):
        return top + (ymax - v) / (2 * ymax) * ph

    def polyline(ys, color, dash=""):
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(t, ys))
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        return f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{extra} points="{pts}"/>'

    unit = CHANNEL_UNITS[channel]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-size="15">'
        f'{escape(f"Error {channel} inside funnel")}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        f'<line x1="{left}" y1="{sy(0):.2f}" x2="{left + pw}" y2="{sy(0):.2f}" stroke="#bbbbbb"/>',
    ]
    for v in _ticks(t0, t1):
        parts.append(f'<text x="{sx(v):.2f}" y="{top + ph + 16}" text-anchor="middle">{v:.3g}</text>')
    for v in _ticks(-ymax, ymax):
        parts.append(f'<text x="{left - 6}" y="{sy(v) + 4:.2f}" text-anchor="end">{v:.3g}</text>')
    parts += [
        f'<text x="{left + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">t [s]</text>',
        f'<text x="18" y="{top + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {top + ph / 2:.1f})">{escape(f"e_{channel} [{unit}]")}</text>',
        polyline(rho, "#d62728", "6,3"),
        polyline(-rho, "#d62728", "6,3"),
        polyline(e, "#1f77b4"),
        "</svg>",
    ]
    path = Path(path)
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")
    return path
