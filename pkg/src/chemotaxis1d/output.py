"""Artifact writers: CSV tables, run manifest, and static SVG plots.

Column schemas are frozen and documented in the README.  Channels that do
not apply to a mode are written as empty cells, never as NaN.  Floats are
rendered with Python's shortest round-trip repr, so repeated runs of the
same configuration produce byte-identical files.  The SVG plots are
self-contained polyline drawings with no plotting dependency.
"""

from __future__ import annotations

import json
import os
import time
from typing import Sequence

import numpy as np

SNAPSHOT_COLUMNS = ("x", "rho", "S", "dS", "f_plus", "f_minus")
PARTICLE_COLUMNS = ("x", "w")
DIAGNOSTIC_COLUMNS = ("t", "mass", "linf", "energy_field", "energy_pairing",
                      "osl_sup", "osl_bound", "flux_res", "eq_res", "w1_ref")

_PALETTE = ("#1b6ca8", "#c2403c", "#3c8d40", "#8a56a0", "#c88a2a",
            "#2a8f8a", "#7a5230", "#5b5b5b")


def _fmt(v) -> str:
    if v is None:
        return ""
    f = float(v)
    if not np.isfinite(f):
        raise ValueError("refusing to write a non-finite value")
    return repr(f)


def write_csv(path: str, header: Sequence[str], columns: Sequence) -> None:
    """Write columns (arrays or None for not-applicable) under a header."""
    n = max(len(c) for c in columns if c is not None)
    rows = []
    for i in range(n):
        rows.append(",".join(_fmt(c[i]) if c is not None else "" for c in columns))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        fh.write("\n".join(rows))
        if rows:
            fh.write("\n")


def write_snapshot(path: str, x, rho, pot, grad, f_plus=None, f_minus=None) -> None:
    write_csv(path, SNAPSHOT_COLUMNS, (x, rho, pot, grad, f_plus, f_minus))


def write_particle_snapshot(path: str, positions, weights) -> None:
    write_csv(path, PARTICLE_COLUMNS, (positions, weights))


def write_diagnostics(path: str, report) -> None:
    """Frozen diagnostics table; absent channels become empty columns."""
    cols = [report.times]
    for name in DIAGNOSTIC_COLUMNS[1:]:
        cols.append(report.channels.get(name))
    write_csv(path, DIAGNOSTIC_COLUMNS, cols)


def write_manifest(path: str, config_echo: dict, wall_seconds: float,
                   version: str, extra: dict | None = None) -> None:
    doc = {
        "tool": "chemotaxis1d",
        "version": version,
        "config": config_echo,
        "wall_seconds": wall_seconds,
        "written_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


# ----------------------------------------------------------------------
# SVG line plots
# ----------------------------------------------------------------------


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10.0 ** np.floor(np.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if mult * mag >= raw:
            step = mult * mag
            break
    start = np.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-12 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else float(t))
        t += step
    return ticks


def line_plot(path: str, series: Sequence[tuple[str, np.ndarray, np.ndarray]],
              title: str, xlabel: str, ylabel: str,
              width: int = 640, height: int = 440) -> None:
    """Write a standalone SVG with one polyline per (label, x, y) series."""
    ml, mr, mt, mb = 64, 16, 34, 46
    pw, ph = width - ml - mr, height - mt - mb

    xs = np.concatenate([np.asarray(s[1], float) for s in series])
    ys = np.concatenate([np.asarray(s[2], float) for s in series])
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise ValueError("plot data must be finite")
    x_lo, x_hi = float(xs.min()), float(xs.max())
    y_lo, y_hi = float(ys.min()), float(ys.max())
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0
    if y_hi <= y_lo:
        y_hi = y_lo + 1.0
    pad = 0.04 * (y_hi - y_lo)
    y_lo -= pad
    y_hi += pad

    def px(v: float) -> float:
        return ml + (v - x_lo) / (x_hi - x_lo) * pw

    def py(v: float) -> float:
        return mt + ph - (v - y_lo) / (y_hi - y_lo) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="20" font-family="sans-serif" font-size="14" '
        f'text-anchor="middle">{title}</text>',
    ]
    axis = f'stroke="#333" stroke-width="1"'
    parts.append(f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" {axis}/>')
    parts.append(f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" {axis}/>')

    for t in _ticks(x_lo, x_hi):
        xpix = px(t)
        parts.append(f'<line x1="{xpix:.1f}" y1="{mt + ph}" x2="{xpix:.1f}" y2="{mt + ph + 4}" {axis}/>')
        parts.append(f'<text x="{xpix:.1f}" y="{mt + ph + 18}" font-family="sans-serif" '
                     f'font-size="11" text-anchor="middle">{t:g}</text>')
    for t in _ticks(y_lo, y_hi):
        ypix = py(t)
        parts.append(f'<line x1="{ml - 4}" y1="{ypix:.1f}" x2="{ml}" y2="{ypix:.1f}" {axis}/>')
        parts.append(f'<text x="{ml - 8}" y="{ypix + 4:.1f}" font-family="sans-serif" '
                     f'font-size="11" text-anchor="end">{t:g}</text>')

    parts.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 8}" font-family="sans-serif" '
                 f'font-size="12" text-anchor="middle">{xlabel}</text>')
    parts.append(f'<text x="16" y="{mt + ph / 2:.1f}" font-family="sans-serif" font-size="12" '
                 f'text-anchor="middle" transform="rotate(-90 16 {mt + ph / 2:.1f})">{ylabel}</text>')

    for k, (label, sx, sy) in enumerate(series):
        color = _PALETTE[k % len(_PALETTE)]
        pts = " ".join(f"{px(float(a)):.2f},{py(float(b)):.2f}" for a, b in zip(sx, sy))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = mt + 14 + 16 * k
        lx = ml + pw - 150
        parts.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
                     f'stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<text x="{lx + 28}" y="{ly}" font-family="sans-serif" '
                     f'font-size="11">{label}</text>')

    parts.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts))
        fh.write("\n")
