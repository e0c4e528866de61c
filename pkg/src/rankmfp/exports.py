"""Artifact writers: field CSVs, JSON reports and dependency-free SVG plots."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .grid import CellField, GridSpec, node_resample

_SVG_MAX_DIM = 512

# Five-stop sequential color ramp (dark violet to yellow), linearly blended.
_RAMP = np.array([
    (68, 1, 84),
    (59, 82, 139),
    (33, 145, 140),
    (94, 201, 98),
    (253, 231, 37),
], dtype=float)


def write_field_csv(path: str | Path, spec: GridSpec, values: np.ndarray) -> None:
    """Write a node-shaped field: header row of x coordinates, rows keyed by t."""
    xs = spec.x_nodes()
    ts = spec.t_nodes()
    with open(path, "w", newline="") as fh:
        fh.write("t\\x," + ",".join(repr(float(x)) for x in xs) + "\n")
        for i, t in enumerate(ts):
            fh.write(repr(float(t)) + "," + ",".join(repr(float(v)) for v in values[i]) + "\n")


def density_field_csv(path: str | Path, m: CellField) -> np.ndarray:
    """Write the density resampled onto nodes; row sums keep unit mass."""
    nodes = node_resample(m)
    write_field_csv(path, m.spec, nodes.values)
    return nodes.values


def write_report_json(path: str | Path, report: dict) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _color(fraction: float) -> str:
    pos = np.clip(fraction, 0.0, 1.0) * (len(_RAMP) - 1)
    lo = int(np.floor(pos))
    hi = min(lo + 1, len(_RAMP) - 1)
    w = pos - lo
    rgb = (1.0 - w) * _RAMP[lo] + w * _RAMP[hi]
    return f"rgb({int(rgb[0])},{int(rgb[1])},{int(rgb[2])})"


def svg_heatmap(path: str | Path, spec: GridSpec, cells: np.ndarray, title: str) -> None:
    """Rect-per-cell heatmap with t on the vertical axis and x horizontal."""
    nt, nx = cells.shape
    scale = max(1, _SVG_MAX_DIM // max(nt, nx))
    width, height = nx * scale, nt * scale
    margin_left, margin_top, margin_bottom = 42, 26, 30
    total_w = width + margin_left + 12
    total_h = height + margin_top + margin_bottom
    vmin = float(np.min(cells))
    vmax = float(np.max(cells))
    span = vmax - vmin if vmax > vmin else 1.0

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{total_w}" height="{total_h}" '
        f'viewBox="0 0 {total_w} {total_h}">',
        f'<text x="{margin_left + width / 2:.0f}" y="16" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">{title} '
        f'[{vmin:.4g}, {vmax:.4g}]</text>',
    ]
    for i in range(nt):
        y = margin_top + (nt - 1 - i) * scale   # t grows upward
        row = cells[i]
        for k in range(nx):
            color = _color((row[k] - vmin) / span)
            parts.append(
                f'<rect x="{margin_left + k * scale}" y="{y}" width="{scale}" '
                f'height="{scale}" fill="{color}"/>'
            )
    parts.append(
        f'<text x="{margin_left + width / 2:.0f}" y="{total_h - 8}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">x</text>'
    )
    parts.append(
        f'<text x="14" y="{margin_top + height / 2:.0f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 14 {margin_top + height / 2:.0f})">t</text>'
    )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")


def svg_slices(path: str | Path, spec: GridSpec, m: CellField, title: str = "density slices") -> None:
    """Polyline plot of the density at t = 0, T/2 and T."""
    nodes = node_resample(m).values
    rows = {
        "t=0": nodes[0],
        f"t={spec.T / 2:g}": nodes[spec.Nt // 2],
        f"t={spec.T:g}": nodes[-1],
    }
    xs = spec.x_nodes()
    width, height = 480, 300
    margin = 46
    vmax = max(float(np.max(v)) for v in rows.values())
    vmin = min(0.0, min(float(np.min(v)) for v in rows.values()))
    span = vmax - vmin if vmax > vmin else 1.0
    colors = ("#443983", "#21918c", "#f2c137")

    def to_px(x, v):
        px = margin + x * (width - 2 * margin)
        py = height - margin - (v - vmin) / span * (height - 2 * margin)
        return f"{px:.2f},{py:.2f}"

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<text x="{width / 2}" y="18" text-anchor="middle" font-family="sans-serif" '
        f'font-size="13">{title}</text>',
        f'<rect x="{margin}" y="{margin}" width="{width - 2 * margin}" '
        f'height="{height - 2 * margin}" fill="none" stroke="#888"/>',
    ]
    for (label, values), color in zip(rows.items(), colors):
        points = " ".join(to_px(x, v) for x, v in zip(xs, values))
        parts.append(f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.6"/>')
    for idx, (label, _) in enumerate(rows.items()):
        y = 34 + 14 * idx
        parts.append(f'<rect x="{width - margin - 86}" y="{y - 9}" width="10" height="10" '
                     f'fill="{colors[idx]}"/>')
        parts.append(f'<text x="{width - margin - 72}" y="{y}" font-family="sans-serif" '
                     f'font-size="11">{label}</text>')
    parts.append(f'<text x="{width / 2}" y="{height - 10}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="12">x</text>')
    parts.append(f'<text x="16" y="{height / 2}" text-anchor="middle" font-family="sans-serif" '
                 f'font-size="12" transform="rotate(-90 16 {height / 2})">m</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")


def stage_report_dict(report) -> dict:
    """JSON-ready view of a SolveReport; timing-free for reproducibility."""
    return {
        "eps": report.eps,
        "converged": bool(report.converged),
        "iterations": int(report.iterations),
        "final_residual": float(report.final_residual),
        "kappa_energy": float(report.kappa_energy),
        "bv_bound": float(report.bv_bound),
        "psi_x_l1": float(report.psi_x_l1),
        "psi_t_l1": float(report.psi_t_l1),
        "row_mass_error": float(report.row_mass_error),
        "min_cell_mass": float(report.min_cell_mass),
        "boundary_mass_fraction": float(report.boundary_mass_fraction),
    }
