"""Artifact writers: shape CSV, energy JSON, SVG plots, workspace tables.

Writers return strings; callers own file placement.  All numeric fields use
fixed-precision formatting (and negative zero is scrubbed) so repeated runs
with the same seed emit byte-identical files.
"""
from __future__ import annotations

import json
import math

import numpy as np

from .chain import ChainConfig, DesignKind, DesignSpec, RodShape
from .solver import SolveResult
from .workspace import HALF_DISK_BOUND_MM2, WorkspaceScan, _fmt, _polyline

CSV_HEADER = "index,x_mm,y_mm,z_mm,dipole_x,dipole_y,dipole_z"
SUMMARY_HEADER = "design,area_mm2,volume_mm3,max_polar_deg,area_bound_mm2,within_bound"


def _num(v: float, places: int) -> str:
    r = round(float(v), places) + 0.0        # +0.0 turns -0.0 into 0.0
    return f"{r:.{places}f}"


def shape_rows(config: ChainConfig | RodShape, design: DesignSpec) -> list:
    """(position_mm, direction) per structure point.

    Ball chains report ball centers and dipole axes.  Rods report centerline
    nodes; the direction column carries the local magnetization axis where
    the material is magnetic (the arriving tangent for the distributed
    design, the magnet axis on an extra tip row for the tip-magnet design)
    and zeros elsewhere.
    """
    if isinstance(config, ChainConfig):
        return list(zip(config.positions() * 1e3, config.dipole_dirs))
    pts = config.points() * 1e3
    t = config.tangents
    if design.kind is DesignKind.DISTRIBUTED:
        return list(zip(pts, np.vstack([t[:1], t])))
    rows = list(zip(pts, np.zeros_like(pts)))
    if design.kind is DesignKind.TIP_MAGNET and design.tip_length:
        rows.append((config.tip_position(design) * 1e3, t[-1]))
    return rows


def shape_csv(config: ChainConfig | RodShape, design: DesignSpec) -> str:
    lines = [CSV_HEADER]
    for i, (p, m) in enumerate(shape_rows(config, design)):
        lines.append(",".join([str(i)] + [_num(v, 6) for v in p]
                              + [_num(v, 9) for v in m]))
    return "\n".join(lines) + "\n"


def energy_report(result: SolveResult) -> dict:
    rep = {k: float(v) for k, v in result.energy.as_dict().items()}
    rep.update(converged=bool(result.converged),
               iterations=int(result.iterations),
               gradient_norm=float(result.gradient_norm),
               tip_mm=[round(float(v) + 0.0, 6) for v in np.asarray(result.tip) * 1e3])
    if result.messages:
        rep["messages"] = list(result.messages)
    return rep


def energy_json(result: SolveResult) -> str:
    return json.dumps(energy_report(result), indent=2, sort_keys=True) + "\n"


def _nice_tick(span: float) -> float:
    raw = span / 8.0
    base = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if base * mult >= raw:
            return base * mult
    return base * 10.0


def shape_svg(solves: list, title: str = "equilibrium side view") -> str:
    """x-z side view of (label, config, design) solves; byte-stable output.

    Ball chains draw as circles at true scale with a dipole tick inside each
    ball; rods draw as centerline polylines.
    """
    w, h, margin = 640, 480, 54
    clouds = [np.array([p for p, _ in shape_rows(c, d)]) for _, c, d in solves]
    xz = np.vstack(clouds)[:, [0, 2]]
    lo, hi = xz.min(axis=0), xz.max(axis=0)
    pad = max(1.0, 0.10 * float((hi - lo).max()))
    lo, hi = lo - pad, hi + pad
    span = float((hi - lo).max())            # equal aspect on both axes
    cx = 0.5 * (lo[0] + hi[0])
    cz = 0.5 * (lo[1] + hi[1])
    scale = (w - 2 * margin) / span

    def sx(x_mm: float) -> float:
        return 0.5 * w + (x_mm - cx) * scale

    def sy(z_mm: float) -> float:
        return 0.5 * h - (z_mm - cz) * scale

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
           f'viewBox="0 0 {w} {h}">',
           f'<rect width="{w}" height="{h}" fill="white"/>',
           f'<text x="{w // 2}" y="20" text-anchor="middle" font-size="14">{title}</text>']
    tick = _nice_tick(span)
    x0, x1 = cx - 0.5 * w / scale, cx + 0.5 * w / scale
    z0, z1 = cz - 0.5 * h / scale, cz + 0.5 * h / scale
    t = math.ceil(x0 / tick) * tick
    while t <= x1 + 1e-9:
        out.append(f'<line x1="{_fmt(sx(t))}" y1="{h - margin}" x2="{_fmt(sx(t))}" '
                   f'y2="{h - margin + 5}" stroke="#999"/>')
        out.append(f'<text x="{_fmt(sx(t))}" y="{h - margin + 18}" '
                   f'text-anchor="middle" font-size="10">{_fmt(t)}</text>')
        t += tick
    t = math.ceil(z0 / tick) * tick
    while t <= z1 + 1e-9:
        if margin <= sy(t) <= h - margin:
            out.append(f'<line x1="{margin - 5}" y1="{_fmt(sy(t))}" x2="{margin}" '
                       f'y2="{_fmt(sy(t))}" stroke="#999"/>')
            out.append(f'<text x="{margin - 8}" y="{_fmt(sy(t) + 3)}" '
                       f'text-anchor="end" font-size="10">{_fmt(t)}</text>')
        t += tick
    out.append(f'<text x="{w - margin}" y="{h - margin + 18}" text-anchor="end" '
               f'font-size="11">x [mm]</text>')
    out.append(f'<text x="{margin - 8}" y="{margin - 8}" text-anchor="start" '
               f'font-size="11">z [mm]</text>')
    for k, ((label, config, design), pts) in enumerate(zip(solves, clouds)):
        c = colors[k % len(colors)]
        out.append(_polyline(pts[:, [0, 2]], sx, sy, f'stroke="{c}" stroke-width="1.2"'))
        if isinstance(config, ChainConfig):
            r_px = 0.5 * config.ball_diameter * 1e3 * scale
            for (p, m) in shape_rows(config, design):
                out.append(f'<circle cx="{_fmt(sx(p[0]))}" cy="{_fmt(sy(p[2]))}" '
                           f'r="{_fmt(r_px)}" fill="none" stroke="{c}"/>')
                tip = p + 0.4 * config.ball_diameter * 1e3 * m
                out.append(f'<line x1="{_fmt(sx(p[0]))}" y1="{_fmt(sy(p[2]))}" '
                           f'x2="{_fmt(sx(tip[0]))}" y2="{_fmt(sy(tip[2]))}" '
                           f'stroke="{c}" stroke-width="1"/>')
        if label:
            out.append(f'<text x="{w - margin - 4}" y="{36 + 16 * k}" text-anchor="end" '
                       f'font-size="12" fill="{c}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def scan_to_dict(s: WorkspaceScan) -> dict:
    return {
        "design": s.design_kind.value,
        "field_mT": round(s.field_magnitude * 1e3, 9),
        "angles_deg": [round(float(a), 6) for a in s.angles_deg],
        "lengths_mm": [round(float(v), 6) for v in s.lengths_mm],
        "tips_mm": np.round(s.tips * 1e3, 6).tolist(),
        "converged": s.converged.tolist(),
    }


def scan_json(s: WorkspaceScan) -> str:
    return json.dumps(scan_to_dict(s), separators=(",", ":")) + "\n"


def workspace_summary_csv(scans: list) -> str:
    """One row per scan with the half-disk area bound checked per row."""
    lines = [SUMMARY_HEADER]
    for s in scans:
        area = s.planar_area_mm2()
        within = area <= HALF_DISK_BOUND_MM2 + 1e-9
        lines.append(",".join([
            s.design_kind.value, _num(area, 2), _num(s.revolved_volume_mm3(), 1),
            _num(s.max_tip_polar_angle_deg(), 2), _num(HALF_DISK_BOUND_MM2, 1),
            "yes" if within else "no"]))
    return "\n".join(lines) + "\n"
