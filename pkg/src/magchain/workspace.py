"""Reachable-workspace scans: tip loci under a rotating uniform field.

For each structure length the field angle sweeps 0..180 deg in the base
tangent plane (x toward the clamp axis, z the turn direction) with
continuation, i.e. each solve warm-starts from the previous angle's shape.
The region swept by the tip is bounded by three curves:

  A: straight tips at angle 0 over all lengths (ascending),
  B: tips of the longest structure over all angles (ascending),
  C: tips at angle 180 over all lengths (descending).

Planar area comes from the shoelace formula on the closed A+B+C polygon and
the volumetric workspace from revolving that polygon about the x axis.
Lengths are truncated to whole structures: ball count = round(length / d)
for chains, exact length for rods.
"""
from __future__ import annotations

import concurrent.futures
import warnings
from dataclasses import dataclass

import numpy as np

from .chain import DesignKind, DesignSpec
from .errors import SimulationError
from .magnetics import UniformField
from .solver import SolveOptions, solve_shape

DEFAULT_FIELD_T = 0.04
DEFAULT_ANGLES_DEG = np.arange(0.0, 181.0, 1.0)
DEFAULT_LENGTHS_MM = np.arange(1.0, 21.0, 1.0)
HALF_DISK_BOUND_MM2 = np.pi * 20.0**2 / 2.0  # ideal single revolute joint, 20 mm


@dataclass(frozen=True)
class WorkspaceScan:
    design_kind: DesignKind
    field_magnitude: float          # T
    angles_deg: np.ndarray          # (A,)
    lengths_mm: np.ndarray          # (L,)
    tips: np.ndarray                # (A, L, 3) in meters, scan plane x-z
    converged: np.ndarray           # (A, L) bool

    def boundary(self) -> np.ndarray:
        """Closed boundary polygon (not repeating the first vertex), mm, (x, z).

        Non-converged cells are excluded with a warning; the polygon is
        A (lengths ascending) + B (angles ascending) + C (lengths descending).
        """
        a_idx, c_idx = 0, len(self.angles_deg) - 1
        l_max = len(self.lengths_mm) - 1
        segs = []
        for name, tips, ok in (
            ("A", self.tips[a_idx, :, :], self.converged[a_idx, :]),
            ("B", self.tips[:, l_max, :], self.converged[:, l_max]),
            ("C", self.tips[c_idx, ::-1, :], self.converged[c_idx, ::-1]),
        ):
            if not ok.all():
                warnings.warn(
                    f"boundary {name}: excluding {int((~ok).sum())} non-converged cells")
            segs.append(tips[ok])
        poly = np.vstack(segs)[:, [0, 2]] * 1e3
        # collapse consecutive duplicates (e.g. single-ball tips at the base)
        keep = np.ones(len(poly), dtype=bool)
        keep[1:] = np.linalg.norm(np.diff(poly, axis=0), axis=1) > 1e-9
        poly = poly[keep]
        if len(poly) > 1 and np.linalg.norm(poly[-1] - poly[0]) <= 1e-9:
            poly = poly[:-1]  # avoid a zero-length closing edge
        return poly

    def planar_area_mm2(self) -> float:
        return planar_area(self.boundary())

    def revolved_volume_mm3(self) -> float:
        return revolved_volume(self.boundary())

    def max_tip_polar_angle_deg(self) -> float:
        """Largest tip polar angle about the base (+x axis) over converged cells."""
        t = self.tips[self.converged]
        t = t[np.linalg.norm(t[:, [0, 2]], axis=1) > 1e-9]
        if len(t) == 0:
            return 0.0
        return float(np.rad2deg(np.arctan2(t[:, 2], t[:, 0])).max())


def _row_kwargs(design: DesignSpec, length_m: float):
    if design.kind is DesignKind.BALL_CHAIN:
        return {"ball_count": max(1, round(length_m / design.ball_diameter))}
    return {"length": length_m}


def _scan_row(design: DesignSpec, field_magnitude: float, angles_deg: np.ndarray,
              length_m: float, include_skin: bool, options: SolveOptions):
    """Continuation sweep over field angle for one structure length."""
    if design.kind is DesignKind.TIP_MAGNET and length_m <= design.tip_length + 1e-12:
        # all magnet, no flexible segment: a rigid stub clamped at the base
        tip = np.array([0.5 * length_m, 0.0, 0.0])
        return np.tile(tip, (len(angles_deg), 1)), np.ones(len(angles_deg), dtype=bool)
    tips = np.zeros((len(angles_deg), 3))
    ok = np.zeros(len(angles_deg), dtype=bool)
    kw = _row_kwargs(design, length_m)
    prev = None
    for i, ang in enumerate(angles_deg):
        a = np.deg2rad(ang)
        field = UniformField((field_magnitude * np.cos(a), 0.0,
                              field_magnitude * np.sin(a)))
        try:
            res = solve_shape(design, field, include_skin=include_skin, init=prev,
                              options=options, **kw)
            if not res.converged and prev is not None:
                res2 = solve_shape(design, field, include_skin=include_skin,
                                   options=options, **kw)
                if res2.converged or res2.energy.total < res.energy.total:
                    res = res2
        except SimulationError as exc:
            warnings.warn(f"length {length_m * 1e3:g} mm, angle {ang:g} deg: {exc}")
            prev = None
            continue
        tips[i] = res.tip
        ok[i] = res.converged
        prev = res.config if res.converged else None
    return tips, ok


def scan(design: DesignSpec, field_magnitude: float = DEFAULT_FIELD_T,
         angles_deg=None, lengths_mm=None, *, include_skin: bool = True,
         options: SolveOptions | None = None, parallel: int | None = None) -> WorkspaceScan:
    """Sweep (field angle) x (structure length); returns the tip matrix.

    Rows (lengths) are independent and run in ``parallel`` worker processes
    when requested; angles within a row are sequential (continuation).
    """
    angles_deg = np.asarray(DEFAULT_ANGLES_DEG if angles_deg is None else angles_deg,
                            dtype=float)
    lengths_mm = np.asarray(DEFAULT_LENGTHS_MM if lengths_mm is None else lengths_mm,
                            dtype=float)
    if len(angles_deg) == 0 or len(lengths_mm) == 0:
        raise ValueError("angle and length grids must be nonempty")
    if np.any(np.diff(angles_deg) <= 0) or np.any(np.diff(lengths_mm) <= 0):
        raise ValueError("grids must be strictly increasing")
    options = options or SolveOptions()
    tips = np.zeros((len(angles_deg), len(lengths_mm), 3))
    ok = np.zeros((len(angles_deg), len(lengths_mm)), dtype=bool)
    jobs = [(design, field_magnitude, angles_deg, lmm * 1e-3, include_skin, options)
            for lmm in lengths_mm]
    if parallel and parallel > 1 and len(lengths_mm) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=parallel) as pool:
            rows = list(pool.map(_scan_row_star, jobs))
    else:
        rows = [_scan_row(*j) for j in jobs]
    for j, (t, o) in enumerate(rows):
        tips[:, j, :] = t
        ok[:, j] = o
    return WorkspaceScan(design_kind=design.kind, field_magnitude=field_magnitude,
                         angles_deg=angles_deg, lengths_mm=lengths_mm,
                         tips=tips, converged=ok)


def _scan_row_star(args):
    return _scan_row(*args)


# -- polygon geometry ---------------------------------------------------------

def _cross2(u, v) -> float:
    return u[0] * v[1] - u[1] * v[0]


def _segments_intersect(p, q, r, s):
    """Proper intersection test for segments pq and rs (shared endpoints ignored)."""
    d1 = _cross2(q - p, r - p)
    d2 = _cross2(q - p, s - p)
    d3 = _cross2(s - r, p - r)
    d4 = _cross2(s - r, q - r)
    if d1 == 0.0 or d2 == 0.0 or d3 == 0.0 or d4 == 0.0:
        # an endpoint lies on the other segment's line: touching, not crossing
        return False
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


def self_intersection(polygon: np.ndarray):
    """First pair of properly crossing edges of the closed polygon, or None."""
    n = len(polygon)
    closed = np.vstack([polygon, polygon[:1]])
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue  # closing edge adjacent to the first
            if _segments_intersect(closed[i], closed[i + 1], closed[j], closed[j + 1]):
                return (i, j, 0.5 * (closed[i] + closed[i + 1]))
    return None


def planar_area(polygon: np.ndarray) -> float:
    """Shoelace area of a simple closed polygon, same units^2 as input."""
    if len(polygon) < 3:
        return 0.0
    hit = self_intersection(polygon)
    if hit is not None:
        i, j, where = hit
        raise ValueError(
            f"boundary self-intersects (edges {i} and {j} near {where}); "
            "area of a non-simple polygon is ill-defined")
    x, y = polygon[:, 0], polygon[:, 1]
    return float(0.5 * abs(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)))


def revolved_volume(polygon: np.ndarray) -> float:
    """Volume of the polygon revolved about the x axis (input units^3).

    Second-moment form of the solid of revolution: for each directed edge the
    washer slab contributes (x_{i+1}-x_i)(y_i^2 + y_i y_{i+1} + y_{i+1}^2)/3.
    The polygon must not cross the axis.
    """
    if len(polygon) < 3:
        return 0.0
    y = polygon[:, 1]
    if y.min() < -1e-9 and y.max() > 1e-9:
        raise ValueError("region crosses the revolution axis")
    x1, y1 = polygon[:, 0], np.abs(polygon[:, 1])
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
    return float(np.pi * abs(np.sum((x2 - x1) * (y1 * y1 + y1 * y2 + y2 * y2) / 3.0)))


# -- plotting -----------------------------------------------------------------

def _fmt(v: float) -> str:
    return f"{v:.4f}".rstrip("0").rstrip(".")


def _polyline(points_mm: np.ndarray, sx, sy, style: str) -> str:
    pts = " ".join(f"{_fmt(sx(p[0]))},{_fmt(sy(p[1]))}" for p in points_mm)
    return f'<polyline fill="none" {style} points="{pts}"/>'


def svg_overlay(scans: list[WorkspaceScan], title: str = "tip workspace") -> str:
    """Boundary overlay plot for one or more scans, byte-stable output."""
    w, h, margin = 640, 480, 54
    xmax = max(float(s.lengths_mm.max()) for s in scans) * 1.08
    span = 2 * xmax

    def sx(x_mm):
        return margin + (x_mm + xmax) / span * (w - 2 * margin)

    def sy(z_mm):
        return h - margin - (z_mm + xmax) / span * (h - 2 * margin)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
           f'viewBox="0 0 {w} {h}">',
           f'<rect width="{w}" height="{h}" fill="white"/>',
           f'<text x="{w // 2}" y="20" text-anchor="middle" font-size="14">{title}</text>']
    # axes with mm ticks
    tick = 5.0 if xmax <= 25 else 10.0
    out.append(f'<line x1="{_fmt(sx(-xmax))}" y1="{_fmt(sy(0))}" x2="{_fmt(sx(xmax))}" '
               f'y2="{_fmt(sy(0))}" stroke="#999" stroke-width="1"/>')
    out.append(f'<line x1="{_fmt(sx(0))}" y1="{_fmt(sy(-xmax))}" x2="{_fmt(sx(0))}" '
               f'y2="{_fmt(sy(xmax))}" stroke="#999" stroke-width="1"/>')
    t = -np.floor(xmax / tick) * tick
    while t <= xmax + 1e-9:
        if abs(t) > 1e-9:
            out.append(f'<line x1="{_fmt(sx(t))}" y1="{_fmt(sy(0) - 4)}" '
                       f'x2="{_fmt(sx(t))}" y2="{_fmt(sy(0) + 4)}" stroke="#999"/>')
            out.append(f'<text x="{_fmt(sx(t))}" y="{_fmt(sy(0) + 18)}" '
                       f'text-anchor="middle" font-size="10">{_fmt(t)}</text>')
            out.append(f'<line x1="{_fmt(sx(0) - 4)}" y1="{_fmt(sy(t))}" '
                       f'x2="{_fmt(sx(0) + 4)}" y2="{_fmt(sy(t))}" stroke="#999"/>')
            out.append(f'<text x="{_fmt(sx(0) - 8)}" y="{_fmt(sy(t) + 3)}" '
                       f'text-anchor="end" font-size="10">{_fmt(t)}</text>')
        t += tick
    out.append(f'<text x="{_fmt(sx(xmax) - 4)}" y="{_fmt(sy(0) - 8)}" '
               f'text-anchor="end" font-size="11">x [mm]</text>')
    for k, s in enumerate(scans):
        c = colors[k % len(colors)]
        poly = s.boundary()
        closed = np.vstack([poly, poly[:1]])
        out.append(_polyline(closed, sx, sy, f'stroke="{c}" stroke-width="1.5"'))
        out.append(f'<text x="{w - margin - 4}" y="{36 + 16 * k}" text-anchor="end" '
                   f'font-size="12" fill="{c}">{s.design_kind.value}: '
                   f'{s.planar_area_mm2():.1f} mm2</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
