"""Elastic bending of the polymer skin / rod and gravitational energy.

The skin (or a solid rod) is treated as a thin beam wrapped around a
piecewise-linear centerline.  At each interior point the local shape is a
circular arc through three consecutive points; the bend angle theta and the
segment spacing give the arc radius and the stored bending energy.

The per-joint energy E*I*theta/(2*rho) with rho = (d/2)/tan(theta/2) is
evaluated in the combined form (E*I/d) * theta * tan(theta/2), which is
finite and smooth through theta = 0.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError


@dataclass(frozen=True)
class MassPoint:
    """Point mass [kg] at a position [m]."""

    mass: float
    position: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        if self.mass < 0:
            raise ValueError("mass must be nonnegative")


def solid_circle_second_moment(diameter: float) -> float:
    """Area second moment I = pi d^4 / 64 of a solid circular section [m^4]."""
    return math.pi * diameter**4 / 64.0


def annulus_second_moment(outer_diameter: float, inner_diameter: float) -> float:
    """Area second moment of an annular section [m^4]."""
    if inner_diameter >= outer_diameter:
        raise ValueError("inner diameter must be smaller than outer diameter")
    return math.pi * (outer_diameter**4 - inner_diameter**4) / 64.0


def bend_angle(p_prev, p, p_next) -> float:
    """Turning angle [rad] of the centerline at p, in [0, pi].

    Quadrant-correct: theta = atan2(|w x v|, w . v) with v = p - p_prev and
    w = p_next - p.  Zero for collinear points; raises for zero-length
    segments.
    """
    v = np.asarray(p, dtype=float) - np.asarray(p_prev, dtype=float)
    w = np.asarray(p_next, dtype=float) - np.asarray(p, dtype=float)
    nv = np.linalg.norm(v)
    nw = np.linalg.norm(w)
    if nv == 0.0 or nw == 0.0:
        raise DegenerateGeometryError("bend_angle with a zero-length segment")
    s = np.linalg.norm(np.cross(w, v))
    c = float(w @ v)
    return math.atan2(s, c)


def curvature_radius(theta: float, d: float) -> float:
    """Local arc radius rho = (d/2) * cot(theta/2) for segment spacing d [m].

    theta = 0 returns inf (straight); theta >= pi has no arc through the
    three points and raises.
    """
    if d <= 0:
        raise ValueError("segment spacing d must be positive")
    if theta < 0 or theta >= math.pi:
        raise DegenerateGeometryError(f"bend angle {theta} outside [0, pi)")
    if theta == 0.0:
        return math.inf
    return (d / 2.0) / math.tan(theta / 2.0)


def segment_bend_energy(theta: float, d: float, E: float, I: float) -> float:
    """Bending energy of one joint: E*I*theta/(2*rho) = (E*I/d)*theta*tan(theta/2)."""
    if d <= 0:
        raise ValueError("segment spacing d must be positive")
    if theta < 0 or theta >= math.pi:
        raise DegenerateGeometryError(f"bend angle {theta} outside [0, pi)")
    return (E * I / d) * theta * math.tan(theta / 2.0)


def total_skin_energy(points, d: float, E: float, I: float) -> float:
    """Sum of segment_bend_energy over all interior points of a centerline.

    End points carry no bending.  Fewer than 3 points means no interior
    points; that returns 0 with a diagnostic so silent misuse is visible.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if pts.shape[0] < 3:
        warnings.warn("total_skin_energy needs at least 3 points; returning 0", stacklevel=2)
        return 0.0
    total = 0.0
    for i in range(1, pts.shape[0] - 1):
        total += segment_bend_energy(bend_angle(pts[i - 1], pts[i], pts[i + 1]), d, E, I)
    return total


def gravity_energy(masses, g: float = 9.81, up=(0.0, 0.0, 1.0)) -> float:
    """U_g = sum_i m_i * g * (up . p_i); raising a mass raises its energy."""
    upv = np.asarray(up, dtype=float)
    n = np.linalg.norm(upv)
    if n == 0.0:
        raise ValueError("up direction must be nonzero")
    upv = upv / n
    total = 0.0
    for mp in masses:
        total += mp.mass * g * float(upv @ mp.position)
    return total


# ---------------------------------------------------------------------------
# Array kernels used by the solver.  Tangent-based: for points built by
# accumulating unit tangents, the bend angle at an interior point is just the
# angle between consecutive tangents, which keeps gradients local.
# ---------------------------------------------------------------------------

def joint_angles(tangents: np.ndarray) -> np.ndarray:
    """Angles [rad] between consecutive unit tangents, shape (m-1,)."""
    t0 = tangents[:-1]
    t1 = tangents[1:]
    cross = np.cross(t1, t0)
    s = np.linalg.norm(cross, axis=1)
    c = np.einsum("ij,ij->i", t1, t0)
    return np.arctan2(s, c)


def bend_energy_and_grads(tangents: np.ndarray, EI: float, h: float):
    """Total joint bending energy and its gradient w.r.t. each unit tangent.

    tangents: (m, 3) unit rows, spacing h.  Energy per joint is
    (EI/h) * theta * tan(theta/2).  Returns (U, dU_dt) with dU_dt of shape
    (m, 3) in ambient coordinates (not yet projected onto tangent planes).

    For unit vectors the angle gradient is (c*w - v)/s w.r.t. w and
    (c*v - w)/s w.r.t. v with s = sin(theta), c = cos(theta); the prefactor
    dU/dtheta vanishes linearly at theta = 0, so the ratio dU/dtheta / s is
    evaluated by series below 1e-4 rad to avoid 0/0.
    """
    m = tangents.shape[0]
    dU_dt = np.zeros_like(tangents)
    if m < 2:
        return 0.0, dU_dt
    v = tangents[:-1]  # incoming tangent at each joint
    w = tangents[1:]   # outgoing tangent
    c = np.einsum("ij,ij->i", w, v)
    s = np.linalg.norm(np.cross(w, v), axis=1)
    theta = np.arctan2(s, c)
    if np.any(theta >= math.pi - 1e-9):
        raise DegenerateGeometryError("joint folded back onto itself (theta ~ pi)")
    k = EI / h
    half = theta / 2.0
    U = float(np.sum(k * theta * np.tan(half)))
    # g_over_s = (dU/dtheta)/s, finite at theta -> 0
    g_over_s = np.empty_like(theta)
    small = theta < 1e-4
    if np.any(small):
        th2 = theta[small] ** 2
        g_over_s[small] = k * (1.0 + (11.0 / 24.0) * th2)
    big = ~small
    if np.any(big):
        tb = theta[big]
        dU_dth = k * (np.tan(tb / 2.0) + (tb / 2.0) / np.cos(tb / 2.0) ** 2)
        g_over_s[big] = dU_dth / s[big]
    gw = g_over_s[:, None] * (c[:, None] * w - v)
    gv = g_over_s[:, None] * (c[:, None] * v - w)
    dU_dt[1:] += gw
    dU_dt[:-1] += gv
    return U, dU_dt


def gravity_energy_and_grads(pos: np.ndarray, masses: np.ndarray, g: float, up: np.ndarray):
    """U_g over an array of point masses; gradient w.r.t. each position."""
    U = g * float(masses @ (pos @ up))
    dU_dpos = g * masses[:, None] * up[None, :]
    return U, dU_dpos
