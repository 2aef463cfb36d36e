"""Assembly of total energy and its gradient over the free shape parameters.

The solver works on a stack of unit 3-vectors (link directions plus free
dipole directions for chains; free tangents for rods).  Positions are linear
in the links, so position gradients fold onto link k as the suffix sum of
per-point gradients over all points built after link k.  All gradients are
returned projected onto the tangent plane of each unit vector.
"""
from __future__ import annotations

import math

import numpy as np

from . import magnetics, mechanics
from . import chain as chain_mod
from .chain import (
    ChainConfig,
    DesignKind,
    DesignSpec,
    EnergyBreakdown,
    Gravity,
    RodShape,
    accumulate_positions,
)
from .magnetics import MU0, ExternalMagnet, FieldSource, UniformField


def project_rows(grad: np.ndarray, units: np.ndarray) -> np.ndarray:
    """Remove the radial component of each ambient gradient row."""
    return grad - np.einsum("ij,ij->i", grad, units)[:, None] * units


def normalize_rows(arr: np.ndarray) -> np.ndarray:
    return arr / np.linalg.norm(arr, axis=1)[:, None]


def _suffix_sums(per_point: np.ndarray) -> np.ndarray:
    """S[k] = sum_{j >= k} per_point[j]."""
    return np.cumsum(per_point[::-1], axis=0)[::-1]


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(3)
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("direction must be nonzero")
    return v / n


class ChainModel:
    """Energy of an n-ball chain as a function of its free unit vectors.

    Parameter stack P, shape (2n-2, 3): rows [0, n-1) are link directions,
    rows [n-1, 2n-2) are dipole directions of balls 2..n.  Ball 1 dipole is
    the fixed base orientation.
    """

    def __init__(self, design: DesignSpec, n: int, field: FieldSource | None,
                 gravity: Gravity | None = None, include_skin: bool = True,
                 base_position=(0.0, 0.0, 0.0), base_tangent=(1.0, 0.0, 0.0),
                 clamped_base: bool = False, wall=None, self_contact: bool = True):
        if design.kind is not DesignKind.BALL_CHAIN:
            raise ValueError("ChainModel requires a ball chain design")
        if design.ball_moment is None or design.ball_diameter is None:
            raise ValueError("design lacks ball constants")
        if n < 1:
            raise ValueError("need at least one ball")
        self.design = design
        self.n = n
        self.d = design.ball_diameter
        self.mmag = design.ball_moment
        self.field = field
        self.gravity = gravity
        self.include_skin = include_skin
        self.base_position = np.asarray(base_position, dtype=float).reshape(3)
        self.base_tangent = _unit(base_tangent)
        self.clamped_base = clamped_base
        self.wall = wall
        self.pairs = np.triu_indices(n, k=1) if n >= 2 else None
        # rigid spheres: without this the pair energy dives to -inf through
        # interpenetration once a fold brings non-adjacent balls together
        self.contact_k = chain_mod.contact_stiffness(design) if (self_contact and n >= 3) else 0.0
        self.contact_pairs = np.triu_indices(n, k=2) if self.contact_k > 0.0 else None
        self.skin_EI = design.skin_EI if include_skin else 0.0
        if gravity is not None:
            self.masses = np.full(n, design.ball_mass or 0.0)
            self.up = gravity.up_vector()
        self.free_rows = 2 * (n - 1)

    def straight_params(self) -> np.ndarray:
        return np.tile(self.base_tangent, (self.free_rows, 1))

    def params_from_config(self, config: ChainConfig) -> np.ndarray:
        if config.ball_count != self.n:
            raise ValueError("config ball count does not match model")
        if self.n == 1:
            return np.zeros((0, 3))
        return np.vstack([config.link_dirs, config.dipole_dirs[1:]])

    def config_from_params(self, P: np.ndarray) -> ChainConfig:
        links, dips = self._split(P)
        return ChainConfig(
            ball_count=self.n, ball_diameter=self.d, link_dirs=links,
            dipole_dirs=dips, base_position=self.base_position)

    def _split(self, P: np.ndarray):
        nl = self.n - 1
        links = P[:nl]
        dips = np.vstack([self.base_tangent[None, :], P[nl:]])
        return links, dips

    def positions(self, P: np.ndarray) -> np.ndarray:
        links, _ = self._split(P)
        return accumulate_positions(self.base_position, self.d, links)

    def tip_position(self, P: np.ndarray) -> np.ndarray:
        return self.positions(P)[-1]

    def energy_scale(self) -> float:
        """Characteristic energy magnitude used to scale tolerances."""
        n, d, m = self.n, self.d, self.mmag
        scale = max(n - 1, 1) * MU0 * m**2 / (2.0 * np.pi * d**3)
        if isinstance(self.field, UniformField):
            scale += n * m * np.linalg.norm(self.field.B)
        elif isinstance(self.field, ExternalMagnet):
            scale += n * m * np.linalg.norm(
                magnetics.field_at(self.field, self.base_position))
        if self.skin_EI > 0.0:
            scale += max(n - 2, 0) * self.skin_EI / d
        if self.gravity is not None:
            scale += float(np.sum(self.masses)) * self.gravity.g * d
        return max(scale, 1e-18)

    def breakdown(self, P: np.ndarray) -> EnergyBreakdown:
        return self._assemble(P, with_grad=False)[0]

    def value_and_grad(self, P: np.ndarray):
        bd, G = self._assemble(P, with_grad=True)
        return bd.total, G

    def _assemble(self, P: np.ndarray, with_grad: bool):
        n = self.n
        links, dips = self._split(P)
        pos = accumulate_positions(self.base_position, self.d, links)
        mom = self.mmag * dips
        Gp = np.zeros((n, 3))
        Gmom = np.zeros((n, 3))
        Gl_direct = np.zeros((max(n - 1, 0), 3))

        U_pair = 0.0
        if self.pairs is not None:
            U_pair, gp, gm = magnetics.chain_pair_energy_and_grads(pos, mom, self.pairs)
            Gp += gp
            Gmom += gm

        U_applied = 0.0
        if isinstance(self.field, UniformField):
            U_applied, gm = magnetics.uniform_field_energy_and_grads(mom, self.field.B)
            Gmom += gm
        elif isinstance(self.field, ExternalMagnet):
            U_applied, gp, gm = magnetics.external_field_energy_and_grads(pos, mom, self.field)
            Gp += gp
            Gmom += gm

        U_bend = 0.0
        if self.skin_EI > 0.0 and n >= 2:
            bend_stack = np.vstack([self.base_tangent[None, :], links]) if self.clamped_base else links
            if bend_stack.shape[0] >= 2:
                U_bend, gt = mechanics.bend_energy_and_grads(bend_stack, self.skin_EI, self.d)
                Gl_direct += gt[1:] if self.clamped_base else gt

        U_grav = 0.0
        if self.gravity is not None:
            U_grav, gp = mechanics.gravity_energy_and_grads(pos, self.masses, self.gravity.g, self.up)
            Gp += gp

        U_wall = 0.0
        if self.wall is not None:
            U_wall, gp = self.wall.penalty_and_grads(pos)
            Gp += gp

        U_contact = 0.0
        if self.contact_pairs is not None:
            U_contact, gp = chain_mod.contact_energy_and_grads(
                pos, self.d, self.contact_k, self.contact_pairs)
            Gp += gp

        bd = EnergyBreakdown(pair=U_pair, applied=U_applied, bending=U_bend,
                             gravity=U_grav, wall=U_wall, contact=U_contact)
        if not with_grad:
            return bd, None
        if n == 1:
            return bd, np.zeros((0, 3))
        # position j moves with every link k < j
        Gl = self.d * _suffix_sums(Gp)[1:] + Gl_direct
        Gdip = self.mmag * Gmom[1:]
        G = np.vstack([project_rows(Gl, links), project_rows(Gdip, dips[1:])])
        return bd, G


class RodModel:
    """Energy of a discretized rod (tip-magnet or distributed) over free tangents.

    Parameter stack P, shape (m-1, 3): tangents of segments 2..m.  The first
    tangent is clamped to the base direction.
    """

    def __init__(self, design: DesignSpec, segment_count: int, pitch: float,
                 field: FieldSource | None,
                 base_position=(0.0, 0.0, 0.0), base_tangent=(1.0, 0.0, 0.0)):
        if design.kind is DesignKind.BALL_CHAIN:
            raise ValueError("RodModel requires a rod design")
        if segment_count < 1:
            raise ValueError("need at least one segment")
        self.design = design
        self.m = segment_count
        self.h = pitch
        self.field = field
        self.base_position = np.asarray(base_position, dtype=float).reshape(3)
        self.base_tangent = _unit(base_tangent)
        self.EI = design.rod_EI
        self.free_rows = segment_count - 1

    def straight_params(self) -> np.ndarray:
        return np.tile(self.base_tangent, (self.free_rows, 1))

    def params_from_config(self, shape: RodShape) -> np.ndarray:
        if shape.segment_count != self.m:
            raise ValueError("rod segment count does not match model")
        return shape.tangents[1:].copy()

    def config_from_params(self, P: np.ndarray) -> RodShape:
        return RodShape(pitch=self.h, tangents=self._tangents(P),
                        base_position=self.base_position)

    def _tangents(self, P: np.ndarray) -> np.ndarray:
        return np.vstack([self.base_tangent[None, :], P])

    def positions(self, P: np.ndarray) -> np.ndarray:
        return accumulate_positions(self.base_position, self.h, self._tangents(P))

    def tip_position(self, P: np.ndarray) -> np.ndarray:
        t = self._tangents(P)
        end = self.positions(P)[-1]
        if self.design.kind is DesignKind.TIP_MAGNET and self.design.tip_length:
            return end + 0.5 * self.design.tip_length * t[-1]
        return end

    def energy_scale(self) -> float:
        scale = max(self.m - 1, 1) * self.EI / self.h
        Bmag = 0.0
        if isinstance(self.field, UniformField):
            Bmag = float(np.linalg.norm(self.field.B))
        elif isinstance(self.field, ExternalMagnet):
            Bmag = float(np.linalg.norm(
                magnetics.field_at(self.field, self.base_position)))
        if self.design.kind is DesignKind.TIP_MAGNET:
            scale += (self.design.tip_moment or 0.0) * Bmag
        else:
            scale += (self.design.moment_per_length or 0.0) * self.m * self.h * Bmag
        return max(scale, 1e-18)

    def breakdown(self, P: np.ndarray) -> EnergyBreakdown:
        return self._assemble(P, with_grad=False)[0]

    def value_and_grad(self, P: np.ndarray):
        bd, G = self._assemble(P, with_grad=True)
        return bd.total, G

    def _assemble(self, P: np.ndarray, with_grad: bool):
        t = self._tangents(P)
        pts = accumulate_positions(self.base_position, self.h, t)
        Gt = np.zeros_like(t)

        U_bend = 0.0
        if self.EI > 0.0 and self.m >= 2:
            U_bend, gt = mechanics.bend_energy_and_grads(t, self.EI, self.h)
            Gt += gt

        U_applied = 0.0
        if self.field is not None:
            if self.design.kind is DesignKind.TIP_MAGNET:
                U_applied = self._tip_field_term(t, pts, Gt)
            else:
                U_applied = self._distributed_field_term(t, pts, Gt)

        bd = EnergyBreakdown(applied=U_applied, bending=U_bend)
        if not with_grad:
            return bd, None
        return bd, project_rows(Gt[1:], t[1:])

    def _tip_field_term(self, t, pts, Gt) -> float:
        mtip = self.design.tip_moment or 0.0
        half_len = 0.5 * (self.design.tip_length or 0.0)
        mom = mtip * t[-1]
        if isinstance(self.field, UniformField):
            Gt[-1] += -mtip * self.field.B
            return -float(mom @ self.field.B)
        center = pts[-1] + half_len * t[-1]
        U, dU_dr, dU_dmom = magnetics.external_field_energy_and_grads(
            center[None, :], mom[None, :], self.field)
        Gt += self.h * dU_dr[0]
        Gt[-1] += half_len * dU_dr[0] + mtip * dU_dmom[0]
        return U

    def _distributed_field_term(self, t, pts, Gt) -> float:
        lam_h = (self.design.moment_per_length or 0.0) * self.h
        mom = lam_h * t
        if isinstance(self.field, UniformField):
            U, _ = magnetics.uniform_field_energy_and_grads(mom, self.field.B)
            Gt += lam_h * np.broadcast_to(-self.field.B, t.shape)
            return U
        centers = 0.5 * (pts[:-1] + pts[1:])
        U, dU_dr, dU_dmom = magnetics.external_field_energy_and_grads(centers, mom, self.field)
        # segment midpoint e moves fully with tangents before it, half with its own
        R = _suffix_sums(dU_dr)
        Gt += self.h * R - 0.5 * self.h * dU_dr
        Gt += lam_h * dU_dmom
        return U


def make_model(design: DesignSpec, field: FieldSource | None, *,
               ball_count: int | None = None, length: float | None = None,
               gravity: Gravity | None = None, include_skin: bool = True,
               base_position=(0.0, 0.0, 0.0), base_tangent=(1.0, 0.0, 0.0),
               clamped_base: bool = False, wall=None, self_contact: bool = True):
    """Build the right model for a design; rods need length, chains a count."""
    if design.kind is DesignKind.BALL_CHAIN:
        if ball_count is None:
            if length is None:
                raise ValueError("ball chain needs ball_count or length")
            ball_count = max(1, round(length / (design.ball_diameter or 1.0)))
        return ChainModel(design, ball_count, field, gravity=gravity,
                          include_skin=include_skin, base_position=base_position,
                          base_tangent=base_tangent, clamped_base=clamped_base,
                          wall=wall, self_contact=self_contact)
    if gravity is not None:
        raise ValueError("gravity is not modeled for rod designs")
    if wall is not None:
        raise ValueError("wall constraints are only modeled for ball chains")
    if length is None:
        raise ValueError("rod designs need a length")
    flex = length
    if design.kind is DesignKind.TIP_MAGNET:
        flex = length - (design.tip_length or 0.0)
    if flex <= 1e-12:
        raise ValueError("rod length does not exceed the rigid tip magnet")
    m = max(1, math.ceil(flex / design.pitch - 1e-9))
    return RodModel(design, m, flex / m, field,
                    base_position=base_position, base_tangent=base_tangent)
