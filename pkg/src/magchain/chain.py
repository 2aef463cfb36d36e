"""Robot tip designs, chain/rod configurations, and their total energies.

Three tip designs are modeled:

* ``ball_chain``      - permanent-magnet spheres held in a thin silicone skin.
* ``tip_magnet``      - passive polymer rod with one cylindrical magnet glued
                        to the distal end.
* ``distributed``     - polymer rod with magnetic particles cured in, giving a
                        uniform moment per unit length along the centerline.

A ball chain is parameterized by unit link directions (ball i to ball i+1)
and unit dipole directions; ball centers follow by accumulation, so adjacent
balls touch by construction and no contact constraint is ever solved.  Ball 1
is potted: its center and dipole direction are fixed inputs.  Rods are
parameterized by unit segment tangents with the first tangent clamped to the
base direction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from . import magnetics, mechanics
from .magnetics import MU0, ExternalMagnet, FieldSource, UniformField

NDFEB_DENSITY = 7500.0  # kg/m^3, sintered NdFeB

_UNIT_TOL = 1e-8


class DesignKind(str, Enum):
    BALL_CHAIN = "ball_chain"
    TIP_MAGNET = "tip_magnet"
    DISTRIBUTED = "distributed"


def sphere_moment(diameter: float, remanence: float) -> float:
    """|m| = B_r * V / mu0 for a uniformly magnetized sphere [A m^2]."""
    return remanence * (math.pi / 6.0) * diameter**3 / MU0


def cylinder_moment(diameter: float, length: float, remanence: float) -> float:
    """|m| = B_r * V / mu0 for a uniformly magnetized cylinder [A m^2]."""
    return remanence * math.pi * (diameter / 2.0) ** 2 * length / MU0


@dataclass(frozen=True)
class DesignSpec:
    """Geometry, magnetic, and elastic constants of one tip design.

    Only the fields relevant to ``kind`` are populated; the rest stay None.
    Lengths in m, moduli in Pa, moments in A m^2, masses in kg.
    """

    kind: DesignKind
    outer_diameter: float = 1.0e-3
    # ball chain
    ball_diameter: float | None = None
    remanence: float | None = None
    ball_moment: float | None = None
    ball_mass: float | None = None
    skin_modulus: float | None = None
    skin_second_moment: float | None = None
    # rods
    rod_modulus: float | None = None
    rod_second_moment: float | None = None
    tip_moment: float | None = None
    tip_length: float | None = None
    moment_per_length: float | None = None
    pitch: float = 0.5e-3  # rod discretization target [m]

    @property
    def skin_EI(self) -> float:
        if self.skin_modulus is None or self.skin_second_moment is None:
            return 0.0
        return self.skin_modulus * self.skin_second_moment

    @property
    def rod_EI(self) -> float:
        return (self.rod_modulus or 0.0) * (self.rod_second_moment or 0.0)

    def with_overrides(self, **kwargs) -> "DesignSpec":
        return replace(self, **kwargs)


def design_from_table(kind: DesignKind | str) -> DesignSpec:
    """Reference constants for the three 1 mm outer-diameter designs.

    Ball chain: 0.9 mm N52-grade spheres (B_r = 1.48 T) in an Ecoflex 00-30
    skin (E = 42.7 kPa) of 1.0/0.9 mm annular section.  Tip magnet: Ecoflex
    rod with a 0.67 mA m^2 cylindrical magnet, 1 mm long, at the tip.
    Distributed: stiffer particle-loaded rod (E = 128.2 kPa) carrying
    0.37 A m of moment per meter of length (B_r = 0.59 T over the section).
    """
    kind = DesignKind(kind)
    if kind is DesignKind.BALL_CHAIN:
        d = 0.9e-3
        br = 1.48
        return DesignSpec(
            kind=kind,
            ball_diameter=d,
            remanence=br,
            ball_moment=sphere_moment(d, br),
            ball_mass=NDFEB_DENSITY * (math.pi / 6.0) * d**3,
            skin_modulus=42.7e3,
            skin_second_moment=mechanics.annulus_second_moment(1.0e-3, 0.9e-3),
        )
    if kind is DesignKind.TIP_MAGNET:
        return DesignSpec(
            kind=kind,
            rod_modulus=42.7e3,
            rod_second_moment=mechanics.solid_circle_second_moment(1.0e-3),
            tip_moment=0.67e-3,
            tip_length=1.0e-3,
        )
    if kind is DesignKind.DISTRIBUTED:
        return DesignSpec(
            kind=kind,
            rod_modulus=128.2e3,
            rod_second_moment=mechanics.solid_circle_second_moment(1.0e-3),
            moment_per_length=0.37,
        )
    raise ValueError(f"unknown design kind {kind}")


def experimental_ball_chain() -> DesignSpec:
    """Bench-scale chain: 3.175 mm N42 spheres (B_r = 1.32 T), 0.13 g each.

    The bench chain runs bare (its sleeve is far softer than the magnetic
    coupling), so no skin constants are set.
    """
    d = 3.175e-3
    br = 1.32
    return DesignSpec(
        kind=DesignKind.BALL_CHAIN,
        outer_diameter=d,
        ball_diameter=d,
        remanence=br,
        ball_moment=sphere_moment(d, br),
        ball_mass=0.13e-3,
    )


@dataclass(frozen=True)
class EnergyBreakdown:
    """Potential energy terms [J]; total is their exact sum."""

    pair: float = 0.0      # ball-ball dipole interactions
    applied: float = 0.0   # moments in the applied field
    bending: float = 0.0   # skin / rod elastic bending
    gravity: float = 0.0
    wall: float = 0.0      # soft channel-wall penalty (navigation only)
    contact: float = 0.0   # non-adjacent ball self-contact penalty

    @property
    def total(self) -> float:
        return (self.pair + self.applied + self.bending + self.gravity
                + self.wall + self.contact)

    def as_dict(self) -> dict:
        return {
            "pair_J": self.pair,
            "applied_J": self.applied,
            "bending_J": self.bending,
            "gravity_J": self.gravity,
            "wall_J": self.wall,
            "contact_J": self.contact,
            "total_J": self.total,
        }


def _unit_rows(arr, name: str) -> np.ndarray:
    a = np.asarray(arr, dtype=float).reshape(-1, 3)
    norms = np.linalg.norm(a, axis=1)
    if np.any(np.abs(norms - 1.0) > _UNIT_TOL):
        worst = float(np.max(np.abs(norms - 1.0)))
        raise ValueError(f"{name} rows must be unit vectors (worst deviation {worst:.2e})")
    return a / norms[:, None]


@dataclass(frozen=True)
class ChainConfig:
    """Shape state of an n-ball chain.

    link_dirs: (n-1, 3) unit directions from ball i to ball i+1.
    dipole_dirs: (n, 3) unit dipole directions; row 0 is the fixed base
    orientation and is not a free parameter.  Free parameters: 2 per free
    unit vector, 4n - 4 in total.
    """

    ball_count: int
    ball_diameter: float
    link_dirs: np.ndarray
    dipole_dirs: np.ndarray
    base_position: np.ndarray

    def __post_init__(self):
        n = self.ball_count
        if n < 1:
            raise ValueError("ball_count must be >= 1")
        if self.ball_diameter <= 0:
            raise ValueError("ball_diameter must be positive")
        links = _unit_rows(self.link_dirs, "link_dirs") if n > 1 else np.zeros((0, 3))
        dips = _unit_rows(self.dipole_dirs, "dipole_dirs")
        if links.shape != (n - 1, 3):
            raise ValueError(f"link_dirs must have shape ({n - 1}, 3)")
        if dips.shape != (n, 3):
            raise ValueError(f"dipole_dirs must have shape ({n}, 3)")
        base = np.asarray(self.base_position, dtype=float).reshape(3)
        for name, arr in (("link_dirs", links), ("dipole_dirs", dips), ("base_position", base)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
            arr.setflags(write=False)
        object.__setattr__(self, "link_dirs", links)
        object.__setattr__(self, "dipole_dirs", dips)
        object.__setattr__(self, "base_position", base)

    @classmethod
    def straight(cls, ball_count: int, ball_diameter: float,
                 base_position=(0.0, 0.0, 0.0), tangent=(1.0, 0.0, 0.0)) -> "ChainConfig":
        t = np.asarray(tangent, dtype=float)
        t = t / np.linalg.norm(t)
        return cls(
            ball_count=ball_count,
            ball_diameter=ball_diameter,
            link_dirs=np.tile(t, (ball_count - 1, 1)),
            dipole_dirs=np.tile(t, (ball_count, 1)),
            base_position=np.asarray(base_position, dtype=float),
        )

    @property
    def free_parameter_count(self) -> int:
        return 4 * self.ball_count - 4

    def positions(self) -> np.ndarray:
        """Ball centers (n, 3); |p_{i+1} - p_i| = d by construction."""
        return accumulate_positions(self.base_position, self.ball_diameter, self.link_dirs)

    def tip_position(self) -> np.ndarray:
        return self.positions()[-1]


def accumulate_positions(base: np.ndarray, step: float, dirs: np.ndarray) -> np.ndarray:
    out = np.empty((dirs.shape[0] + 1, 3))
    out[0] = base
    if dirs.shape[0]:
        np.cumsum(step * dirs, axis=0, out=out[1:])
        out[1:] += base
    return out


def nonadjacent_overlaps(config: ChainConfig, slack: float = 1e-6) -> list[tuple[int, int]]:
    """Pairs of non-adjacent balls closer than d * (1 - slack), 0-based indices."""
    n = config.ball_count
    if n < 3:
        return []
    pos = config.positions()
    iu, ju = np.triu_indices(n, k=2)
    dist = np.linalg.norm(pos[ju] - pos[iu], axis=1)
    hits = np.nonzero(dist < config.ball_diameter * (1.0 - slack))[0]
    return [(int(iu[k]), int(ju[k])) for k in hits]


@dataclass(frozen=True)
class Gravity:
    """Gravity specification; up is the direction of increasing height."""

    g: float = 9.81
    up: tuple = (0.0, 0.0, 1.0)

    def up_vector(self) -> np.ndarray:
        u = np.asarray(self.up, dtype=float)
        n = np.linalg.norm(u)
        if n == 0:
            raise ValueError("up direction must be nonzero")
        return u / n


def contact_stiffness(design: DesignSpec) -> float:
    """Self-contact penalty stiffness [N/m] for non-adjacent balls.

    Point dipoles attract without bound as two balls interpenetrate, so
    rigid-sphere contact must push back.  Sized against the peak coaxial
    attraction 6 C m^2 / d^4 so equilibrium penetration stays under ~0.5%
    of the ball diameter.
    """
    if design.ball_moment is None or design.ball_diameter is None:
        raise ValueError("design lacks ball constants")
    C = magnetics.MU0 / (4.0 * np.pi)
    return 2000.0 * C * design.ball_moment**2 / design.ball_diameter**5


def contact_energy_and_grads(pos: np.ndarray, diameter: float, k: float,
                             pairs=None):
    """Soft non-overlap penalty sum(1/2 k delta^2) over non-adjacent pairs.

    delta = max(0, d - |p_j - p_i|).  Returns (U, dU/dpos).
    """
    n = pos.shape[0]
    grad = np.zeros_like(pos)
    if n < 3:
        return 0.0, grad
    if pairs is None:
        pairs = np.triu_indices(n, k=2)
    i, j = pairs
    r = pos[j] - pos[i]
    rho = np.linalg.norm(r, axis=1)
    delta = diameter - rho
    active = delta > 0.0
    if not np.any(active):
        return 0.0, grad
    i, j, r, rho, delta = i[active], j[active], r[active], rho[active], delta[active]
    U = 0.5 * k * float(np.sum(delta**2))
    # dU/drho = -k delta, along r_hat toward/away
    coeff = (-k * delta / rho)[:, None] * r
    np.add.at(grad, j, coeff)
    np.subtract.at(grad, i, coeff)
    return U, grad


def total_energy(config: ChainConfig, design: DesignSpec, field: FieldSource | None,
                 gravity: Gravity | None = None, include_skin: bool = True,
                 self_contact: bool = True) -> EnergyBreakdown:
    """Full potential energy of a ball chain configuration.

    Terms: pairwise dipole-dipole over all unordered ball pairs, applied
    field (uniform or external magnet), skin bending over interior balls,
    gravity, and non-adjacent self-contact.  Rod designs use rod_energy.
    """
    if design.kind is not DesignKind.BALL_CHAIN:
        raise ValueError("total_energy applies to ball chains; use rod_energy for rods")
    if design.ball_moment is None or design.ball_diameter is None:
        raise ValueError("design lacks ball constants")
    pos = config.positions()
    mom = design.ball_moment * config.dipole_dirs
    U_pair, _, _ = magnetics.chain_pair_energy_and_grads(pos, mom)
    U_applied = 0.0
    if isinstance(field, UniformField):
        U_applied, _ = magnetics.uniform_field_energy_and_grads(mom, field.B)
    elif isinstance(field, ExternalMagnet):
        U_applied, _, _ = magnetics.external_field_energy_and_grads(pos, mom, field)
    elif field is not None:
        raise TypeError(f"unsupported field source {type(field).__name__}")
    U_bend = 0.0
    if include_skin and design.skin_EI > 0.0 and config.ball_count >= 3:
        U_bend, _ = mechanics.bend_energy_and_grads(
            config.link_dirs, design.skin_EI, design.ball_diameter)
    U_grav = 0.0
    if gravity is not None:
        masses = np.full(config.ball_count, design.ball_mass or 0.0)
        U_grav, _ = mechanics.gravity_energy_and_grads(
            pos, masses, gravity.g, gravity.up_vector())
    U_contact = 0.0
    if self_contact:
        U_contact, _ = contact_energy_and_grads(
            pos, config.ball_diameter, contact_stiffness(design))
    return EnergyBreakdown(pair=U_pair, applied=U_applied, bending=U_bend,
                           gravity=U_grav, contact=U_contact)


@dataclass(frozen=True)
class RodShape:
    """Discretized rod centerline: unit tangents at spacing ``pitch``.

    tangents: (m, 3); row 0 is the clamped base tangent and is not a free
    parameter.  For the tip-magnet design the rigid magnet rides beyond the
    last point, aligned with the last tangent, and the magnet center is the
    reported tip.
    """

    pitch: float
    tangents: np.ndarray
    base_position: np.ndarray

    def __post_init__(self):
        if self.pitch <= 0:
            raise ValueError("pitch must be positive")
        t = _unit_rows(self.tangents, "tangents")
        if t.shape[0] < 1:
            raise ValueError("rod needs at least one segment")
        base = np.asarray(self.base_position, dtype=float).reshape(3)
        t.setflags(write=False)
        base.setflags(write=False)
        object.__setattr__(self, "tangents", t)
        object.__setattr__(self, "base_position", base)

    @classmethod
    def straight(cls, length: float, pitch_target: float,
                 base_position=(0.0, 0.0, 0.0), tangent=(1.0, 0.0, 0.0)) -> "RodShape":
        if length <= 0:
            raise ValueError("rod length must be positive")
        m = max(1, math.ceil(length / pitch_target - 1e-9))
        t = np.asarray(tangent, dtype=float)
        t = t / np.linalg.norm(t)
        return cls(pitch=length / m, tangents=np.tile(t, (m, 1)),
                   base_position=np.asarray(base_position, dtype=float))

    @property
    def segment_count(self) -> int:
        return self.tangents.shape[0]

    def points(self) -> np.ndarray:
        """Centerline points (m+1, 3)."""
        return accumulate_positions(self.base_position, self.pitch, self.tangents)

    def tip_position(self, design: DesignSpec) -> np.ndarray:
        end = self.points()[-1]
        if design.kind is DesignKind.TIP_MAGNET and design.tip_length:
            return end + 0.5 * design.tip_length * self.tangents[-1]
        return end


def straight_rod_shape(design: DesignSpec, length: float,
                       base_position=(0.0, 0.0, 0.0), tangent=(1.0, 0.0, 0.0)) -> RodShape | None:
    """Straight shape of total structure length ``length`` for a rod design.

    For the tip-magnet design the rigid magnet occupies the distal
    tip_length, so the flexible part is length - tip_length.  Returns None
    when no flexible segment remains (the structure is all magnet); callers
    treat that as a rigid straight stub.
    """
    if design.kind is DesignKind.BALL_CHAIN:
        raise ValueError("rod shape requested for a ball-chain design")
    flex = length
    if design.kind is DesignKind.TIP_MAGNET:
        flex = length - (design.tip_length or 0.0)
    if flex <= 1e-12:
        return None
    return RodShape.straight(flex, design.pitch, base_position, tangent)


def rod_energy(shape: RodShape, design: DesignSpec, field: FieldSource | None) -> EnergyBreakdown:
    """Potential energy of a rod design: elastic bending plus applied field.

    Tip magnet: single moment design.tip_moment along the last tangent at the
    magnet center.  Distributed: each segment carries moment_per_length *
    pitch along its tangent, applied at the segment midpoint.  Rod
    self-interaction and rod gravity are not modeled.
    """
    if design.kind is DesignKind.BALL_CHAIN:
        raise ValueError("rod_energy applies to rod designs; use total_energy for chains")
    U_bend = 0.0
    if design.rod_EI > 0.0 and shape.segment_count >= 2:
        U_bend, _ = mechanics.bend_energy_and_grads(shape.tangents, design.rod_EI, shape.pitch)
    U_applied = 0.0
    if field is not None:
        pos, mom = rod_moments(shape, design)
        if isinstance(field, UniformField):
            U_applied, _ = magnetics.uniform_field_energy_and_grads(mom, field.B)
        elif isinstance(field, ExternalMagnet):
            U_applied, _, _ = magnetics.external_field_energy_and_grads(pos, mom, field)
        else:
            raise TypeError(f"unsupported field source {type(field).__name__}")
    return EnergyBreakdown(applied=U_applied, bending=U_bend)


def rod_moments(shape: RodShape, design: DesignSpec):
    """Moment carriers of a rod design: (positions, moment vectors)."""
    pts = shape.points()
    if design.kind is DesignKind.TIP_MAGNET:
        if not design.tip_moment:
            raise ValueError("tip magnet design lacks tip_moment")
        center = pts[-1] + 0.5 * (design.tip_length or 0.0) * shape.tangents[-1]
        return center[None, :], design.tip_moment * shape.tangents[-1][None, :]
    if design.kind is DesignKind.DISTRIBUTED:
        if not design.moment_per_length:
            raise ValueError("distributed design lacks moment_per_length")
        centers = 0.5 * (pts[:-1] + pts[1:])
        return centers, (design.moment_per_length * shape.pitch) * shape.tangents
    raise ValueError(f"no moments for design kind {design.kind}")
