"""Point-dipole fields and the magnetic potential energies of a ball chain.

Every permanent element (ball, tip magnet, external actuator magnet) is
reduced to a point dipole at its center.  Energies follow the usual
convention U = -m . B, so aligned moments sit at negative energy.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import SingularityError

MU0 = 4.0e-7 * np.pi  # vacuum permeability [T m / A], exact by definition

# Below this separation the point-dipole model is numerically explosive and
# physically meaningless for any geometry this package simulates.
R_MIN = 1e-6  # m


class DipoleApproximationWarning(UserWarning):
    """Raised when a source magnet is evaluated inside its own diameter."""


def _vec3(x, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} must be finite, got {v}")
    return v


@dataclass(frozen=True)
class Dipole:
    """Point dipole: position [m] and moment vector [A m^2]."""

    position: np.ndarray
    moment: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", _vec3(self.position, "position"))
        object.__setattr__(self, "moment", _vec3(self.moment, "moment"))


@dataclass(frozen=True)
class UniformField:
    """Spatially constant field vector [T]."""

    B: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "B", _vec3(self.B, "B"))
        if np.linalg.norm(self.B) > 1.0:
            raise ValueError("uniform field above 1 T is outside the supported range")


@dataclass(frozen=True)
class ExternalMagnet:
    """External actuator magnet as a point dipole plus its physical diameter.

    The diameter only feeds a validity diagnostic: the dipole approximation
    degrades within roughly one diameter of the magnet center.
    """

    position: np.ndarray
    moment: np.ndarray
    diameter: float = 0.0762

    def __post_init__(self):
        object.__setattr__(self, "position", _vec3(self.position, "position"))
        object.__setattr__(self, "moment", _vec3(self.moment, "moment"))
        if self.diameter < 0:
            raise ValueError("diameter must be nonnegative")

    @property
    def dipole(self) -> Dipole:
        return Dipole(self.position, self.moment)


FieldSource = UniformField | ExternalMagnet


def dipole_field(r, m, r_min: float = R_MIN) -> np.ndarray:
    """Field B [T] of a point dipole with moment m [A m^2] at offset r [m].

    B(r, m) = mu0 / (4 pi |r|^3) * (3 (m . rhat) rhat - m)

    Raises SingularityError for |r| < r_min; a zero moment gives a zero field.
    """
    r = _vec3(r, "r")
    m = _vec3(m, "m")
    rho = float(np.linalg.norm(r))
    if rho < r_min:
        raise SingularityError(f"field evaluated at |r|={rho:.3e} m < r_min={r_min:.1e} m")
    rhat = r / rho
    return (MU0 / (4.0 * np.pi * rho**3)) * (3.0 * float(m @ rhat) * rhat - m)


def dipole_energy(m, B) -> float:
    """Potential energy U = -m . B of a moment m [A m^2] in a field B [T]."""
    m = _vec3(m, "m")
    B = _vec3(B, "B")
    return -float(m @ B)


def pair_energy_terms(dr: np.ndarray, mi: np.ndarray, mj: np.ndarray):
    """Dipole-dipole energies and gradients for stacked pairs.

    dr is p_j - p_i for each pair, shape (P, 3); mi, mj are full moment
    vectors [A m^2].  Returns (U, dU_ddr, dU_dmi, dU_dmj) where U has shape
    (P,) and the gradients are (P, 3).  All pairs are assumed nonsingular;
    callers check separations first.

    With a = mi . rhat, b = mj . rhat, c = mi . mj:
        U      = mu0/(4 pi rho^3) * (c - 3 a b)
        dU/ddr = -3 mu0/(4 pi rho^4) * (b mi + a mj + (c - 5 a b) rhat)
    which reproduces the standard dipole-dipole interaction force.
    """
    rho = np.linalg.norm(dr, axis=1)
    rhat = dr / rho[:, None]
    a = np.einsum("ij,ij->i", mi, rhat)
    b = np.einsum("ij,ij->i", mj, rhat)
    c = np.einsum("ij,ij->i", mi, mj)
    k = MU0 / (4.0 * np.pi * rho**3)
    U = k * (c - 3.0 * a * b)
    k4 = 3.0 * k / rho
    dU_ddr = -k4[:, None] * (b[:, None] * mi + a[:, None] * mj + (c - 5.0 * a * b)[:, None] * rhat)
    dU_dmi = k[:, None] * (mj - 3.0 * b[:, None] * rhat)
    dU_dmj = k[:, None] * (mi - 3.0 * a[:, None] * rhat)
    return U, dU_ddr, dU_dmi, dU_dmj


def chain_pair_energy(dipoles) -> float:
    """Total pairwise interaction energy of a set of dipoles.

    Sums -m_j . B(p_j - p_i, m_i) over unordered pairs i < j, each pair
    counted once.  Raises SingularityError naming the offending pair if two
    dipoles sit closer than R_MIN.
    """
    pos = np.array([d.position for d in dipoles], dtype=float).reshape(-1, 3)
    mom = np.array([d.moment for d in dipoles], dtype=float).reshape(-1, 3)
    U, _, _ = chain_pair_energy_and_grads(pos, mom)
    return U


def chain_pair_energy_and_grads(pos: np.ndarray, mom: np.ndarray, pairs=None):
    """Pairwise energy plus gradients w.r.t. positions and moments.

    pos, mom: (n, 3).  Returns (U, dU_dpos, dU_dmom).  The position gradient
    of pair (i, j) lands with opposite signs on i and j; the moment gradient
    is w.r.t. the full moment vector (callers with fixed magnitudes scale by
    |m| to get the gradient w.r.t. the unit direction).
    """
    n = pos.shape[0]
    if n < 2:
        return 0.0, np.zeros_like(pos), np.zeros_like(mom)
    if pairs is None:
        pairs = np.triu_indices(n, k=1)
    iu, ju = pairs
    dr = pos[ju] - pos[iu]
    rho2 = np.einsum("ij,ij->i", dr, dr)
    bad = np.nonzero(rho2 < R_MIN**2)[0]
    if bad.size:
        k = int(bad[0])
        raise SingularityError(
            f"dipoles {int(iu[k])} and {int(ju[k])} nearly coincide "
            f"(separation {np.sqrt(rho2[k]):.3e} m)"
        )
    U, dU_ddr, dU_dmi, dU_dmj = pair_energy_terms(dr, mom[iu], mom[ju])
    dU_dpos = np.zeros_like(pos)
    dU_dmom = np.zeros_like(mom)
    np.add.at(dU_dpos, ju, dU_ddr)
    np.subtract.at(dU_dpos, iu, dU_ddr)
    np.add.at(dU_dmom, iu, dU_dmi)
    np.add.at(dU_dmom, ju, dU_dmj)
    return float(np.sum(U)), dU_dpos, dU_dmom


def external_magnet_energy(chain, magnet) -> float:
    """Energy of chain dipoles in the field of an external magnet.

    chain: sequence of Dipole; magnet: ExternalMagnet or Dipole.  Warns (does
    not fail) when any chain element sits within one magnet diameter of the
    magnet center, where the point-dipole model of a real cylinder is rough.
    """
    if len(chain) == 0:
        return 0.0
    pos = np.array([d.position for d in chain], dtype=float).reshape(-1, 3)
    mom = np.array([d.moment for d in chain], dtype=float).reshape(-1, 3)
    U, _, _ = external_field_energy_and_grads(pos, mom, magnet)
    return U


def external_field_energy_and_grads(pos: np.ndarray, mom: np.ndarray, magnet):
    """Like chain_pair_energy_and_grads but against one fixed source dipole."""
    if isinstance(magnet, ExternalMagnet):
        src_pos, src_mom, dia = magnet.position, magnet.moment, magnet.diameter
    else:
        src_pos, src_mom, dia = magnet.position, magnet.moment, 0.0
    dr = pos - src_pos[None, :]
    rho = np.linalg.norm(dr, axis=1)
    if np.any(rho < R_MIN):
        raise SingularityError("chain element coincides with the external magnet center")
    if dia > 0 and np.any(rho < dia):
        warnings.warn(
            f"chain within {dia * 1e3:.1f} mm of the external magnet center; "
            "point-dipole source approximation is degraded",
            DipoleApproximationWarning,
            stacklevel=2,
        )
    src = np.broadcast_to(src_mom, pos.shape)
    U, dU_ddr, _, dU_dmom = pair_energy_terms(dr, src, mom)
    return float(np.sum(U)), dU_ddr, dU_dmom


def uniform_field_energy_and_grads(mom: np.ndarray, B: np.ndarray):
    """U = -sum m_i . B for a constant field; gradient w.r.t. each moment is -B."""
    U = -float(np.sum(mom @ B))
    dU_dmom = np.broadcast_to(-B, mom.shape).copy()
    return U, dU_dmom


def field_at(field: FieldSource, p: np.ndarray) -> np.ndarray:
    """Evaluate a field source at a point (diagnostics and plotting)."""
    if isinstance(field, UniformField):
        return field.B.copy()
    return dipole_field(np.asarray(p, dtype=float) - field.position, field.moment)


def magnetic_gradients(pos: np.ndarray, mom: np.ndarray, field: FieldSource | None):
    """Combined pair + applied-field energy gradients for a chain.

    Returns (U, dU_dpos, dU_dmom) with the pair term always included and the
    applied-field term when a source is given.
    """
    U, dU_dpos, dU_dmom = chain_pair_energy_and_grads(pos, mom)
    if isinstance(field, UniformField):
        Ue, gm = uniform_field_energy_and_grads(mom, field.B)
        U += Ue
        dU_dmom += gm
    elif isinstance(field, ExternalMagnet):
        Ue, gp, gm = external_field_energy_and_grads(pos, mom, field)
        U += Ue
        dU_dpos += gp
        dU_dmom += gm
    elif field is not None:
        raise TypeError(f"unsupported field source {type(field).__name__}")
    return U, dU_dpos, dU_dmom
