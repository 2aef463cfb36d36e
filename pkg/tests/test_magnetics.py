"""Field and pair-energy kernels against closed forms and vector-field identities."""
import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.spatial.transform import Rotation

from magchain import magnetics as mg
from magchain.errors import SingularityError

C = mg.MU0 / (4.0 * np.pi)  # 1e-7 in SI (up to float cancellation)

# ball moments recomputed from remanence and diameter, pinned so a silent
# constants change shows up here first
M_SMALL = 4.495500e-4    # 0.9 mm N52 sphere
M_EXP = 1.760329e-2      # 3.175 mm N42 sphere


def test_mu0_is_exact():
    assert mg.MU0 == 4.0e-7 * np.pi
    assert C == pytest.approx(1e-7, rel=1e-15)


def test_on_axis_field_closed_form():
    # axial field of a dipole: B = 2 C m / r^3 along the moment
    m = np.array([M_SMALL, 0.0, 0.0])
    B = mg.dipole_field(np.array([0.01, 0.0, 0.0]), m)
    assert_allclose(B, [2 * C * M_SMALL / 0.01**3, 0.0, 0.0], rtol=1e-13)
    assert_allclose(B[0], 8.991000e-5, rtol=1e-6)


def test_equatorial_field_and_axial_ratio():
    m = np.array([0.0, 0.0, M_SMALL])
    r = np.array([0.007, 0.0, 0.0])
    B_eq = mg.dipole_field(r, m)
    # equatorial: B = -C m / r^3, antiparallel to the moment
    assert_allclose(B_eq, [0.0, 0.0, -C * M_SMALL / 0.007**3], rtol=1e-13)
    B_ax = mg.dipole_field(np.array([0.0, 0.0, 0.007]), m)
    assert abs(np.linalg.norm(B_ax) / np.linalg.norm(B_eq) - 2.0) < 1e-12


def test_field_is_divergence_free():
    rng = np.random.default_rng(42)
    m = rng.normal(size=3) * 1e-3
    h = 1e-6
    for _ in range(100):
        r = rng.normal(size=3) * 0.02
        if np.linalg.norm(r) < 5e-3:
            continue
        div = 0.0
        for k in range(3):
            e = np.zeros(3)
            e[k] = h
            div += (mg.dipole_field(r + e, m)[k] - mg.dipole_field(r - e, m)[k]) / (2 * h)
        scale = np.linalg.norm(mg.dipole_field(r, m)) / np.linalg.norm(r)
        assert abs(div) < 1e-6 * scale


def test_rotation_equivariance():
    rng = np.random.default_rng(3)
    r = np.array([0.004, -0.002, 0.007])
    m = np.array([2e-4, -1e-4, 3e-4])
    for rot in Rotation.random(10, rng=rng):
        R = rot.as_matrix()
        assert_allclose(R @ mg.dipole_field(r, m), mg.dipole_field(R @ r, R @ m), rtol=1e-12)


def test_inverse_cube_scaling():
    r = np.array([0.003, 0.001, -0.002])
    m = np.array([1e-4, 3e-4, -2e-4])
    for s in (2.0, 5.0, 17.3):
        assert_allclose(mg.dipole_field(s * r, m), mg.dipole_field(r, m) / s**3, rtol=1e-12)


def test_zero_moment_zero_field():
    assert_allclose(mg.dipole_field(np.array([0.01, 0.0, 0.0]), np.zeros(3)), 0.0)


def test_dipole_energy_is_minus_m_dot_B():
    m = np.array([1e-3, 2e-3, -5e-4])
    B = np.array([0.02, -0.01, 0.04])
    assert mg.dipole_energy(m, B) == pytest.approx(-(m @ B), rel=1e-15)


# -- pair energies ------------------------------------------------------------

def coaxial_pair(m_mag, d):
    return [mg.Dipole(position=np.array([0.0, 0.0, 0.0]), moment=np.array([m_mag, 0.0, 0.0])),
            mg.Dipole(position=np.array([d, 0.0, 0.0]), moment=np.array([m_mag, 0.0, 0.0]))]


def test_coaxial_touching_pair_energy():
    # head-to-tail pair at contact: U = -2 C m^2 / d^3 (most bound arrangement)
    d = 3.175e-3
    U = mg.chain_pair_energy(coaxial_pair(M_EXP, d))
    assert_allclose(U, -2 * C * M_EXP**2 / d**3, rtol=1e-13)
    assert_allclose(U, -1.936362e-3, rtol=1e-6)
    U_small = mg.chain_pair_energy(coaxial_pair(M_SMALL, 0.9e-3))
    assert_allclose(U_small, -5.544450e-5, rtol=1e-6)


def test_side_by_side_pair_energies():
    d = 2e-3
    m = np.array([0.0, 0.0, 1e-3])
    a = mg.Dipole(position=np.zeros(3), moment=m)
    b_par = mg.Dipole(position=np.array([d, 0.0, 0.0]), moment=m)
    b_anti = mg.Dipole(position=np.array([d, 0.0, 0.0]), moment=-m)
    U_par = mg.chain_pair_energy([a, b_par])
    U_anti = mg.chain_pair_energy([a, b_anti])
    assert_allclose(U_par, C * 1e-6 / d**3, rtol=1e-13)   # parallel broadside repels
    assert_allclose(U_anti, -U_par, rtol=1e-13)


def test_collinear_three_ball_superposition():
    # nearest-neighbor terms plus the 1/8-weighted second-neighbor term
    d = 0.9e-3
    chain = [mg.Dipole(position=np.array([k * d, 0.0, 0.0]),
                       moment=np.array([M_SMALL, 0.0, 0.0])) for k in range(3)]
    U_nn = -2 * C * M_SMALL**2 / d**3
    assert_allclose(mg.chain_pair_energy(chain), U_nn * (2 + 1.0 / 8.0), rtol=1e-13)


def test_pair_gradients_match_finite_differences():
    rng = np.random.default_rng(11)
    h = 1e-9
    for _ in range(20):
        dr = rng.normal(size=(1, 3)) * 3e-3
        mi = rng.normal(size=(1, 3)) * 1e-3
        mj = rng.normal(size=(1, 3)) * 1e-3
        U, dU_ddr, dU_dmi, dU_dmj = mg.pair_energy_terms(dr, mi, mj)
        U = float(np.asarray(U).ravel()[0])
        for grad in (dU_ddr, dU_dmi, dU_dmj):
            for k in range(3):
                e = np.zeros((1, 3))
                e[0, k] = h
                if grad is dU_ddr:
                    Up = mg.pair_energy_terms(dr + e, mi, mj)[0]
                    Um = mg.pair_energy_terms(dr - e, mi, mj)[0]
                elif grad is dU_dmi:
                    Up = mg.pair_energy_terms(dr, mi + e, mj)[0]
                    Um = mg.pair_energy_terms(dr, mi - e, mj)[0]
                else:
                    Up = mg.pair_energy_terms(dr, mi, mj + e)[0]
                    Um = mg.pair_energy_terms(dr, mi, mj - e)[0]
                fd = (Up - Um) / (2 * h)
                assert_allclose(grad[0, k], fd, rtol=2e-5, atol=1e-12 * abs(U))


def test_chain_gradients_match_pairwise_loop():
    rng = np.random.default_rng(5)
    n = 6
    pos = np.cumsum(rng.normal(size=(n, 3)) * 2e-3, axis=0)
    mom = rng.normal(size=(n, 3)) * 1e-3
    U, dpos, dmom = mg.chain_pair_energy_and_grads(pos, mom)
    U_loop = 0.0
    dpos_loop = np.zeros_like(pos)
    dmom_loop = np.zeros_like(mom)
    for i in range(n):
        for j in range(i + 1, n):
            u, ddr, dmi, dmj = mg.pair_energy_terms(
                (pos[j] - pos[i])[None], mom[i][None], mom[j][None])
            U_loop += u[0] if np.ndim(u) else u
            dpos_loop[j] += ddr[0]
            dpos_loop[i] -= ddr[0]
            dmom_loop[i] += dmi[0]
            dmom_loop[j] += dmj[0]
    assert_allclose(U, U_loop, rtol=1e-13)
    assert_allclose(dpos, dpos_loop, rtol=1e-12, atol=1e-20)
    assert_allclose(dmom, dmom_loop, rtol=1e-12, atol=1e-20)


def test_near_coincident_balls_raise():
    pos = np.array([[0.0, 0.0, 0.0], [1e-8, 0.0, 0.0]])
    mom = np.array([[1e-3, 0.0, 0.0], [1e-3, 0.0, 0.0]])
    with pytest.raises(SingularityError, match="0.*1"):
        mg.chain_pair_energy_and_grads(pos, mom)


def test_uniform_field_magnitude_guard():
    mg.UniformField((0.5, 0.0, 0.0))
    with pytest.raises(ValueError):
        mg.UniformField((1.5, 0.0, 0.0))


def test_field_at_dispatch():
    u = mg.UniformField((0.01, 0.0, 0.03))
    assert_allclose(mg.field_at(u, np.array([1.0, 2.0, 3.0])), [0.01, 0.0, 0.03])
    mag = mg.ExternalMagnet(position=np.array([0.1, 0.0, 0.0]),
                            moment=np.array([200.0, 0.0, 0.0]))
    p = np.array([0.0, 0.0, 0.0])
    expect = mg.dipole_field(p - mag.position, mag.moment)
    assert_allclose(mg.field_at(mag, p), expect, rtol=1e-14)


def test_external_magnet_near_field_warns():
    mag = mg.ExternalMagnet(position=np.zeros(3), moment=np.array([204.6, 0.0, 0.0]),
                            diameter=0.0762)
    pos = np.array([[0.05, 0.0, 0.0]])  # inside one magnet diameter
    mom = np.array([[1e-3, 0.0, 0.0]])
    with pytest.warns(mg.DipoleApproximationWarning):
        mg.external_field_energy_and_grads(pos, mom, mag)
    far = np.array([[0.2, 0.0, 0.0]])
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        mg.external_field_energy_and_grads(far, mom, mag)


def test_external_magnet_energy_matches_field_dot_moment():
    mag = mg.ExternalMagnet(position=np.array([0.15, 0.0, 0.05]),
                            moment=np.array([0.0, 0.0, 204.6]))
    chain = coaxial_pair(M_EXP, 3.175e-3)
    U = mg.external_magnet_energy(chain, mag)
    expect = sum(-(b.moment @ mg.field_at(mag, b.position)) for b in chain)
    assert_allclose(U, expect, rtol=1e-13)
