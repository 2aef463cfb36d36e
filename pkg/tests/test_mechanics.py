"""Bending and gravity terms against closed forms."""
import numpy as np
import pytest
from numpy.testing import assert_allclose

from magchain import mechanics as me
from magchain.errors import DegenerateGeometryError

D = 0.9e-3
EI_SKIN = 7.208252e-10  # 42.7 kPa sleeve, 1.0/0.9 mm annulus


def test_annulus_and_solid_second_moments():
    assert_allclose(me.annulus_second_moment(1e-3, 0.9e-3), 1.688115e-14, rtol=1e-6)
    assert_allclose(me.solid_circle_second_moment(1e-3), 4.908739e-14, rtol=1e-6)
    # annulus degenerates to solid when the bore closes
    assert_allclose(me.annulus_second_moment(1e-3, 0.0),
                    me.solid_circle_second_moment(1e-3), rtol=1e-15)


def test_collinear_points_have_zero_bend():
    p = [np.array([0.0, 0.0, 0.0]), np.array([1.0, 0.0, 0.0]), np.array([2.5, 0.0, 0.0])]
    assert me.bend_angle(*p) == pytest.approx(0.0, abs=1e-12)
    assert me.segment_bend_energy(0.0, D, 42.7e3, 1.688115e-14) == 0.0


def test_right_angle_bend():
    p = [np.array([0.0, 0.0, 0.0]), np.array([1.0, 0.0, 0.0]), np.array([1.0, 1.0, 0.0])]
    th = me.bend_angle(*p)
    assert th == pytest.approx(np.pi / 2, rel=1e-12)
    # circumscribed arc through a right-angle joint has radius d/2
    assert me.curvature_radius(th, D) == pytest.approx(D / 2, rel=1e-12)
    U = me.segment_bend_energy(th, D, 42.7e3, 1.688115e-14)
    assert_allclose(U, (EI_SKIN / D) * (np.pi / 2) * np.tan(np.pi / 4), rtol=1e-6)
    assert_allclose(U, 1.258077e-6, rtol=1e-5)


def test_curvature_radius_chord_identity():
    # the arc through a joint bends by theta over a chord of length d
    for th in (0.1, 0.7, 1.9, 2.8):
        rho = me.curvature_radius(th, D)
        assert 2 * rho * np.tan(th / 2) == pytest.approx(D, rel=1e-12)
    assert me.curvature_radius(0.0, D) == np.inf
    with pytest.raises(DegenerateGeometryError):
        me.curvature_radius(np.pi, D)
    with pytest.raises(DegenerateGeometryError):
        me.curvature_radius(-0.1, D)


def test_small_angle_energy_is_quadratic():
    # U = (EI/d) theta tan(theta/2) -> (EI/2d) theta^2 as theta -> 0
    k = EI_SKIN / (2 * D)
    for th in (1e-3, 1e-5, 1e-7):
        U = me.segment_bend_energy(th, D, 42.7e3, 1.688115e-14)
        assert U == pytest.approx(k * th**2, rel=1e-5)


def test_total_skin_energy_sums_joints():
    pts = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [2, 1, 0], [3, 1, 0.0]]) * D
    U = me.total_skin_energy(pts, D, 42.7e3, 1.688115e-14)
    per_joint = me.segment_bend_energy(np.pi / 2, D, 42.7e3, 1.688115e-14)
    assert_allclose(U, 2 * per_joint, rtol=1e-12)  # two right angles, one straight joint


def test_short_chain_skin_warns_and_returns_zero():
    with pytest.warns(UserWarning):
        U = me.total_skin_energy(np.zeros((2, 3)), D, 42.7e3, 1e-14)
    assert U == 0.0


def test_degenerate_geometry_raises():
    p0, p1 = np.zeros(3), np.array([1.0, 0.0, 0.0])
    with pytest.raises(DegenerateGeometryError):
        me.bend_angle(p0, p1, p1)  # zero-length segment
    # fold-back measures as pi but has no finite bending energy
    assert me.bend_angle(p0, p1, p0) == pytest.approx(np.pi)
    with pytest.raises(DegenerateGeometryError):
        me.segment_bend_energy(np.pi, D, 42.7e3, 1e-14)


def test_gravity_energy_is_mgh():
    balls = [me.MassPoint(mass=0.13e-3, position=np.array([0.0, 0.0, 0.01]))]
    assert_allclose(me.gravity_energy(balls), 1.275300e-5, rtol=1e-6)
    # raising the whole chain shifts energy by sum(m) g dz
    chain = [me.MassPoint(mass=1e-4, position=np.array([x, 0.0, 0.0])) for x in (0, 1, 2.0)]
    lifted = [me.MassPoint(mass=b.mass, position=b.position + [0, 0, 0.5]) for b in chain]
    dU = me.gravity_energy(lifted) - me.gravity_energy(chain)
    assert_allclose(dU, 3e-4 * 9.81 * 0.5, rtol=1e-12)


def test_gravity_custom_up_direction():
    balls = [me.MassPoint(mass=2e-4, position=np.array([0.03, 0.0, 0.0]))]
    assert_allclose(me.gravity_energy(balls, up=(1.0, 0.0, 0.0)), 2e-4 * 9.81 * 0.03, rtol=1e-12)


def test_joint_angle_array_kernel_matches_pointwise():
    rng = np.random.default_rng(2)
    t = rng.normal(size=(8, 3))
    t /= np.linalg.norm(t, axis=1, keepdims=True)
    th = me.joint_angles(t)
    pts = np.vstack([np.zeros(3), np.cumsum(t, axis=0)])
    for k in range(6):
        assert th[k] == pytest.approx(me.bend_angle(pts[k], pts[k + 1], pts[k + 2]), rel=1e-12)


def test_bend_gradient_matches_finite_differences():
    rng = np.random.default_rng(9)
    t = rng.normal(size=(6, 3))
    t /= np.linalg.norm(t, axis=1, keepdims=True)
    EI, h = EI_SKIN, D
    U, G = me.bend_energy_and_grads(t, EI, h)
    step = 1e-7
    for i in range(6):
        for k in range(3):
            tp = t.copy()
            tp[i, k] += step
            tp[i] /= np.linalg.norm(tp[i])
            tm = t.copy()
            tm[i, k] -= step
            tm[i] /= np.linalg.norm(tm[i])
            fd = (me.bend_energy_and_grads(tp, EI, h)[0]
                  - me.bend_energy_and_grads(tm, EI, h)[0]) / (2 * step)
            # fd direction includes the normalization pullback; project analytic too
            g_proj = G[i, k] - (G[i] @ t[i]) * t[i, k]
            assert g_proj == pytest.approx(fd, rel=2e-5, abs=1e-12)
