import numpy as np
import pytest

from torusflow import moving as mv
from torusflow.moving import _d1, _d2, _dt_spectral


def u_exact(x, t):
    return np.stack([np.sin(x[..., 1] + t), np.cos(x[..., 2]) * np.cos(t), np.sin(x[..., 0])], -1)


def u_dt(x, t):
    return np.stack([np.cos(x[..., 1] + t), -np.cos(x[..., 2]) * np.sin(t), 0 * x[..., 0]], -1)


def p_exact(x, t):
    return np.sin(x[..., 0] + x[..., 2]) * np.cos(t)


def p_grad(x, t):
    c = np.cos(x[..., 0] + x[..., 2]) * np.cos(t)
    return np.stack([c, 0 * c, c], -1)


def u_conv(x, t):
    # (u . grad) u for u_exact
    u = u_exact(x, t)
    g = np.zeros(x.shape + (3,))
    g[..., 0, 1] = np.cos(x[..., 1] + t)
    g[..., 1, 2] = -np.sin(x[..., 2]) * np.cos(t)
    g[..., 2, 0] = np.cos(x[..., 0])
    return np.einsum("...ij,...j->...i", g, u)


def velocity(y):
    return np.stack([np.sin(y[..., 1]) * np.cos(y[..., 2]), np.sin(y[..., 0] + y[..., 2]), np.cos(y[..., 0])], -1)


def pulled_back(motion, grid, fn):
    X = np.stack([grid.points() + motion(grid.points(), t) for t in grid.times()])
    return X, np.stack([fn(X[i], t) for i, t in enumerate(grid.times())])


@pytest.mark.parametrize("name", mv.BUILTIN_MOTIONS)
def test_builtin_motions_are_time_periodic(name):
    m = mv.builtin_motion(name, 0.2)
    assert m.check_periodic(mv.MotionGrid(6, 4)) < 1e-12


@pytest.mark.parametrize("name", mv.BUILTIN_MOTIONS)
def test_analytic_gradient_matches_differences(name):
    m = mv.builtin_motion(name, 0.2)
    y = mv.MotionGrid(5).points()
    fd = mv.MotionField(m.phi)
    np.testing.assert_allclose(m.gradient(y, 0.7), fd.gradient(y, 0.7), atol=1e-9)
    np.testing.assert_allclose(m.time_derivative(y, 0.7), fd.time_derivative(y, 0.7), atol=1e-9)


def test_invert_map_roundtrip():
    m = mv.builtin_motion("breathing", 0.3)
    y = mv.MotionGrid(7).points()
    x = y + m(y, 1.1)
    np.testing.assert_allclose(mv.invert_map(m, x, 1.1), y, atol=1e-13)


def test_invert_map_rejects_large_motion():
    m = mv.builtin_motion("breathing", 1.5)
    with pytest.raises(mv.SmallnessViolation):
        mv.invert_map(m, np.ones((2, 3)), np.pi / 2)
    with pytest.raises(mv.SmallnessViolation):
        mv.compute_coefficients(m, mv.MotionGrid(6, 4))


@pytest.mark.parametrize("name", mv.BUILTIN_MOTIONS)
@pytest.mark.parametrize("method", ["analytic", "inverse-fd"])
def test_coefficient_identities(name, method):
    tc = mv.compute_coefficients(mv.builtin_motion(name, 0.1), mv.MotionGrid(6, 3), method=method)
    assert tc.chain_rule_error() < 1e-8
    assert tc.inverse_identity_error() < 1e-8
    assert tc.jacobian_error() < 1e-12


def test_coefficient_methods_agree():
    m = mv.builtin_motion("breathing", 0.2)
    g = mv.MotionGrid(6, 3)
    a = mv.compute_coefficients(m, g)
    b = mv.compute_coefficients(m, g, method="inverse-fd")
    np.testing.assert_allclose(a.A, b.A, atol=1e-8)
    np.testing.assert_allclose(a.a0, b.a0, atol=1e-8)
    with pytest.raises(ValueError):
        mv.compute_coefficients(m, g, method="other")


def test_translation_coefficients():
    eps = 0.1
    m = mv.builtin_motion("translation", eps, direction=(0, 0, 2.0))
    g = mv.MotionGrid(4, 4)
    tc = mv.compute_coefficients(m, g)
    assert np.abs(tc.A).max() == 0 and np.abs(tc.J0).max() == 0
    np.testing.assert_allclose(tc.a0[..., 2], -eps * np.cos(g.times())[:, None, None, None] * np.ones((4, 4, 4, 4)))


@pytest.mark.parametrize("name", ["none", "translation", "shear", "wave-shear"])
def test_volume_preserving_motions(name):
    tc = mv.compute_coefficients(mv.builtin_motion(name, 0.2), mv.MotionGrid(5, 3))
    assert np.abs(tc.J - 1).max() < 1e-14


def test_divergence_identity_breathing_orders():
    m = mv.builtin_motion("breathing", 0.1)
    conv4 = mv.divergence_convergence(m, velocity, (8, 16, 32))
    assert min(conv4["orders"]) > 3.5
    conv2 = mv.divergence_convergence(m, velocity, (8, 16, 32), fd_order=2)
    assert all(1.8 < o < 2.1 for o in conv2["orders"])


@pytest.mark.parametrize("name", ["translation", "shear", "wave-shear"])
def test_divergence_identity_exact_for_affine_in_x(name):
    conv = mv.divergence_convergence(mv.builtin_motion(name, 0.1), velocity, (8, 16))
    assert max(r for _, _, r in conv["levels"]) < 1e-10


def test_L_matches_change_of_variables():
    m = mv.builtin_motion("breathing", 0.1)
    errs = []
    for n in (12, 24):
        g = mv.MotionGrid(n, n_time=9)
        tc = mv.compute_coefficients(m, g)
        X, v = pulled_back(m, g, u_exact)
        q = np.stack([p_exact(X[i], t) for i, t in enumerate(g.times())])
        w = np.einsum("...lj,...j->...l", tc.M, v)
        h = g.h
        lapw = sum(_d2(w, 1 + a, 1 + a, h) for a in range(3))
        gq = np.stack([_d1(q, 1 + a, h) for a in range(3)], -1)
        xop = np.stack([u_dt(X[i], t) + u_exact(X[i], t) + p_grad(X[i], t) for i, t in enumerate(g.times())])
        expect = _dt_spectral(w) - lapw + gq - xop
        errs.append(np.abs(mv.assemble_L(tc, w, q) - expect).max())
    assert errs[1] < 0.1
    assert np.log2(errs[0] / errs[1]) > 1.9


def test_N_matches_change_of_variables():
    m = mv.builtin_motion("breathing", 0.1)
    errs = []
    for n in (16, 32):
        g = mv.MotionGrid(n, n_time=3)
        tc = mv.compute_coefficients(m, g)
        X, v = pulled_back(m, g, u_exact)
        _, conv = pulled_back(m, g, u_conv)
        w = np.einsum("...lj,...j->...l", tc.M, v)
        errs.append(np.abs(mv.assemble_N(tc, w) - conv).max())
    assert np.log2(errs[0] / errs[1]) > 1.9


def test_zero_motion_collapses_operators(rng):
    g = mv.MotionGrid(6, 3)
    tc = mv.compute_coefficients(mv.builtin_motion("none"), g)
    w = rng.normal(size=(3, 6, 6, 6, 3))
    q = rng.normal(size=(3, 6, 6, 6))
    assert np.abs(mv.assemble_L(tc, w, q)).max() <= 1e-12
    assert np.abs(mv.assemble_N(tc, w) - mv.convective(w, g.h)).max() <= 1e-12


def test_grid_mismatch(rng):
    tc = mv.compute_coefficients(mv.builtin_motion("none"), mv.MotionGrid(6, 3))
    with pytest.raises(mv.GridMismatch):
        mv.assemble_N(tc, rng.normal(size=(3, 5, 5, 5, 3)))


def test_smallness_reports():
    small = mv.smallness_report(mv.builtin_motion("translation", 0.1), 0.5)
    assert small.satisfied
    assert small.norms["total"] == pytest.approx(0.2, rel=1e-6)
    big = mv.smallness_report(mv.builtin_motion("shear", 0.3), 0.5)
    assert not big.satisfied
    broken = mv.smallness_report(mv.builtin_motion("breathing", 1.5), 0.5)
    assert not broken.satisfied and "inverse_map_failed" in broken.coefficient_bounds
    assert set(small.as_dict()) == {"norms", "coefficient_bounds", "epsilon0", "satisfied"}
