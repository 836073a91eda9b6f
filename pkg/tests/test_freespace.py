import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from torusflow import freespace as fs
from torusflow import greens


def shell_points(rng, n, lo, hi):
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return d * rng.uniform(lo, hi, size=(n, 1))


@settings(max_examples=30, deadline=None)
@given(x=st.tuples(*[st.floats(-5, 5)] * 3).filter(lambda v: np.linalg.norm(v) > 0.1), s=st.floats(0.2, 5))
def test_stokeslet_symmetry_and_homogeneity(x, s):
    x = np.array(x)
    U = fs.stokeslet(x)
    np.testing.assert_allclose(U, U.T, atol=1e-15)
    np.testing.assert_allclose(fs.stokeslet(s * x), U / s, rtol=0, atol=1e-13 * np.abs(U).max())
    q = fs.pressure_kernel(x)
    np.testing.assert_allclose(fs.pressure_kernel(s * x), q / s**2, rtol=0, atol=1e-13 * np.abs(q).max())


def test_singular_point_rejected():
    with pytest.raises(fs.KernelDomainError):
        fs.stokeslet(np.zeros(3))
    with pytest.raises(fs.KernelDomainError):
        fs.pressure_kernel(np.array([[1.0, 0, 0], [0, 0, 0]]))


@pytest.mark.parametrize("order", [2, 4])
def test_stokeslet_residual_converges_at_stencil_order(rng, order):
    x = shell_points(rng, 20, 1, 5)
    r1 = fs.stokeslet_residual(x, 0.05, fd_order=order).max(axis=0)
    r2 = fs.stokeslet_residual(x, 0.025, fd_order=order).max(axis=0)
    np.testing.assert_allclose(np.log2(r1 / r2), order, atol=0.05)


def test_stokeslet_residual_validation():
    with pytest.raises(fs.KernelDomainError):
        fs.stokeslet_residual([[0.1, 0, 0]], 0.05)
    with pytest.raises(ValueError):
        fs.stokeslet_residual([[1.0, 0, 0]], 0.05, fd_order=3)


def test_gradient_kernels_match_differences(rng):
    x = shell_points(rng, 5, 1, 3)
    h = 1e-5
    for m in range(3):
        e = h * np.eye(3)[m]
        fd = (greens.stokeslet(x + e) - greens.stokeslet(x - e)) / (2 * h)
        np.testing.assert_allclose(greens.stokeslet_gradient(x)[..., m], fd, atol=1e-8)
        fq = (greens.pressure_kernel(x + e) - greens.pressure_kernel(x - e)) / (2 * h)
        np.testing.assert_allclose(greens.pressure_kernel_gradient(x)[..., m], fq, atol=1e-8)


def test_point_force_far_field():
    h = 0.1
    f = fs.point_force([1.0, 0, 0], h)
    t = np.array([[10 * h, 0, 0], [0, 0, 10 * h], [6 * h, 8 * h, 0]])
    sol = fs.steady_convolve(f, targets=t)
    np.testing.assert_allclose(sol.u, fs.stokeslet(t)[:, :, 0], rtol=1e-12)


def test_bump_far_field_within_one_percent():
    R = 1.0
    f = fs.bump_force([0, 1.0, 0], R, R / 8)
    assert f.values.sum() * f.h**3 == pytest.approx(1.0)
    t = 10 * R * fs._shell_directions(12)
    sol = fs.steady_convolve(f, targets=t)
    U = fs.stokeslet(t)[:, :, 1]
    assert (np.linalg.norm(sol.u - U, axis=1) / np.linalg.norm(U, axis=1)).max() < 0.01


def test_steady_backends_agree():
    f = fs.bump_force([1.0, 0.5, 0], 0.5, 0.125)
    t = np.array([[2.0, 0.1, 0.3], [0.0, 0.0, 0.0]])
    a = fs.steady_convolve(f, targets=t, backend="python")
    from torusflow import accel
    if accel.BACKEND != "native":
        pytest.skip("compiled kernels unavailable")
    b = fs.steady_convolve(f, targets=t, backend="native")
    for x, y in zip((a.u, a.grad_u, a.p), (b.u, b.grad_u, b.p)):
        np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-14)


def test_lattice_validation():
    with pytest.raises(ValueError):
        fs.LatticeField(0.5, 1.0, np.zeros((4, 4, 4)))
    with pytest.raises(ValueError):
        fs.LatticeField(0.5, 1.0, np.zeros((5, 5, 5)), support_radius=2.0)
    with pytest.raises(ValueError):
        fs.steady_convolve(fs.LatticeField(0.5, 1.0, np.zeros((5, 5, 5, 3))))


@pytest.mark.parametrize("r,k", [(1.0, 1), (2.5, 3), (7.0, 2)])
def test_radial_quadrature_matches_closed_form(r, k):
    x = r * fs._DIRECTION
    rad = fs.gamma_perp_eval(x, 3, method="radial", gradient=True, delta=0.5)
    cl = fs.gamma_perp_eval(x, 3, method="closed", gradient=True, delta=0.5)
    np.testing.assert_allclose(rad.values[0].coeffs, cl.values[0].coeffs, atol=1e-12 * np.abs(cl.values[0].coeffs).max())
    np.testing.assert_allclose(rad.gradients[0].coeffs, cl.gradients[0].coeffs,
                               atol=1e-11 * np.abs(cl.gradients[0].coeffs).max())


def test_closed_form_matches_lattice_fourier_sum():
    x = np.array([1.2, -0.8, 1.0])
    for k in (1, 2):
        G, _, tail = fs.fft_kernel(x, k)
        ref = greens.oscillatory_kernel(x, k, 1.0)
        assert np.abs(G - ref).max() / np.abs(ref).max() < 0.02
        assert tail > 0


def test_mode_kernel_divergence_free(rng):
    x = shell_points(rng, 4, 1.5, 3)
    h = 1e-4
    div = sum((greens.oscillatory_kernel(x + h * np.eye(3)[m], 2, 1.0)[:, m, :]
               - greens.oscillatory_kernel(x - h * np.eye(3)[m], 2, 1.0)[:, m, :]) / (2 * h) for m in range(3))
    assert np.abs(div).max() < 1e-7


def test_gamma_perp_structure():
    res = fs.gamma_perp_eval([[2.0, 0, 0], [0, 3.0, 0]], 4, method="closed")
    for f in res.values:
        assert np.all(f.coeff(0) == 0)
        assert f.real_valued and f.dim == 9
    assert res.as_dict()["tail_warnings"] == 0
    with pytest.raises(fs.KernelDomainError):
        fs.gamma_perp_eval([[0.5, 0, 0]], 2)
    with pytest.raises(ValueError):
        fs.gamma_perp_eval([[2.0, 0, 0]], 2, method="bogus")


def test_fft_tail_warning():
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        res = fs.gamma_perp_eval([[1.0, 0, 0]], 1, method="fft", fft_box=4.0, fft_n=8)
    assert any(res.tail_flags)
    assert any(issubclass(w.category, RuntimeWarning) for w in rec)


def lattice_with_modes(h, K, comps, entries):
    n = fs.LatticeField.n_side(h, h)
    v = np.zeros((n, n, n, 2 * K + 1) + comps, complex)
    for k, val in entries.items():
        v[n // 2, n // 2, n // 2, K + k] = val
        v[n // 2, n // 2, n // 2, K - k] = np.conj(val)
    return fs.LatticeField(h, h, v, support_radius=0.5 * h, K_time=K)


def test_tp_convolve_point_sources():
    h, K = 0.2, 2
    hk = np.array([1.0, 0.5j, 0.0])
    gk = np.arange(9).reshape(3, 3) * (1 + 1j) / 9
    src_h = lattice_with_modes(h, K, (3,), {2: hk / h**3})
    src_g = lattice_with_modes(h, K, (3, 3), {1: gk / h**3})
    x = np.array([[1.5, 0.3, -0.4]])
    out = fs.tp_convolve(src_h, src_g, x)
    np.testing.assert_allclose(out.coeffs[0, K + 2], greens.oscillatory_kernel(x[0], 2, 1.0) @ hk, rtol=1e-12)
    _, dG = greens.oscillatory_kernel(x[0], 1, 1.0, gradient=True)
    np.testing.assert_allclose(out.coeffs[0, K + 1], np.einsum("ijm,jm->i", dG, gk), rtol=1e-12)
    assert np.all(out.coeffs[0, K] == 0)
    assert out.at(0).real_valued


def test_tp_convolve_backends_agree(rng):
    from torusflow import accel
    if accel.BACKEND != "native":
        pytest.skip("compiled kernels unavailable")
    K = 2
    f = fs.LatticeField.from_function(
        lambda p: np.exp(-np.sum(p**2, -1))[..., None, None] * np.ones((2 * K + 1, 3)), 0.25, 0.75, 0.75, K)
    t = shell_points(rng, 6, 2, 4)
    a = fs.tp_convolve(f, None, t, backend="python")
    b = fs.tp_convolve(f, None, t, backend="native")
    np.testing.assert_allclose(a.coeffs, b.coeffs, rtol=1e-11, atol=1e-15)
    with pytest.raises(fs.KernelDomainError):
        fs.tp_convolve(f, None, [[0.0, 0.0, 0.0]])


def test_weighted_norm_variants():
    res = fs.gamma_perp_eval([[2.0, 0, 0], [4.0, 0, 0]], 2, method="closed")
    a = fs.weighted_norm(res, 3.0)
    b = fs.weighted_norm({(2.0, 0.0, 0.0): res.values[0], (4.0, 0.0, 0.0): res.values[1]}, 3.0)
    assert a == pytest.approx(b)
    lat = fs.LatticeField.from_function(lambda p: np.ones(p.shape[:-1]), 1.0, 1.0)
    assert fs.weighted_norm(lat, 1.0) == pytest.approx(1 + np.sqrt(3))
    with pytest.raises(TypeError):
        fs.weighted_norm([1, 2], 1.0)


@settings(max_examples=20, deadline=None)
@given(a=st.floats(-5, -0.5), c=st.floats(0.1, 10))
def test_decay_fit_recovers_power_law(a, c):
    r = np.geomspace(2, 16, 8)
    fit = fs.decay_fit(r, c * r**a)
    assert fit.fitted_exponent == pytest.approx(a, abs=1e-10)


def test_decay_fit_validation():
    r = np.geomspace(1, 10, 6)
    with pytest.raises(ValueError):
        fs.decay_fit(r[:4], r[:4])
    with pytest.raises(ValueError):
        fs.decay_fit(r, -r)
    with pytest.raises(ValueError):
        fs.decay_fit(r[::-1], r)


def test_kernel_decay_closed_form():
    fit = fs.kernel_decay(np.geomspace(2, 16, 8), K_time=4, method="closed")
    assert -3.3 <= fit.fitted_exponent <= -2.7
