import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from torusflow import stokes as sk


def grids(N, nt):
    x = 2 * np.pi * np.arange(N) / N
    t = 2 * np.pi * np.arange(nt) / nt
    T, X1, X2, X3 = np.meshgrid(t, x, x, x, indexing="ij")
    return T, X1, X2, X3


def field(*comps):
    return np.stack(np.broadcast_arrays(*comps), axis=-1)


def test_masks():
    assert sk.retained_mask(7).all()
    m = sk.retained_mask(8)
    assert m.sum() == 7**3
    d = sk.dealias_mask(16)
    assert d.sum() == 11**3


def test_shear_wave_solution():
    # F = cos(t + x2) e1 is divergence free; u = Re(e^{i(t+x2)} / (i + mu))
    mu = 1.0
    T, X1, X2, X3 = grids(8, 5)
    theta = T + X2
    F = sk.SpectralField.from_samples(field(np.cos(theta), 0 * T, 0 * T), mu)
    V, P = sk.solve_tp_stokes(F)
    exact = field((np.cos(theta) + np.sin(theta)) / 2, 0 * T, 0 * T)
    np.testing.assert_allclose(V.to_samples(), exact, atol=1e-13)
    assert np.abs(P.coeffs).max() < 1e-14
    assert sk.stokes_residual(V, P, F) < 1e-13


def test_gradient_forcing_goes_to_pressure():
    T, X1, X2, X3 = grids(8, 5)
    F = sk.SpectralField.from_samples(field(np.cos(X1) * np.cos(T), 0 * T, 0 * T))
    V, P = sk.solve_tp_stokes(F)
    assert V.l2() < 1e-14
    p = np.fft.ifftn(np.fft.ifft(np.concatenate([P.coeffs[2:], P.coeffs[:2]]), axis=0) * 5, axes=(1, 2, 3)).real * 512
    np.testing.assert_allclose(p, np.sin(X1) * np.cos(T), atol=1e-13)


def test_steady_mode_with_viscosity():
    T, X1, X2, X3 = grids(6, 3)
    F = sk.SpectralField.from_samples(field(np.sin(X2), 0 * T, 0 * T), mu=2.0)
    V, _ = sk.solve_tp_stokes(F)
    np.testing.assert_allclose(V.to_samples()[..., 0], np.sin(X2) / 2.0, atol=1e-14)


def test_oscillating_mean_force_allowed_steady_mean_rejected():
    T, X1, X2, X3 = grids(4, 5)
    F = sk.SpectralField.from_samples(field(np.cos(T), 0 * T, 0 * T))
    V, _ = sk.solve_tp_stokes(F)
    np.testing.assert_allclose(V.to_samples()[..., 0], np.sin(T), atol=1e-14)
    G = sk.SpectralField.from_samples(field(1.0 + 0 * T, 0 * T, 0 * T))
    with pytest.raises(sk.MeanForceIncompatibility):
        sk.solve_tp_stokes(G)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), N=st.sampled_from([4, 5, 8]))
def test_leray_projection(seed, N):
    rng = np.random.default_rng(seed)
    f = sk.random_forcing(N, 2, rng)
    Pf = sk.leray_project(f)
    assert Pf.divergence_error() < 1e-13
    np.testing.assert_allclose(sk.leray_project(Pf).coeffs, Pf.coeffs, atol=1e-15)
    g = f - Pf  # gradient part
    assert np.abs(sk.leray_project(g).coeffs).max() < 1e-14


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_random_solve_residual_and_reality(seed):
    rng = np.random.default_rng(seed)
    F = sk.random_forcing(6, 3, rng, mu=0.7)
    V, P = sk.solve_tp_stokes(F)
    assert sk.stokes_residual(V, P, F) < 1e-12
    assert V.divergence_error() < 1e-13
    assert np.abs(V.to_samples().imag).max() == 0


def test_nonlinearity_against_physical_space():
    T, X1, X2, X3 = grids(16, 5)
    c = np.cos(T)
    V = sk.SpectralField.from_samples(field(np.sin(X2) * c, np.sin(X1) * c, 0 * T))
    N = sk.nonlinearity(V)
    exact = field(np.sin(X1) * np.cos(X2) * c**2, np.sin(X2) * np.cos(X1) * c**2, 0 * T)
    np.testing.assert_allclose(N.to_samples(), exact, atol=1e-13)


def test_nonlinearity_dealiases():
    N = 8
    c = np.zeros((1, N, N, N, 3), complex)
    c[0, 3, 0, 0, 1] = 1.0  # outside the two-thirds band
    V = sk.SpectralField(c)
    assert np.abs(sk.nonlinearity(V).coeffs).max() == 0


def test_e_norm_single_mode():
    K, N = 1, 4
    c = np.zeros((2 * K + 1, N, N, N, 3), complex)
    c[K + 1, 0, 1, 0, 0] = 0.5
    c[K - 1, 0, -1, 0, 0] = 0.5
    V = sk.SpectralField(c)
    # ||dt u|| = 1/sqrt2 and the H2 weight (1+1)^2 gives sqrt(4/2)
    assert sk.e_norm(V) == pytest.approx(3 / np.sqrt(2))


def test_picard_zero_forcing():
    F = sk.SpectralField.zeros(8, 2)
    V, P, rep = sk.navier_stokes_picard(F)
    assert rep.converged and rep.n_iter == 1
    assert rep.final_residual == 0 and V.l2() == 0


def test_picard_recovers_manufactured_solution():
    rng = np.random.default_rng(7)
    Vs = sk.random_solenoidal(8, 2, 3, 1e-2, rng)
    Ps = sk.random_pressure(8, 2, 3, 1e-2, rng)
    F = sk.manufactured_forcing(Vs, Ps)
    V, P, rep = sk.navier_stokes_picard(F)
    assert rep.converged
    assert sk.e_norm(V - Vs, P - Ps) < 1e-10
    assert rep.relative_residual < 1e-10
    assert all(r < 0.1 for r in rep.ratios)


def test_picard_large_data_reports_failure():
    rng = np.random.default_rng(0)
    Vs = sk.random_solenoidal(8, 2, 3, 50.0, rng)
    F = sk.manufactured_forcing(Vs, sk.PressureField.zeros(8, 2))
    _, _, rep = sk.navier_stokes_picard(F, max_iter=8)
    assert not rep.converged


def test_contraction_grows_with_amplitude():
    ratios = []
    for amp in (0.02, 0.04, 0.08):
        rng = np.random.default_rng(1)
        F = sk.manufactured_forcing(sk.random_solenoidal(8, 2, 3, amp, rng), sk.random_pressure(8, 2, 3, amp, rng))
        ratios.append(sk.navier_stokes_picard(F)[2].ratios[0])
    assert ratios[0] < ratios[1] < ratios[2]


def test_validation():
    with pytest.raises(sk.StokesError):
        sk.SpectralField(np.zeros((2, 4, 4, 4, 3)))
    with pytest.raises(sk.StokesError):
        sk.SpectralField(np.zeros((1, 4, 4, 4, 3)), mu=0.0)
    with pytest.raises(sk.StokesError):
        sk.maxreg_ratio(sk.SpectralField.zeros(4, 1), sk.SpectralField.zeros(4, 1))


def test_random_forcing_normalized(rng):
    F = sk.random_forcing(6, 2, rng)
    assert F.l2() == pytest.approx(1.0)
    assert np.all(F.coeffs[2, 0, 0, 0] == 0)
