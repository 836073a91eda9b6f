import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from torusflow import torus
from torusflow.torus import NormKind, NormSpec


def random_function(rng, K, dim, real=True):
    c = rng.normal(size=(2 * K + 1, dim)) + 1j * rng.normal(size=(2 * K + 1, dim))
    if real:
        c = 0.5 * (c + np.conj(c[::-1]))
    return torus.from_coeffs(c, n_time=2 * K + 1 + int(rng.integers(0, 8)), real_valued=real)


def test_known_coefficients():
    t = torus.time_grid(16)
    f = torus.analyze(np.stack([np.cos(t), np.sin(3 * t), 2 + 0 * t], axis=1))
    assert f.K == 7 and f.real_valued
    np.testing.assert_allclose(f.coeff(1), [0.5, 0, 0], atol=1e-15)
    np.testing.assert_allclose(f.coeff(3), [0, -0.5j, 0], atol=1e-15)
    np.testing.assert_allclose(f.coeff(0), [0, 0, 2], atol=1e-15)


def test_nyquist_mode_dropped():
    t = torus.time_grid(8)
    f = torus.analyze(np.cos(4 * t))
    assert f.K == 3
    assert np.abs(f.coeffs).max() < 1e-15


def test_real_input_gives_hermitian_coefficients(rng):
    f = torus.analyze(rng.normal(size=(33, 4)))
    np.testing.assert_array_equal(f.coeffs, np.conj(f.coeffs[::-1]))


@settings(max_examples=40, deadline=None)
@given(K=st.integers(0, 32), dim=st.integers(1, 8), real=st.booleans(), seed=st.integers(0, 2**31))
def test_roundtrip_and_parseval(K, dim, real, seed):
    f = random_function(np.random.default_rng(seed), K, dim, real)
    g = torus.analyze(f.samples)
    scale = max(1.0, np.abs(f.coeffs).max())
    np.testing.assert_allclose(g.coeffs[g.K - K : g.K + K + 1], f.coeffs, atol=1e-12 * scale)
    assert np.abs(np.delete(g.coeffs, np.s_[g.K - K : g.K + K + 1], axis=0)).max(initial=0) < 1e-12 * scale
    assert torus.parseval_gap(f) < 1e-12


def test_synthesize_matches_samples(rng):
    f = random_function(rng, 5, 3)
    np.testing.assert_allclose(torus.synthesize(f, torus.time_grid(f.n_time)), f.samples, atol=1e-13)


def test_derivative_of_exponential():
    c = np.zeros((7, 1), complex)
    c[3 + 2] = 1.0
    f = torus.from_coeffs(c, n_time=16)
    d = torus.derivative(f, 2)
    np.testing.assert_allclose(d.samples[:, 0], -4 * np.exp(2j * torus.time_grid(16)), atol=1e-13)


def test_derivative_keeps_real_valued(rng):
    f = random_function(rng, 6, 2)
    assert torus.derivative(f, 3).real_valued


def test_norms_of_known_functions():
    t = torus.time_grid(64)
    s = torus.analyze(np.sin(t))
    assert torus.norm(s) == pytest.approx(1 / np.sqrt(2), rel=1e-14)
    const = torus.analyze(3.0 * np.ones(9))
    assert torus.norm(const, NormSpec(p=3.5)) == pytest.approx(3.0, rel=1e-14)
    # |sin|^4 averages to 3/8
    assert torus.norm(s, NormSpec(p=4)) == pytest.approx((3 / 8) ** 0.25, rel=1e-12)
    # W^{1,2}: (||sin||^2 + ||cos||^2)^(1/2) = 1
    assert torus.norm(s, NormSpec(2, 1, NormKind.SOBOLEV_INTEGER)) == pytest.approx(1.0, rel=1e-13)
    # fractional weight (1+|k|)^1 doubles the single-mode norm
    assert torus.norm(s, NormSpec(2, 1, NormKind.SOBOLEV_FRACTIONAL)) == pytest.approx(np.sqrt(2), rel=1e-13)


def test_refined_quadrature_agrees_for_p2(rng):
    f = random_function(rng, 4, 2)
    assert torus.norm(f, n_quad=101) == pytest.approx(torus.norm(f), rel=1e-12)


def test_norm_spec_validation():
    for bad in (dict(p=1.0), dict(p=np.inf), dict(order=-1), dict(order=0.5, kind="sobolev_integer")):
        with pytest.raises(ValueError):
            NormSpec(**bad)


def test_split_stationary_oscillatory(rng):
    f = random_function(rng, 4, 3)
    mean, osc = torus.split_stationary_oscillatory(f)
    np.testing.assert_allclose(mean, f.samples.mean(axis=0).real, atol=1e-13)
    assert np.all(osc.coeff(0) == 0)
    np.testing.assert_allclose(osc.samples + mean, f.samples, atol=1e-13)


def test_csv_roundtrip(rng):
    f = random_function(rng, 3, 2)
    buf = io.StringIO()
    torus.write_csv(f, buf)
    assert "\r" not in buf.getvalue()
    g = torus.read_csv(io.StringIO(buf.getvalue()), n_time=f.n_time)
    np.testing.assert_array_equal(g.coeffs, f.coeffs)


def test_input_validation():
    with pytest.raises(ValueError):
        torus.analyze(np.zeros((0, 2)))
    with pytest.raises(ValueError):
        torus.from_coeffs(np.zeros((4, 1)))


def test_immutable_arrays(rng):
    f = random_function(rng, 2, 1)
    with pytest.raises(ValueError):
        f.coeffs[0, 0] = 1.0
