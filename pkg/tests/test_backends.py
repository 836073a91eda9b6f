import os
import subprocess
import sys

import numpy as np
import pytest

from torusflow import accel

native = pytest.mark.skipif(accel.BACKEND != "native", reason="compiled kernels unavailable")


def test_pure_python_switch():
    env = dict(os.environ, TORUSFLOW_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import torusflow; print(torusflow.BACKEND)"], env=env,
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv("TORUSFLOW_THREADS", "3")
    assert accel.num_threads() == 3
    monkeypatch.delenv("TORUSFLOW_THREADS")
    assert accel.num_threads() >= 1


@native
def test_rademacher_backends_agree(rng):
    X = rng.normal(size=(50, 4, 3)) + 1j * rng.normal(size=(50, 4, 3))
    signs = 1.0 - 2.0 * ((np.arange(16)[:, None] >> np.arange(4)) & 1)
    for p in (1.5, 2.0, 3.0):
        np.testing.assert_allclose(accel.rademacher_norms(X, signs, p, "native"),
                                   accel.rademacher_norms(X, signs, p, "python"), rtol=1e-13)


@native
def test_stokeslet_sum_backends_agree(rng):
    t, s, f = rng.normal(size=(30, 3)), rng.normal(size=(40, 3)), rng.normal(size=(40, 3))
    for a, b in zip(accel.stokeslet_sum(t, s, f, 1.3, 0.01, "native"), accel.stokeslet_sum(t, s, f, 1.3, 0.01, "python")):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)


@native
def test_native_results_independent_of_threads(rng, monkeypatch):
    t, s, f = rng.normal(size=(64, 3)), rng.normal(size=(64, 3)), rng.normal(size=(64, 3))
    monkeypatch.setenv("TORUSFLOW_THREADS", "1")
    a = accel.stokeslet_sum(t, s, f, 1.0, 0.0, "native")
    monkeypatch.setenv("TORUSFLOW_THREADS", "4")
    b = accel.stokeslet_sum(t, s, f, 1.0, 0.0, "native")
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)


def test_oscillatory_sum_rejects_mode_zero():
    with pytest.raises(ValueError):
        accel.oscillatory_sum(np.ones((1, 3)), np.zeros((1, 3)), [0, 1], 1.0)
