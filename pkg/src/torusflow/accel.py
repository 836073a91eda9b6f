"""Backend selection for the hot kernels.

The compiled extension ``torusflow._native`` is used when it imports;
otherwise, or when ``TORUSFLOW_PURE_PYTHON=1``, the NumPy versions in
``torusflow._fallback`` are used.  ``TORUSFLOW_THREADS`` caps the OpenMP
thread count of the compiled kernels.
"""
from __future__ import annotations

import os

import numpy as np

from . import _fallback

try:
    if os.environ.get("TORUSFLOW_PURE_PYTHON") == "1":
        raise ImportError("pure-Python backend forced")
    from . import _native
except ImportError:
    _native = None

BACKEND = "native" if _native is not None else "python"


def num_threads() -> int:
    raw = os.environ.get("TORUSFLOW_THREADS")
    if raw:
        return max(1, int(raw))
    return max(1, min(8, os.cpu_count() or 1))


def _use_native(backend: str | None) -> bool:
    choice = backend or BACKEND
    if choice == "native" and _native is None:
        raise RuntimeError("compiled kernels are not available; rebuild with Cython")
    return choice == "native"


def rademacher_norms(X, signs, p: float, backend: str | None = None) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=complex)
    signs = np.ascontiguousarray(signs, dtype=float)
    if _use_native(backend):
        return _native.rademacher_norms(X, signs, float(p), num_threads())
    return _fallback.rademacher_norms(X, signs, p)


def stokeslet_sum(targets, sources, forces, mu: float, exclude_radius: float = 0.0, backend: str | None = None):
    targets = np.ascontiguousarray(targets, dtype=float).reshape(-1, 3)
    sources = np.ascontiguousarray(sources, dtype=float).reshape(-1, 3)
    forces = np.ascontiguousarray(forces, dtype=float).reshape(-1, 3)
    if _use_native(backend):
        return _native.stokeslet_sum(targets, sources, forces, float(mu), float(exclude_radius), num_threads())
    return _fallback.stokeslet_sum(targets, sources, forces, mu, exclude_radius)


def oscillatory_sum(targets, sources, modes, mu: float, h_src=None, g_src=None, backend: str | None = None):
    targets = np.ascontiguousarray(targets, dtype=float).reshape(-1, 3)
    sources = np.ascontiguousarray(sources, dtype=float).reshape(-1, 3)
    modes = np.asarray(modes, dtype=np.int64)
    if np.any(modes == 0):
        raise ValueError("time mode 0 is excluded from the oscillatory kernel")
    if _use_native(backend):
        K, S = len(modes), sources.shape[0]
        h = np.zeros((K, S, 3), complex) if h_src is None else np.ascontiguousarray(h_src, dtype=complex)
        g = np.zeros((K, S, 3, 3), complex) if g_src is None else np.ascontiguousarray(g_src, dtype=complex)
        return _native.oscillatory_sum(
            targets, sources, modes, float(mu), h, g, h_src is not None, g_src is not None, num_threads()
        )
    return _fallback.oscillatory_sum(targets, sources, modes, mu, h_src, g_src)
