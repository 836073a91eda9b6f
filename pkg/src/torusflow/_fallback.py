"""NumPy implementations of the hot kernels.

These define the reference semantics; ``_native.pyx`` must agree with them
to rounding error.
"""
from __future__ import annotations

import numpy as np

from . import greens

_CHUNK = 1 << 20  # complex entries per temporary block


def rademacher_norms(X: np.ndarray, signs: np.ndarray, p: float) -> np.ndarray:
    """``(mean_s |sum_k s_k X[b,k]|^p)^(1/p)`` for each batch entry ``b``."""
    X = np.asarray(X, dtype=complex)
    signs = np.asarray(signs, dtype=float)
    B, m, d = X.shape
    out = np.empty(B)
    step = max(1, _CHUNK // max(1, signs.shape[0] * d))
    for lo in range(0, B, step):
        Y = np.einsum("sk,bkd->bsd", signs, X[lo : lo + step])
        nrm = np.sqrt(np.sum(Y.real**2 + Y.imag**2, axis=-1))
        out[lo : lo + step] = np.mean(nrm**p, axis=1) ** (1.0 / p)
    return out


def stokeslet_sum(targets, sources, forces, mu: float, exclude_radius: float = 0.0):
    """Direct sums ``u = sum U(x-y) f``, ``grad u`` and ``p = sum q(x-y).f``.

    Sources closer than ``exclude_radius`` to a target are skipped.
    Returns ``(u (M,3), grad_u (M,3,3) with [i,m] = d_m u_i, p (M,))``.
    """
    targets = np.asarray(targets, dtype=float)
    sources = np.asarray(sources, dtype=float)
    forces = np.asarray(forces, dtype=float)
    M = targets.shape[0]
    u = np.zeros((M, 3))
    grad = np.zeros((M, 3, 3))
    p = np.zeros(M)
    step = max(1, 4096 // max(1, M))
    for lo in range(0, sources.shape[0], step):
        y = sources[lo : lo + step]
        f = forces[lo : lo + step]
        d = targets[:, None, :] - y[None, :, :]
        r = np.linalg.norm(d, axis=-1)
        keep = r > exclude_radius
        d = np.where(keep[..., None], d, 1.0)
        w = keep.astype(float)
        U = greens.stokeslet(d, mu) * w[..., None, None]
        dU = greens.stokeslet_gradient(d, mu) * w[..., None, None, None]
        q = greens.pressure_kernel(d) * w[..., None]
        u += np.einsum("msij,sj->mi", U, f)
        grad += np.einsum("msijk,sj->mik", dU, f)
        p += np.einsum("msj,sj->m", q, f)
    return u, grad, p


def oscillatory_sum(targets, sources, modes, mu: float, h_src=None, g_src=None):
    """Per-mode sums ``v_k(x) = sum_y G_k(x-y) h_k(y) + sum_y dG_k(x-y) : G_k(y)``.

    ``h_src`` has shape ``(n_modes, S, 3)``; ``g_src`` has shape
    ``(n_modes, S, 3, 3)`` and is contracted as ``sum_jm d_m G_ij G_jm``.
    Returns ``(n_modes, M, 3)`` complex.
    """
    targets = np.asarray(targets, dtype=float)
    sources = np.asarray(sources, dtype=float)
    out = np.zeros((len(modes), targets.shape[0], 3), dtype=complex)
    d = targets[:, None, :] - sources[None, :, :]
    for idx, k in enumerate(modes):
        G, dG = greens.oscillatory_kernel(d, int(k), mu, gradient=True)
        if h_src is not None:
            out[idx] += np.einsum("msij,sj->mi", G, h_src[idx])
        if g_src is not None:
            out[idx] += np.einsum("msijl,sjl->mi", dG, g_src[idx])
    return out
