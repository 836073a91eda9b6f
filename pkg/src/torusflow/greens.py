"""Closed-form Stokes kernels, vectorized over leading axes of ``x``.

Conventions: ``x`` has shape ``(..., 3)``; tensors are returned with the
spatial indices last, gradients as ``[..., i, j, m] = d_m K_ij``.

The steady pair follows the classical sign convention

    U_ij(x) = -(1/(8 pi mu)) (delta_ij/|x| + x_i x_j/|x|^3),
    q_j(x)  = (1/(4 pi)) x_j/|x|^3,

which satisfies ``mu Lap U_.j + grad q_j = 0`` away from the origin.

The oscillatory kernel for time mode ``k != 0`` is the inverse Fourier
transform of ``(mu|xi|^2 + ik)^{-1} (I - xi xi^T/|xi|^2)``:

    G_k = g I + Hess h,   g = e^{-kappa r}/(4 pi mu r),   h = (1 - e^{-kappa r})/(4 pi lam r)

with ``lam = ik`` and ``kappa = sqrt(lam/mu)`` on the principal branch.
"""
from __future__ import annotations

import numpy as np

# integral of 1/|y| over the unit cube centred at the origin
CUBE_INV_R = 2.0 * (1.5 * np.log(2.0 + np.sqrt(3.0)) - 0.25 * np.pi)

_EYE = np.eye(3)


def _split(x):
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    return x, r


def stokeslet(x, mu: float = 1.0) -> np.ndarray:
    x, r = _split(x)
    xx = x[..., :, None] * x[..., None, :]
    return -(_EYE / r[..., None, None] + xx / r[..., None, None] ** 3) / (8.0 * np.pi * mu)


def stokeslet_gradient(x, mu: float = 1.0) -> np.ndarray:
    x, r = _split(x)
    r3 = r[..., None, None, None] ** 3
    r5 = r[..., None, None, None] ** 5
    xi = x[..., :, None, None]
    xj = x[..., None, :, None]
    xm = x[..., None, None, :]
    d_ij = _EYE[:, :, None]
    d_im = _EYE[:, None, :]
    d_jm = _EYE[None, :, :]
    out = -d_ij * xm / r3 + (d_im * xj + d_jm * xi) / r3 - 3.0 * xi * xj * xm / r5
    return -out / (8.0 * np.pi * mu)


def pressure_kernel(x) -> np.ndarray:
    x, r = _split(x)
    return x / (4.0 * np.pi * r[..., None] ** 3)


def pressure_kernel_gradient(x) -> np.ndarray:
    x, r = _split(x)
    r3 = r[..., None, None] ** 3
    r5 = r[..., None, None] ** 5
    return (_EYE / r3 - 3.0 * x[..., :, None] * x[..., None, :] / r5) / (4.0 * np.pi)


def decay_rate(k: int, mu: float) -> complex:
    """Principal square root of ``ik/mu`` (positive real part for k != 0)."""
    return np.sqrt(1j * k / mu + 0j)


def oscillatory_radial(r, k: int, mu: float = 1.0):
    """Radial profiles ``(g, g', h', h'', h''')`` of the mode-``k`` kernel."""
    if k == 0:
        raise ValueError("the oscillatory kernel is undefined for k = 0")
    r = np.asarray(r, dtype=float)
    lam = 1j * k
    kap = decay_rate(k, mu)
    E = np.exp(-kap * r)
    c = 1.0 / (4.0 * np.pi * lam)
    g = E / (4.0 * np.pi * mu * r)
    dg = -E * (kap * r + 1.0) / (4.0 * np.pi * mu * r**2)
    one_m = -np.expm1(-kap * r)
    h1 = c * (kap * E / r - one_m / r**2)
    h2 = c * (-kap**2 * E / r - 2.0 * kap * E / r**2 + 2.0 * one_m / r**3)
    h3 = c * (kap**3 * E / r + 3.0 * kap**2 * E / r**2 + 6.0 * kap * E / r**3 - 6.0 * one_m / r**4)
    return g, dg, h1, h2, h3


def assemble_from_radial(x, g, dg, h1, h2, h3, gradient: bool = False):
    """Combine radial profiles into ``g I + Hess h`` (and its gradient)."""
    x, r = _split(x)
    e = x / r[..., None]
    A = h2 - h1 / r
    B = h1 / r
    ee = e[..., :, None] * e[..., None, :]
    G = (g + B)[..., None, None] * _EYE + A[..., None, None] * ee
    if not gradient:
        return G
    dA = h3 - h2 / r + h1 / r**2
    ei = e[..., :, None, None]
    ej = e[..., None, :, None]
    em = e[..., None, None, :]
    d_ij = _EYE[:, :, None]
    d_im = _EYE[:, None, :]
    d_jm = _EYE[None, :, :]
    Ar = (A / r)[..., None, None, None]
    dG = (
        dg[..., None, None, None] * em * d_ij
        + dA[..., None, None, None] * ei * ej * em
        + Ar * (d_im * ej + d_jm * ei + d_ij * em - 2.0 * ei * ej * em)
    )
    return G, dG


def oscillatory_kernel(x, k: int, mu: float = 1.0, gradient: bool = False):
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    return assemble_from_radial(x, *oscillatory_radial(r, k, mu), gradient=gradient)
