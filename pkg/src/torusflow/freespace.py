"""Whole-space Stokes kernels, lattice convolutions and decay fits.

Steady fields come from the Stokeslet pair in :mod:`torusflow.greens`.
The time-periodic kernel with the time mean removed is evaluated per time
mode, either in closed form, by one-dimensional oscillatory quadrature of
the radial Fourier inversion, or by a truncated lattice Fourier sum.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import integrate

from . import accel, greens
from .torus import NormSpec, TorusFunction, from_coeffs, norm as torus_norm

DEFAULT_DELTA = 1.0
TAIL_WARN_FRACTION = 0.1


class KernelDomainError(ValueError):
    pass


def _check_nonzero(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 3:
        raise ValueError("points must have 3 components")
    if np.any(np.linalg.norm(x, axis=-1) == 0):
        raise KernelDomainError("kernel is singular at x = 0")
    return x


def stokeslet(x, mu: float = 1.0) -> np.ndarray:
    return greens.stokeslet(_check_nonzero(x), mu)


def pressure_kernel(x) -> np.ndarray:
    return greens.pressure_kernel(_check_nonzero(x))


def stokeslet_residual(points, h: float, mu: float = 1.0, fd_order: int = 4) -> np.ndarray:
    """Central-difference residuals of the kernel pair at each point.

    Returns ``(n, 2)``: the largest entry of ``mu lap U[:, j] + grad q_j``
    over ``j`` and of the divergence of the columns.  Both vanish away
    from the origin, so they shrink like ``h^fd_order`` (2 or 4).
    """
    if fd_order == 2:
        d1 = {1: 0.5, -1: -0.5}
        d2 = {1: 1.0, 0: -2.0, -1: 1.0}
    elif fd_order == 4:
        d1 = {2: -1 / 12, 1: 2 / 3, -1: -2 / 3, -2: 1 / 12}
        d2 = {2: -1 / 12, 1: 4 / 3, 0: -5 / 2, -1: 4 / 3, -2: -1 / 12}
    else:
        raise ValueError("fd_order must be 2 or 4")
    x = _check_nonzero(np.asarray(points, float).reshape(-1, 3))
    reach = max(d1) * h
    if np.any(np.linalg.norm(x, axis=-1) <= 2 * reach):
        raise KernelDomainError("stencil reaches the origin")
    eye = np.eye(3)
    lap = np.zeros((x.shape[0], 3, 3))
    gq = np.zeros_like(lap)  # [n, m, j] = d_m q_j
    div = np.zeros((x.shape[0], 3))
    for m in range(3):
        for s, w in d2.items():
            lap += w * greens.stokeslet(x + s * h * eye[m], mu) / h**2
        for s, w in d1.items():
            gq[:, m] += w * greens.pressure_kernel(x + s * h * eye[m]) / h
            div += w * greens.stokeslet(x + s * h * eye[m], mu)[:, m, :] / h
    mom = mu * lap + gq
    return np.stack([np.abs(mom).max(axis=(1, 2)), np.abs(div).max(axis=1)], axis=-1)


# ---------------------------------------------------------------------------
# lattices


@dataclass(frozen=True, eq=False)
class LatticeField:
    """Values on the node lattice ``h * (i - n//2)`` covering ``[-extent, extent]^3``.

    ``values`` has shape ``(n, n, n) + tail``.  When ``K_time`` is set the
    tail starts with a time-coefficient axis of length ``2*K_time + 1``.
    """

    h: float
    extent: float
    values: np.ndarray
    support_radius: float | None = None
    K_time: int | None = None

    def __post_init__(self):
        n = self.values.shape[0]
        if self.values.shape[:3] != (n, n, n):
            raise ValueError("values must start with three equal lattice axes")
        if n != self.n_side(self.h, self.extent):
            raise ValueError(f"lattice of h={self.h}, extent={self.extent} needs {self.n_side(self.h, self.extent)} nodes per axis")
        if self.support_radius is not None and self.support_radius > self.extent:
            raise ValueError("support radius exceeds the lattice extent")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("lattice values must be finite")

    @staticmethod
    def n_side(h: float, extent: float) -> int:
        return 2 * int(round(extent / h)) + 1

    @property
    def axis(self) -> np.ndarray:
        m = self.values.shape[0] // 2
        return self.h * (np.arange(self.values.shape[0]) - m)

    def points(self) -> np.ndarray:
        a = self.axis
        g = np.meshgrid(a, a, a, indexing="ij")
        return np.stack(g, axis=-1)

    @classmethod
    def from_function(cls, fn, h: float, extent: float, support_radius: float | None = None,
                      K_time: int | None = None) -> "LatticeField":
        n = cls.n_side(h, extent)
        a = h * (np.arange(n) - n // 2)
        pts = np.stack(np.meshgrid(a, a, a, indexing="ij"), axis=-1)
        return cls(h, extent, np.asarray(fn(pts)), support_radius, K_time)


def point_force(force, h: float, extent: float | None = None) -> LatticeField:
    """A single-cell force density with total force ``force`` at the origin."""
    extent = h if extent is None else extent
    n = LatticeField.n_side(h, extent)
    v = np.zeros((n, n, n, 3))
    v[n // 2, n // 2, n // 2] = np.asarray(force, float) / h**3
    return LatticeField(h, extent, v, support_radius=0.5 * h)


def bump_force(force, radius: float, h: float) -> LatticeField:
    """Smooth compactly supported density ``force * b(|x|/radius)`` with unit total mass."""
    n = LatticeField.n_side(h, radius)
    a = h * (np.arange(n) - n // 2)
    pts = np.stack(np.meshgrid(a, a, a, indexing="ij"), axis=-1)
    s = np.linalg.norm(pts, axis=-1) / radius
    with np.errstate(divide="ignore"):
        b = np.where(s < 1, np.exp(-1.0 / np.maximum(1 - s**2, 1e-300)), 0.0)
    b /= b.sum() * h**3
    return LatticeField(h, radius, b[..., None] * np.asarray(force, float), support_radius=radius)


def _sources(f: LatticeField):
    if f.support_radius is None:
        raise ValueError("convolution needs a declared support radius")
    pts = f.points().reshape(-1, 3)
    vals = f.values.reshape(pts.shape[0], *f.values.shape[3:])
    inside = np.linalg.norm(pts, axis=-1) <= f.support_radius + 1e-12 * f.h
    nz = np.any(vals.reshape(pts.shape[0], -1) != 0, axis=1)
    keep = inside & nz
    return pts[keep], vals[keep]


# ---------------------------------------------------------------------------
# steady convolution


@dataclass
class SteadyField:
    targets: np.ndarray
    u: np.ndarray
    grad_u: np.ndarray  # [..., i, m] = d_m u_i
    p: np.ndarray


def steady_convolve(f: LatticeField, mu: float = 1.0, targets=None, backend: str | None = None) -> SteadyField:
    """Midpoint-rule convolution of the Stokeslet pair with a force density.

    Targets default to the lattice of ``f``.  A target that sits on a
    source node skips that cell and adds the exact cell integral of the
    Stokeslet instead; the pressure and gradient cell integrals vanish by
    symmetry.
    """
    src, vals = _sources(f)
    tgt = f.points().reshape(-1, 3) if targets is None else np.asarray(targets, float).reshape(-1, 3)
    w = f.h**3
    if src.shape[0] == 0:
        M = tgt.shape[0]
        return SteadyField(tgt, np.zeros((M, 3)), np.zeros((M, 3, 3)), np.zeros(M))
    u, g, p = accel.stokeslet_sum(tgt, src, vals * w, mu, exclude_radius=0.5 * f.h, backend=backend)
    # self-cell correction
    d = np.linalg.norm(tgt[:, None, :] - src[None, :, :], axis=-1) if tgt.shape[0] * src.shape[0] < 5e7 else None
    if d is not None:
        ti, si = np.nonzero(d <= 0.5 * f.h)
        u[ti] += -(greens.CUBE_INV_R * f.h**2 / (6.0 * np.pi * mu)) * vals[si]
    return SteadyField(tgt, u, g, p)


# ---------------------------------------------------------------------------
# oscillatory kernel


def _radial_pair(phi, r: float, weight: str, split: float):
    """``int_0^inf phi(q) w(q r) dq`` for complex ``phi`` and ``w`` in {sin, cos}."""
    trig = np.sin if weight == "sin" else np.cos
    total = 0j
    err = 0.0
    for part, take in ((1.0, np.real), (1j, np.imag)):
        v1, e1 = integrate.quad(lambda q: take(phi(q)) * trig(q * r), 0.0, split, limit=400, epsabs=1e-14, epsrel=1e-12)
        v2, e2 = integrate.quad(lambda q: take(phi(q)), split, np.inf, weight=weight, wvar=r, limlst=200, epsabs=1e-14)
        total += part * (v1 + v2)
        err += e1 + e2
    return total, err


def radial_profiles_quadrature(r: float, k: int, mu: float = 1.0, split: float = 1.0):
    """Radial profiles ``(g, g', h', h'', h''')`` and a quadrature error estimate.

    Three one-dimensional Fourier integrals are needed; the tail beyond
    ``split`` is handled by scipy's QAWF routine.
    """
    if k == 0:
        raise ValueError("time mode 0 is excluded")
    with warnings.catch_warnings():
        # QAWF flags slowly decaying cycles even when the result is accurate
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return _radial_profiles(r, k, mu, split)


def _radial_profiles(r, k, mu, split):
    lam = 1j * k
    S1, e1 = _radial_pair(lambda q: q / (mu * q * q + lam), r, "sin", split)
    C0, e2 = _radial_pair(lambda q: 1.0 / (mu * q * q + lam), r, "cos", split)

    def inv(q):
        return 1.0 / (q * (mu * q * q + lam)) if q > 0 else 0.0

    # the integrand of I is regular at q = 0 only as a product, so the near part is done by hand
    Ire, e3a = integrate.quad(lambda q: (np.sin(q * r) / q if q > 0 else r) * (1.0 / (mu * q * q + lam)).real,
                              0.0, split, limit=400, epsabs=1e-14, epsrel=1e-12)
    Iim, e3b = integrate.quad(lambda q: (np.sin(q * r) / q if q > 0 else r) * (1.0 / (mu * q * q + lam)).imag,
                              0.0, split, limit=400, epsabs=1e-14, epsrel=1e-12)
    Itail, e3c = _radial_pair_tail(inv, r, split)
    I = Ire + 1j * Iim + Itail
    c = 1.0 / (2.0 * np.pi**2)
    F, F1, F2, F3 = c * I, c * C0, -c * S1, c * (lam / mu) * C0
    h1 = F1 / r - F / r**2
    h2 = F2 / r - 2 * F1 / r**2 + 2 * F / r**3
    h3 = F3 / r - 3 * F2 / r**2 + 6 * F1 / r**3 - 6 * F / r**4
    g = c * S1 / r
    dS1 = -(lam / mu) * C0
    dg = c * (dS1 / r - S1 / r**2)
    err = c * (e1 + e2 + e3a + e3b + e3c)
    return (g, dg, h1, h2, h3), err


def _radial_pair_tail(phi, r, split):
    total = 0j
    err = 0.0
    for part, take in ((1.0, np.real), (1j, np.imag)):
        v, e = integrate.quad(lambda q: take(phi(q)), split, np.inf, weight="sin", wvar=r, limlst=200, epsabs=1e-14)
        total += part * v
        err += e
    return total, err


def fft_kernel(x, k: int, mu: float = 1.0, box: float = 32.0, n: int = 64, gradient: bool = False):
    """Truncated lattice Fourier sum of the mode-``k`` symbol on a periodic box.

    Returns ``(G, dG, tail)`` where ``tail`` is the size of the contribution
    from the outer half of the retained wavenumbers, a proxy for the
    truncation error.
    """
    x = np.asarray(x, float)
    m = (np.arange(n) - n // 2 + (0 if n % 2 else 1)).astype(float)  # symmetric index set
    xi1 = 2 * np.pi * m / box
    X1, X2, X3 = np.meshgrid(xi1, xi1, xi1, indexing="ij")
    xi = np.stack([X1, X2, X3], -1)
    n2 = np.sum(xi**2, -1)
    zero = n2 == 0
    n2s = np.where(zero, 1.0, n2)
    sym = np.where(zero, 0.0, 1.0 / (mu * n2s + 1j * k))
    P = np.eye(3) - xi[..., :, None] * xi[..., None, :] / n2s[..., None, None]
    phase = np.exp(1j * (xi @ x))
    w = (sym * phase)[..., None, None] * P
    half = 0.5 * np.max(np.abs(xi1))
    far = np.max(np.abs(xi), axis=-1) > half
    scale = 1.0 / box**3
    G = scale * w.sum(axis=(0, 1, 2))
    tail = scale * np.abs(w[far].sum(axis=0)).max()
    if not gradient:
        return G, None, float(tail)
    dG = scale * np.einsum("abcij,abcm->ijm", w, 1j * xi)
    return G, dG, float(tail)


METHODS = ("radial", "closed", "fft")


@dataclass
class GammaPerpResult:
    """Kernel samples as time functions with 9 (or 27 for the gradient) components."""

    points: np.ndarray
    values: list
    gradients: list | None
    method: str
    K_time: int
    tail_flags: list = field(default_factory=list)
    tail_estimates: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "K_time": self.K_time,
            "n_points": int(self.points.shape[0]),
            "tail_warnings": int(sum(self.tail_flags)),
        }


def _mode_kernel(x, k, mu, method, gradient, fft_box, fft_n):
    if method == "closed":
        out = greens.oscillatory_kernel(x, k, mu, gradient=gradient)
        G, dG = out if gradient else (out, None)
        return G, dG, 0.0
    if method == "radial":
        r = float(np.linalg.norm(x))
        prof, err = radial_profiles_quadrature(r, k, mu)
        out = greens.assemble_from_radial(x, *[np.asarray(v) for v in prof], gradient=gradient)
        G, dG = out if gradient else (out, None)
        return G, dG, err
    if method == "fft":
        return fft_kernel(x, k, mu, fft_box, fft_n, gradient)
    raise ValueError(f"unknown method {method!r}; choose from {METHODS}")


def gamma_perp_eval(x_samples, K_time: int, mu: float = 1.0, method: str = "radial", delta: float = DEFAULT_DELTA,
                    gradient: bool = False, fft_box: float = 32.0, fft_n: int = 64) -> GammaPerpResult:
    """Time-periodic kernel with the time mean removed, sampled at each point.

    Each sample is a :class:`TorusFunction` over ``k = -K..K`` whose mode-0
    coefficient is zero.  Points closer than ``delta`` to the origin are
    rejected.  Modes with negative ``k`` are the complex conjugates of the
    positive ones.
    """
    pts = np.atleast_2d(np.asarray(x_samples, float))
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    if not delta > 0:
        raise ValueError("delta must be positive")
    r = np.linalg.norm(pts, axis=-1)
    if np.any(r < delta):
        raise KernelDomainError(f"points with |x| < delta={delta} are outside the validity region")
    values, grads, flags, tails = [], [], [], []
    for x in pts:
        c = np.zeros((2 * K_time + 1, 9), complex)
        cg = np.zeros((2 * K_time + 1, 27), complex) if gradient else None
        worst = 0.0
        for k in range(1, K_time + 1):
            G, dG, tail = _mode_kernel(x, k, mu, method, gradient, fft_box, fft_n)
            c[K_time + k] = G.ravel()
            c[K_time - k] = np.conj(G).ravel()
            if gradient:
                cg[K_time + k] = dG.ravel()
                cg[K_time - k] = np.conj(dG).ravel()
            worst = max(worst, tail / max(np.abs(G).max(), 1e-300))
        values.append(from_coeffs(c, real_valued=True))
        if gradient:
            grads.append(from_coeffs(cg, real_valued=True))
        tails.append(worst)
        flags.append(worst > TAIL_WARN_FRACTION)
    res = GammaPerpResult(pts, values, grads if gradient else None, method, K_time, flags, tails)
    if any(flags):
        warnings.warn(f"kernel truncation tail exceeds {TAIL_WARN_FRACTION:.0%} at {sum(flags)} point(s)", RuntimeWarning)
    return res


# ---------------------------------------------------------------------------
# time-periodic convolution


@dataclass
class PeriodicField:
    """Per-target time coefficients with shape ``(M, 2K+1, 3)``."""

    targets: np.ndarray
    coeffs: np.ndarray

    def at(self, i: int) -> TorusFunction:
        return from_coeffs(self.coeffs[i])


def tp_convolve(h_src: LatticeField | None, G: LatticeField | None, targets, mu: float = 1.0,
                backend: str | None = None) -> PeriodicField:
    """``grad Gamma * G + Gamma * h`` mode by mode over ``k != 0``.

    Both inputs carry time coefficients (``K_time`` set).  ``h_src`` has
    components ``(3,)`` and ``G`` components ``(3, 3)`` contracted as
    ``sum_jm d_m Gamma_ij G_jm``.
    """
    srcs = [s for s in (h_src, G) if s is not None]
    tgt = np.asarray(targets, float).reshape(-1, 3)
    if not srcs:
        raise ValueError("tp_convolve needs at least one source field")
    K = srcs[0].K_time
    if K is None or any(s.K_time != K for s in srcs):
        raise ValueError("sources must carry time coefficients with a common K_time")
    if len(srcs) == 2 and (h_src.h != G.h or h_src.values.shape[:3] != G.values.shape[:3]):
        raise ValueError("source lattices must coincide")
    lat = srcs[0]
    pts = lat.points().reshape(-1, 3)
    vals = [s.values.reshape(pts.shape[0], 2 * K + 1, -1) for s in srcs]
    if lat.support_radius is None:
        raise ValueError("convolution needs a declared support radius")
    inside = np.linalg.norm(pts, axis=-1) <= lat.support_radius + 1e-12 * lat.h
    nz = np.zeros(pts.shape[0], bool)
    for v in vals:
        nz |= np.any(v != 0, axis=(1, 2))
    keep = inside & nz
    src = pts[keep]
    out = np.zeros((tgt.shape[0], 2 * K + 1, 3), complex)
    if src.shape[0] == 0:
        return PeriodicField(tgt, out)
    d = np.linalg.norm(tgt[:, None, :] - src[None, :, :], axis=-1)
    if np.any(d == 0):
        raise KernelDomainError("targets must not coincide with source nodes")
    modes = np.array([k for k in range(-K, K + 1) if k != 0])
    w = lat.h**3
    h_arr = g_arr = None
    if h_src is not None:
        h_arr = np.transpose(h_src.values.reshape(pts.shape[0], 2 * K + 1, 3)[keep][:, modes + K], (1, 0, 2)) * w
    if G is not None:
        g_arr = np.transpose(G.values.reshape(pts.shape[0], 2 * K + 1, 3, 3)[keep][:, modes + K], (1, 0, 2, 3)) * w
    res = accel.oscillatory_sum(tgt, src, modes, mu, h_arr, g_arr, backend=backend)
    out[:, modes + K] = np.transpose(res, (1, 0, 2))
    return PeriodicField(tgt, out)


# ---------------------------------------------------------------------------
# weighted norms and decay fits


def weighted_norm(fld, ell: float, p: float | None = None) -> float:
    """``sup_x |f(x)| (1+|x|)^ell``, or with ``p`` the L_p(T) norm in place of ``|f(x)|``.

    ``fld`` is a :class:`LatticeField`, a :class:`GammaPerpResult`, a
    :class:`PeriodicField`, or a mapping from points to time functions.
    """
    if isinstance(fld, LatticeField):
        pts = fld.points().reshape(-1, 3)
        n = pts.shape[0]
        if fld.K_time is not None:
            coeffs = fld.values.reshape(n, 2 * fld.K_time + 1, -1)
            mags = np.array([_time_norm(from_coeffs(c), p) for c in coeffs])
        else:
            mags = np.linalg.norm(fld.values.reshape(n, -1), axis=1) if fld.values.ndim > 3 else np.abs(fld.values.ravel())
    elif isinstance(fld, GammaPerpResult):
        pts, mags = fld.points, np.array([_time_norm(v, p) for v in fld.values])
    elif isinstance(fld, PeriodicField):
        pts, mags = fld.targets, np.array([_time_norm(fld.at(i), p) for i in range(len(fld.targets))])
    elif isinstance(fld, Mapping):
        pts = np.array([np.asarray(k, float) for k in fld.keys()])
        mags = np.array([_time_norm(v, p) for v in fld.values()])
    else:
        raise TypeError(f"unsupported field type {type(fld).__name__}")
    r = np.linalg.norm(pts, axis=-1)
    return float(np.max(mags * (1.0 + r) ** ell))


def _time_norm(f: TorusFunction, p: float | None) -> float:
    spec = NormSpec(p=2.0 if p is None else p)
    n_quad = None if spec.p == 2 else max(64, 8 * f.K + 1)
    return torus_norm(f, spec, n_quad=n_quad)


@dataclass
class DecayReport:
    radii: np.ndarray
    norms: np.ndarray
    fitted_exponent: float
    fit_residual: float
    window: tuple
    intercept: float = 0.0

    def as_dict(self) -> dict:
        return {
            "radii": [float(r) for r in self.radii],
            "norms": [float(v) for v in self.norms],
            "fitted_exponent": float(self.fitted_exponent),
            "fit_residual": float(self.fit_residual),
            "window": [float(self.window[0]), float(self.window[1])],
        }


def decay_fit(radii: Sequence[float], norms: Sequence[float], window=None) -> DecayReport:
    """Least-squares slope of ``log norm`` against ``log radius`` inside ``window``."""
    r = np.asarray(radii, float)
    v = np.asarray(norms, float)
    if r.shape != v.shape or r.ndim != 1:
        raise ValueError("radii and norms must be matching 1-D sequences")
    if np.any(np.diff(r) <= 0) or np.any(r <= 0):
        raise ValueError("radii must be positive and strictly increasing")
    if np.any(~(v > 0)):
        raise ValueError("decay fits need strictly positive norms")
    lo, hi = (r[0], r[-1]) if window is None else (float(window[0]), float(window[1]))
    sel = (r >= lo) & (r <= hi)
    if sel.sum() < 5:
        raise ValueError(f"decay fit needs at least 5 points in the window, got {int(sel.sum())}")
    x, y = np.log(r[sel]), np.log(v[sel])
    slope, icpt = np.polyfit(x, y, 1)
    resid = float(np.max(np.abs(y - (slope * x + icpt))))
    return DecayReport(r, v, float(slope), resid, (lo, hi), float(icpt))


# ---------------------------------------------------------------------------
# decay studies used by the CLI and the acceptance suite

_DIRECTION = np.array([1.0, 2.0, 2.0]) / 3.0


def kernel_decay(radii, K_time: int = 8, mu: float = 1.0, method: str = "radial", p: float = 2.0,
                 derivative: bool = False, direction=_DIRECTION) -> DecayReport:
    """Fit ``|| Gamma(x, .) ||_{L_p(T)}`` (or of its gradient) along a ray."""
    e = np.asarray(direction, float)
    e = e / np.linalg.norm(e)
    pts = np.outer(np.asarray(radii, float), e)
    res = gamma_perp_eval(pts, K_time, mu, method, delta=min(DEFAULT_DELTA, float(np.min(radii))), gradient=derivative)
    fns = res.gradients if derivative else res.values
    norms = [_time_norm(f, p) for f in fns]
    return decay_fit(radii, norms)


def steady_decay(radii, support: float = 1.0, h: float = 0.125, mu: float = 1.0, force=(1.0, 0.0, 0.0),
                 n_dirs: int = 26) -> dict:
    """Sup over a shell of directions of ``|u|``, ``|grad u|`` and ``|p|`` per radius, with fits."""
    f = bump_force(force, support, h)
    dirs = _shell_directions(n_dirs)
    r = np.asarray(radii, float)
    pts = (r[:, None, None] * dirs[None, :, :]).reshape(-1, 3)
    sol = steady_convolve(f, mu, targets=pts)
    nd = dirs.shape[0]
    u = np.linalg.norm(sol.u, axis=-1).reshape(len(r), nd).max(axis=1)
    g = np.linalg.norm(sol.grad_u.reshape(-1, 9), axis=-1).reshape(len(r), nd).max(axis=1)
    p = np.abs(sol.p).reshape(len(r), nd).max(axis=1)
    return {"u": decay_fit(r, u), "grad_u": decay_fit(r, g), "p": decay_fit(r, p)}


def _shell_directions(n: int) -> np.ndarray:
    """Deterministic near-uniform directions (Fibonacci sphere)."""
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    phi = math.pi * (3 - math.sqrt(5)) * i
    s = np.sqrt(1 - z**2)
    return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=-1)
