"""Time-periodic Stokes and Navier-Stokes on the periodic box [0, 2pi)^3.

Fields are stored as space-time Fourier coefficients with shape
``(2K+1, N, N, N, 3)``: row ``K + k`` holds time mode ``k`` and the spatial
axes use FFT ordering.  On even grids the unpaired Nyquist wavenumber is
kept at zero so that the reality symmetry ``u(-k,-xi) = conj u(k,xi)`` is
exact on the stored index set.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.fft as sfft

from . import accel
from .modesplit import ModeSplitConfig, ResolventProvider, solve_periodic_closed
from .torus import from_coeffs


class StokesError(ValueError):
    pass


class MeanForceIncompatibility(StokesError):
    def __init__(self, where: str = "k=0, xi=0"):
        super().__init__(f"stationary mean-force incompatibility: forcing has a nonzero mean at ({where})")


def wavenumbers(N: int) -> np.ndarray:
    """Integer wavenumbers in FFT order with shape ``(N, N, N, 3)``."""
    k1 = np.rint(np.fft.fftfreq(N, 1.0 / N)).astype(int)
    g = np.meshgrid(k1, k1, k1, indexing="ij")
    return np.stack(g, axis=-1)


def retained_mask(N: int) -> np.ndarray:
    """True except on the unpaired Nyquist planes of an even grid."""
    xi = wavenumbers(N)
    if N % 2:
        return np.ones((N, N, N), bool)
    return np.all(np.abs(xi) < N // 2, axis=-1)


def dealias_mask(N: int) -> np.ndarray:
    """Two-thirds rule: keep ``|xi_i| <= (N - 1) // 3`` on every axis."""
    return np.all(np.abs(wavenumbers(N)) <= (N - 1) // 3, axis=-1)


def _reflect(c: np.ndarray, n_space_axes: int = 3) -> np.ndarray:
    """Map index ``(k, xi)`` to ``(-k, -xi)``."""
    out = c[::-1]
    for ax in range(1, 1 + n_space_axes):
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return out


def _symmetrize(c: np.ndarray) -> np.ndarray:
    return 0.5 * (c + np.conj(_reflect(c)))


@dataclass(frozen=True, eq=False)
class SpectralField:
    coeffs: np.ndarray
    mu: float = 1.0
    divergence_free: bool = False
    real_valued: bool = True

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 5 or c.shape[-1] != 3 or not (c.shape[1] == c.shape[2] == c.shape[3]) or c.shape[0] % 2 != 1:
            raise StokesError(f"velocity coefficients need shape (2K+1, N, N, N, 3), got {c.shape}")
        if not self.mu > 0:
            raise StokesError("viscosity must be positive")
        c = c * retained_mask(c.shape[1])[None, ..., None]
        if self.real_valued:
            c = _symmetrize(c)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def N_space(self) -> int:
        return self.coeffs.shape[1]

    @property
    def K_time(self) -> int:
        return (self.coeffs.shape[0] - 1) // 2

    @classmethod
    def zeros(cls, N: int, K: int, mu: float = 1.0) -> "SpectralField":
        return cls(np.zeros((2 * K + 1, N, N, N, 3), complex), mu, True, True)

    @classmethod
    def from_samples(cls, samples, mu: float = 1.0, divergence_free: bool = False) -> "SpectralField":
        """Build from real samples of shape ``(n_time, N, N, N, 3)`` on the uniform grids."""
        s = np.asarray(samples)
        nt = s.shape[0]
        K = (nt - 1) // 2
        full = sfft.fftn(s, axes=(0, 1, 2, 3), workers=accel.num_threads()) / (nt * s[0, ..., 0].size)
        c = np.concatenate([full[nt - K :], full[: K + 1]], axis=0) if K else full[:1]
        return cls(c, mu, divergence_free, bool(np.isrealobj(s)))

    def with_coeffs(self, c, divergence_free: bool | None = None) -> "SpectralField":
        div = self.divergence_free if divergence_free is None else divergence_free
        return replace(self, coeffs=c, divergence_free=div)

    def divergence_error(self) -> float:
        """Max over modes of ``|xi . u(k,xi)| / |u(k,xi)|``."""
        xi = wavenumbers(self.N_space)
        d = np.abs(np.einsum("...i,k...i->k...", xi, self.coeffs))
        m = np.linalg.norm(self.coeffs, axis=-1)
        mask = m > 0
        return float(np.max(d[mask] / m[mask])) if np.any(mask) else 0.0

    def l2(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def to_samples(self, n_time: int | None = None) -> np.ndarray:
        return _synthesize(self.coeffs, n_time or 2 * self.K_time + 1, self.real_valued)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.coeffs + other.coeffs, self.mu,
                             self.divergence_free and other.divergence_free,
                             self.real_valued and other.real_valued)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return self + other.scale(-1.0)

    def scale(self, s: float) -> "SpectralField":
        return replace(self, coeffs=s * self.coeffs)


@dataclass(frozen=True, eq=False)
class PressureField:
    coeffs: np.ndarray
    real_valued: bool = True

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim != 4:
            raise StokesError("pressure coefficients need shape (2K+1, N, N, N)")
        c[:, 0, 0, 0] = 0.0
        if self.real_valued:
            c = _symmetrize(c)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, N: int, K: int) -> "PressureField":
        return cls(np.zeros((2 * K + 1, N, N, N), complex))

    def __sub__(self, other: "PressureField") -> "PressureField":
        return PressureField(self.coeffs - other.coeffs, self.real_valued and other.real_valued)


def _synthesize(c: np.ndarray, n_time: int, real: bool) -> np.ndarray:
    K = (c.shape[0] - 1) // 2
    if n_time < 2 * K + 1:
        raise StokesError("time grid too coarse for the stored modes")
    spec = np.zeros((n_time,) + c.shape[1:], complex)
    spec[: K + 1] = c[K:]
    if K:
        spec[-K:] = c[:K]
    vals = sfft.ifftn(spec, axes=(0, 1, 2, 3), workers=accel.num_threads()) * (n_time * np.prod(c.shape[1:4]))
    return vals.real if real else vals


def _analyze(vals: np.ndarray, K: int) -> np.ndarray:
    nt = vals.shape[0]
    full = sfft.fftn(vals, axes=(0, 1, 2, 3), workers=accel.num_threads()) / (nt * np.prod(vals.shape[1:4]))
    return np.concatenate([full[nt - K :], full[: K + 1]], axis=0) if K else full[:1]


# ---------------------------------------------------------------------------
# linear pieces


def _projector(N: int) -> np.ndarray:
    xi = wavenumbers(N).astype(float)
    n2 = np.sum(xi**2, axis=-1)
    n2[0, 0, 0] = 1.0
    P = np.eye(3) - xi[..., :, None] * xi[..., None, :] / n2[..., None, None]
    P[0, 0, 0] = np.eye(3)
    return P


def _project_coeffs(c: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,...j->...i", _projector(c.shape[-4]), c)


def leray_project(f: SpectralField) -> SpectralField:
    """Apply ``I - xi xi^T / |xi|^2`` at every ``xi != 0``; the mean passes through."""
    return f.with_coeffs(_project_coeffs(f.coeffs), divergence_free=True)


def pressure_from_forcing(f_hat: np.ndarray) -> np.ndarray:
    """``-i xi . f / |xi|^2`` with the mean pressure fixed to zero."""
    xi = wavenumbers(f_hat.shape[-2]).astype(float)
    n2 = np.sum(xi**2, axis=-1)
    n2[0, 0, 0] = 1.0
    p = -1j * np.einsum("...i,...i->...", xi, f_hat) / n2
    p[..., 0, 0, 0] = 0.0
    return p


def stokes_resolvent_mode(f_hat, lam: complex, mu: float, mean_tol: float = 1e-13):
    """Solve ``lam u - mu Lap u + grad p = f`` at one time frequency.

    ``f_hat`` has shape ``(N, N, N, 3)``.  Returns ``(u_hat, p_hat)``.
    """
    f_hat = np.asarray(f_hat, dtype=complex)
    N = f_hat.shape[0]
    xi = wavenumbers(N).astype(float)
    n2 = np.sum(xi**2, axis=-1)
    denom = mu * n2 + lam
    if np.any((denom == 0) & (n2 > 0)):
        raise StokesError(f"lam + mu|xi|^2 vanishes for lam={lam}")
    scale = max(1.0, float(np.abs(f_hat).max()))
    u = np.zeros_like(f_hat)
    nz = n2 > 0
    u[nz] = _project_coeffs(f_hat)[nz] / denom[nz][:, None]
    if lam != 0:
        u[0, 0, 0] = f_hat[0, 0, 0] / lam
    elif np.abs(f_hat[0, 0, 0]).max() > mean_tol * scale:
        raise MeanForceIncompatibility()
    u *= retained_mask(N)[..., None]
    p = pressure_from_forcing(f_hat) * retained_mask(N)
    return u, p


def stokes_residual(V: SpectralField, P: PressureField, F: SpectralField) -> float:
    """Discrete L2 norm of ``du/dt - mu Lap u + grad p - F`` (Parseval)."""
    r = _linear_part(V, P) - F.coeffs * retained_mask(V.N_space)[None, ..., None]
    return float(np.sqrt(np.sum(np.abs(r) ** 2)))


def _linear_part(V: SpectralField, P: PressureField) -> np.ndarray:
    K = V.K_time
    xi = wavenumbers(V.N_space).astype(float)
    n2 = np.sum(xi**2, axis=-1)
    k = np.arange(-K, K + 1)[:, None, None, None, None]
    return (1j * k + V.mu * n2[None, ..., None]) * V.coeffs + 1j * xi[None] * P.coeffs[..., None]


STOKES_GAMMA0 = 0.5


def solve_tp_stokes(F: SpectralField, mu: float | None = None) -> tuple[SpectralField, PressureField]:
    """Time-periodic Stokes solve by mode splitting.

    The stationary mode ``k = 0`` goes to the steady solver, which needs a
    mean-free force; every ``|k| >= 1`` goes through the cutoff path with
    ``gamma0 = 1/2``, where the cutoff equals one.
    """
    mu = F.mu if mu is None else float(mu)
    K, N = F.K_time, F.N_space
    shape = (N, N, N, 3)
    fc = F.coeffs

    def steady(f):
        return stokes_resolvent_mode(f.reshape(shape), 0.0, mu)[0].ravel()

    def oscillatory(sigma, f):
        return stokes_resolvent_mode(f.reshape(shape), 1j * sigma, mu)[0].ravel()

    config = ModeSplitConfig(
        gamma0=STOKES_GAMMA0,
        K=K,
        low_mode_solvers={0: steady},
        high_solver=ResolventProvider(oscillatory, "abs_sigma_ge_gamma0", STOKES_GAMMA0),
    )
    Ft = from_coeffs(fc.reshape(2 * K + 1, -1), real_valued=False)
    sol = solve_periodic_closed(None, Ft, config)
    vc = np.asarray(sol.u.coeffs).reshape(fc.shape)
    pc = pressure_from_forcing(fc) * retained_mask(N)
    V = SpectralField(vc, mu, True, F.real_valued)
    return V, PressureField(pc, F.real_valued)


# ---------------------------------------------------------------------------
# nonlinearity


def nonlinearity(V: SpectralField) -> SpectralField:
    """Pseudo-spectral ``(u . grad) u`` with two-thirds dealiasing in space.

    Time products are formed on a padded grid of ``3K + 1`` points, which
    resolves the quadratic term exactly in time.
    """
    K, N = V.K_time, V.N_space
    if not V.real_valued:
        raise StokesError("nonlinearity expects a real velocity field")
    mask = dealias_mask(N)
    c = V.coeffs * mask[None, ..., None]
    if not np.any(c):
        return SpectralField.zeros(N, K, V.mu)
    xi = wavenumbers(N).astype(float)
    nt = 3 * K + 1
    u = _synthesize(c, nt, True)
    # grad[..., i, j] = d_j u_i
    gc = 1j * c[..., :, None] * xi[None, ..., None, :]
    grad = _synthesize(gc.reshape(c.shape[:-1] + (9,)), nt, True).reshape(u.shape + (3,))
    prod = np.einsum("...j,...ij->...i", u, grad)
    out = _analyze(prod, K) * mask[None, ..., None]
    if V.divergence_free:
        # u.grad u = div(u u) has zero spatial mean; drop the rounding residue
        out[:, 0, 0, 0] = 0.0
    return SpectralField(out, V.mu, False, True)


# ---------------------------------------------------------------------------
# norms and Picard iteration


def e_norm(V: SpectralField, P: PressureField | None = None) -> float:
    """``||du/dt|| + ||u||_{H^2} + ||grad p||`` in L2 over time and space.

    The spatial H^2 norm is the spectral surrogate ``sum (1+|xi|^2)^2 |u|^2``.
    """
    K = V.K_time
    xi = wavenumbers(V.N_space).astype(float)
    n2 = np.sum(xi**2, axis=-1)
    k = np.arange(-K, K + 1)[:, None, None, None]
    a2 = np.sum(np.abs(V.coeffs) ** 2, axis=-1)
    dt = np.sqrt(np.sum(k**2 * a2))
    h2 = np.sqrt(np.sum((1 + n2[None]) ** 2 * a2))
    gp = 0.0 if P is None else np.sqrt(np.sum(n2[None] * np.abs(P.coeffs) ** 2))
    return float(dt + h2 + gp)


def maxreg_ratio(V: SpectralField, F: SpectralField) -> float:
    """``(||dV/dt|| + ||mu Lap V|| + ||V||) / ||F||`` in L2 over time and space."""
    nF = F.l2()
    if nF == 0:
        raise StokesError("ratio needs nonzero forcing")
    K = V.K_time
    n2 = np.sum(wavenumbers(V.N_space).astype(float) ** 2, axis=-1)
    k = np.arange(-K, K + 1)[:, None, None, None]
    a2 = np.sum(np.abs(V.coeffs) ** 2, axis=-1)
    return float((np.sqrt(np.sum(k**2 * a2)) + np.sqrt(np.sum((V.mu * n2) ** 2 * a2)) + np.sqrt(np.sum(a2))) / nF)


@dataclass
class PicardReport:
    iterates: list = field(default_factory=list)
    differences: list = field(default_factory=list)
    converged: bool = False
    final_residual: float = float("nan")
    relative_residual: float = float("nan")
    epsilon_used: float = 0.0

    @property
    def n_iter(self) -> int:
        return len(self.differences)

    @property
    def ratios(self) -> list:
        d = self.differences
        return [d[i] / d[i - 1] if d[i - 1] > 0 else 0.0 for i in range(1, len(d))]

    def as_dict(self) -> dict:
        return {
            "iterates": list(map(float, self.iterates)),
            "differences": list(map(float, self.differences)),
            "ratios": list(map(float, self.ratios)),
            "converged": bool(self.converged),
            "n_iter": self.n_iter,
            "final_residual": float(self.final_residual),
            "relative_residual": float(self.relative_residual),
            "epsilon_used": float(self.epsilon_used),
        }


def ns_residual(V: SpectralField, P: PressureField, F: SpectralField) -> float:
    """Discrete L2 norm of ``du/dt + u.grad u - mu Lap u + grad p - F``."""
    r = _linear_part(V, P) + nonlinearity(V).coeffs - F.coeffs * retained_mask(V.N_space)[None, ..., None]
    return float(np.sqrt(np.sum(np.abs(r) ** 2)))


def navier_stokes_picard(F: SpectralField, mu: float | None = None, tol: float = 1e-12, max_iter: int = 50,
                         blowup: float = 1e6):
    """Fixed-point iteration ``V <- S(F - N(V))`` from ``V = 0``.

    ``S`` is :func:`solve_tp_stokes` and ``N`` is :func:`nonlinearity`.  The
    loop stops when the E-norm of the update drops below ``tol``; failing
    to do so within ``max_iter`` steps, or growth by more than ``blowup``,
    yields a report with ``converged=False``.
    """
    mu = F.mu if mu is None else float(mu)
    F = replace(F, mu=mu)
    V = SpectralField.zeros(F.N_space, F.K_time, mu)
    P = PressureField.zeros(F.N_space, F.K_time)
    rep = PicardReport(epsilon_used=e_norm(F))
    for _ in range(max_iter):
        V_new, P_new = solve_tp_stokes(F - nonlinearity(V), mu)
        diff = e_norm(V_new - V, P_new - P)
        V, P = V_new, P_new
        rep.iterates.append(e_norm(V, P))
        rep.differences.append(diff)
        if not np.isfinite(diff) or diff > blowup * max(rep.differences[0], 1e-300):
            break
        if diff < tol:
            rep.converged = True
            break
    rep.final_residual = ns_residual(V, P, F)
    nF = F.l2()
    rep.relative_residual = rep.final_residual / nF if nF else rep.final_residual
    return V, P, rep


# ---------------------------------------------------------------------------
# manufactured solutions and random forcing


def random_solenoidal(N: int, K: int, n_modes: int, amplitude: float, rng: np.random.Generator,
                      mu: float = 1.0) -> SpectralField:
    """Real divergence-free field built from ``n_modes`` (k, xi) pairs inside the dealiased band."""
    cut = (N - 1) // 3
    c = np.zeros((2 * K + 1, N, N, N, 3), complex)
    picked = 0
    while picked < n_modes:
        xi = rng.integers(-cut, cut + 1, size=3)
        if not np.any(xi):
            continue
        k = int(rng.integers(-K, K + 1))
        v = rng.normal(size=3) + 1j * rng.normal(size=3)
        v -= xi * (xi @ v) / (xi @ xi)
        c[K + k, xi[0] % N, xi[1] % N, xi[2] % N] += v
        picked += 1
    c = _symmetrize(c)
    nrm = np.sqrt(np.sum(np.abs(c) ** 2))
    return SpectralField(amplitude * c / nrm, mu, True, True)


def random_pressure(N: int, K: int, n_modes: int, amplitude: float, rng: np.random.Generator) -> PressureField:
    cut = (N - 1) // 3
    c = np.zeros((2 * K + 1, N, N, N), complex)
    for _ in range(n_modes):
        xi = rng.integers(-cut, cut + 1, size=3)
        k = int(rng.integers(-K, K + 1))
        c[K + k, xi[0] % N, xi[1] % N, xi[2] % N] += rng.normal() + 1j * rng.normal()
    c[:, 0, 0, 0] = 0.0
    c = _symmetrize(c)
    nrm = np.sqrt(np.sum(np.abs(c) ** 2))
    return PressureField(amplitude * c / nrm if nrm else c)


def manufactured_forcing(V: SpectralField, P: PressureField) -> SpectralField:
    """``F = dV/dt + N(V) - mu Lap V + grad P`` with the discrete nonlinearity."""
    return SpectralField(_linear_part(V, P) + nonlinearity(V).coeffs, V.mu, False, True)


def random_forcing(N: int, K: int, rng: np.random.Generator, mu: float = 1.0, decay: float = 2.0) -> SpectralField:
    """Unit-L2 real forcing with amplitude ``(1 + k^2 + |xi|^4)^(-decay/4)``, mean-free at (0, 0)."""
    n2 = np.sum(wavenumbers(N).astype(float) ** 2, axis=-1)
    k = np.arange(-K, K + 1)[:, None, None, None, None]
    amp = (1.0 + k**2 + n2[None, ..., None] ** 2) ** (-decay / 4.0)
    shape = (2 * K + 1, N, N, N, 3)
    c = (rng.normal(size=shape) + 1j * rng.normal(size=shape)) * amp
    c[K, 0, 0, 0] = 0.0
    c = _symmetrize(c * retained_mask(N)[None, ..., None])
    return SpectralField(c / np.sqrt(np.sum(np.abs(c) ** 2)), mu, False, True)
