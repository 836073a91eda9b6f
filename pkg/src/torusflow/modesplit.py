"""Time-periodic solves of ``du/dt + A u = F`` by splitting time modes.

Modes ``|k| <= k0`` (with ``k0 = floor(gamma0)``) go to caller-supplied
per-mode solvers, which may live on restricted subspaces (e.g. mean-free
data when ``A`` is singular).  Modes ``|k| > k0`` are solved through the
resolvent ``(ik + A)^{-1}`` weighted by a smooth cutoff that vanishes for
``|sigma| <= gamma0`` and equals one for ``|sigma| >= (gamma0 + k0 + 1)/2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np

from .torus import NormSpec, TorusFunction, derivative, from_coeffs, norm


class ModeSplitError(ValueError):
    pass


class SingularModeError(ModeSplitError):
    def __init__(self, k: int, cond: float):
        super().__init__(f"ik + A is numerically singular at retained mode k={k} (cond={cond:.3e})")
        self.k = k
        self.cond = cond


def smooth_step(x):
    """``exp(-1/x) / (exp(-1/x) + exp(-1/(1-x)))`` clipped to [0, 1]."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return a / (a + b)


@dataclass(frozen=True)
class CutoffProfile:
    gamma0: float

    def __post_init__(self):
        if self.gamma0 < 0:
            raise ValueError("gamma0 must be nonnegative")

    @property
    def k0(self) -> int:
        return math.floor(self.gamma0)

    @property
    def ramp_end(self) -> float:
        return 0.5 * (self.gamma0 + self.k0 + 1)

    def evaluate(self, sigma):
        s = np.abs(np.asarray(sigma, dtype=float))
        x = (s - self.gamma0) / (self.ramp_end - self.gamma0)
        out = np.where(s <= self.gamma0, 0.0, np.where(s >= self.ramp_end, 1.0, smooth_step(x)))
        return float(out) if out.ndim == 0 else out


def cutoff_eval(profile: CutoffProfile, sigma) -> float:
    return profile.evaluate(sigma)


@dataclass
class ResolventProvider:
    """Solver for ``i sigma w + A w = f`` valid on part of the real line."""

    solve: Callable[[float, np.ndarray], np.ndarray]
    valid_region: str = "all_sigma"
    gamma0: float = 0.0

    def covers(self, sigma: float) -> bool:
        return self.valid_region == "all_sigma" or abs(sigma) >= self.gamma0


@dataclass
class ModeSplitConfig:
    gamma0: float
    K: int
    low_mode_solvers: Mapping[int, Callable[[np.ndarray], np.ndarray]] = field(default_factory=dict)
    high_solver: Optional[ResolventProvider] = None
    cond_limit: float = 1e12

    def __post_init__(self):
        if self.K < self.k0:
            raise ModeSplitError(f"truncation K={self.K} is below k0={self.k0}")
        missing = [k for k in range(-self.k0, self.k0 + 1) if k not in self.low_mode_solvers]
        if missing:
            raise ModeSplitError(f"no low-mode solver for k in {missing}")

    @property
    def cutoff(self) -> CutoffProfile:
        return CutoffProfile(self.gamma0)

    @property
    def k0(self) -> int:
        return math.floor(self.gamma0)


@dataclass
class ModeSplitSolution:
    u: TorusFunction
    u_low: dict
    u_high: TorusFunction
    truncation_mass: float
    max_relative_residual: float
    condition_numbers: dict


def _apply(A, x: np.ndarray) -> np.ndarray:
    """Apply a dense (2-D) or diagonal (1-D) operator to the last axis."""
    A = np.asarray(A)
    return A * x if A.ndim == 1 else x @ A.T


def _resolvent_solve(A, k: int, f: np.ndarray, cond_limit: float) -> tuple[np.ndarray, float]:
    A = np.asarray(A)
    if A.ndim == 1:
        d = 1j * k + A
        mags = np.abs(d)
        cond = float(mags.max() / mags.min()) if mags.min() > 0 else np.inf
        if not cond < cond_limit:
            raise SingularModeError(k, cond)
        return f / d, cond
    M = 1j * k * np.eye(A.shape[0]) + A
    cond = float(np.linalg.cond(M))
    if not cond < cond_limit:
        raise SingularModeError(k, cond)
    return np.linalg.solve(M, f), cond


def pseudoinverse_solver(A, k: int = 0, rcond: float = 1e-12):
    """Least-squares solver for ``(ik + A) u = f`` restricted to the range.

    Returns the minimum-norm solution, which solves the equation exactly
    whenever ``f`` lies in the range of ``ik + A``.
    """
    A = np.asarray(A)
    if A.ndim == 1:
        d = 1j * k + A
        tol = rcond * np.abs(d).max()
        inv = np.where(np.abs(d) > tol, 1.0 / np.where(np.abs(d) > tol, d, 1.0), 0.0)
        return lambda f: inv * np.asarray(f)
    pinv = np.linalg.pinv(1j * k * np.eye(A.shape[0]) + A, rcond=rcond)
    return lambda f: pinv @ np.asarray(f)


def resolvent_solver(A, k: int):
    return lambda f: _resolvent_solve(A, k, np.asarray(f, dtype=complex), np.inf)[0]


def solve_periodic_closed(A, F: TorusFunction, config: ModeSplitConfig) -> ModeSplitSolution:
    """Solve ``du/dt + A u = F`` on the torus, mode by mode.

    ``A`` is a dense matrix or a vector holding a diagonal operator; it may
    be ``None`` when ``config.high_solver`` is given.  Modes of ``F`` above
    ``config.K`` are dropped and their l2 mass is reported.
    """
    K = config.K
    k0 = config.k0
    cutoff = config.cutoff
    keep = min(K, F.K)
    c_low = np.zeros((2 * K + 1, F.dim), dtype=complex)
    c_high = np.zeros((2 * K + 1, F.dim), dtype=complex)
    u_low: dict[int, np.ndarray] = {}
    conds: dict[int, float] = {}

    for k in range(-k0, k0 + 1):
        uk = np.asarray(config.low_mode_solvers[k](F.coeff(k)), dtype=complex)
        u_low[k] = uk
        c_low[K + k] = uk

    high = [k for k in range(-keep, keep + 1) if abs(k) > k0]
    diag = A is not None and np.asarray(A).ndim == 1 and config.high_solver is None
    if diag and high:
        ks = np.array(high)
        d = 1j * ks[:, None] + np.asarray(A)[None, :]
        mags = np.abs(d)
        bad = np.argmax(mags.min(axis=1) == 0) if np.any(mags.min(axis=1) == 0) else None
        cond_k = np.where(mags.min(axis=1) > 0, mags.max(axis=1) / np.maximum(mags.min(axis=1), 1e-300), np.inf)
        if bad is not None or np.any(cond_k >= config.cond_limit):
            i = int(np.argmax(cond_k))
            raise SingularModeError(int(ks[i]), float(cond_k[i]))
        phi = cutoff.evaluate(ks)[:, None]
        c_high[K + ks] = phi * F.coeffs[F.K + ks] / d
        conds = {int(k): float(c) for k, c in zip(ks, cond_k)}
    else:
        for k in high:
            fk = F.coeff(k)
            if config.high_solver is not None:
                if not config.high_solver.covers(k):
                    raise ModeSplitError(f"resolvent provider does not cover sigma={k}")
                wk = np.asarray(config.high_solver.solve(float(k), fk), dtype=complex)
            else:
                wk, conds[k] = _resolvent_solve(A, k, fk, config.cond_limit)
            c_high[K + k] = cutoff.evaluate(k) * wk

    tail = 0.0
    if F.K > K:
        mask = np.abs(F.modes) > K
        tail = float(np.sqrt(np.sum(np.abs(F.coeffs[mask]) ** 2)))

    n_time = max(F.n_time, 2 * K + 1)
    real = F.real_valued
    u_high = from_coeffs(c_high, n_time=n_time, real_valued=real and _hermitian(c_high))
    u = from_coeffs(c_low + c_high, n_time=n_time, real_valued=real and _hermitian(c_low + c_high))

    resid = 0.0
    if A is not None:
        for k in range(-keep, keep + 1):
            fk = F.coeff(k)
            nf = np.linalg.norm(fk)
            if nf == 0:
                continue
            uk = u.coeff(k)
            rk = np.linalg.norm(1j * k * uk + _apply(A, uk) - fk) / nf
            resid = max(resid, float(rk))
    return ModeSplitSolution(u, u_low, u_high, tail, resid, conds)


def _hermitian(c: np.ndarray) -> bool:
    return bool(np.allclose(c, np.conj(c[::-1]), rtol=0, atol=1e-14 * max(1.0, np.abs(c).max())))


def mode_residuals(A, u: TorusFunction, F: TorusFunction) -> np.ndarray:
    """Relative residual ``||ik u_k + A u_k - F_k|| / ||F_k||`` per mode of ``F``."""
    out = np.zeros(2 * F.K + 1)
    for row, k in enumerate(F.modes):
        fk = F.coeffs[row]
        nf = np.linalg.norm(fk)
        uk = u.coeff(int(k))
        r = np.linalg.norm(1j * k * uk + _apply(A, uk) - fk)
        out[row] = r / nf if nf else r
    return out


def maximal_regularity_ratio(u: TorusFunction, F: TorusFunction, A, p: float = 2.0) -> float:
    """``(||du/dt|| + ||A u|| + ||u||) / ||F||`` in L_p(T) with Euclidean values."""
    spec = NormSpec(p=p)
    nF = norm(F, spec)
    if nF == 0:
        raise ModeSplitError("maximal regularity ratio needs nonzero forcing")
    Au = from_coeffs(_apply(A, u.coeffs), n_time=u.n_time)
    return (norm(derivative(u), spec) + norm(Au, spec) + norm(u, spec)) / nF


# ---------------------------------------------------------------------------
# heat equation on the periodic box, diagonalized by the spatial FFT


def box_laplacian_symbol(N: int) -> np.ndarray:
    """Eigenvalues ``|xi|^2`` of ``-Laplace`` on [0, 2pi)^3, flattened in FFT order."""
    xi = np.fft.fftfreq(N, 1.0 / N)
    return (xi[:, None, None] ** 2 + xi[None, :, None] ** 2 + xi[None, None, :] ** 2).ravel()


def heat_config(N: int, K: int, gamma0: float = 0.5) -> tuple[np.ndarray, ModeSplitConfig]:
    """Heat operator and a mode-split configuration with pseudo-inverse low modes."""
    A = box_laplacian_symbol(N)
    k0 = math.floor(gamma0)
    solvers = {k: pseudoinverse_solver(A, k) for k in range(-k0, k0 + 1)}
    return A, ModeSplitConfig(gamma0=gamma0, K=K, low_mode_solvers=solvers)


def random_heat_forcing(rng: np.random.Generator, A: np.ndarray, K: int, decay: float = 2.0) -> TorusFunction:
    """Unit-norm Gaussian forcing with amplitude ``(1 + k^2 + |xi|^4)^(-decay/4)``.

    The (k=0, xi=0) mode is zero so the stationary problem is solvable.
    """
    k = np.arange(-K, K + 1)[:, None]
    amp = (1.0 + k**2 + A[None, :] ** 2) ** (-decay / 4.0)
    c = (rng.normal(size=amp.shape) + 1j * rng.normal(size=amp.shape)) * amp
    c[K, A == 0] = 0.0
    c /= np.sqrt(np.sum(np.abs(c) ** 2))
    return from_coeffs(c, real_valued=False)


def heat_maxreg_trials(N: int, K: int, n_trials: int, seed: int, gamma0: float = 0.5, p: float = 2.0,
                       decay: float = 2.0) -> np.ndarray:
    A, config = heat_config(N, K, gamma0)
    rng = np.random.default_rng(seed)
    out = np.empty(n_trials)
    for i in range(n_trials):
        F = random_heat_forcing(rng, A, K, decay)
        sol = solve_periodic_closed(A, F, config)
        out[i] = maximal_regularity_ratio(sol.u, F, A, p)
    return out
