"""Fourier analysis on the time torus R/2piZ.

Functions on the torus are sampled on the uniform grid ``t_j = 2*pi*j/n``
and carry their Fourier coefficients for ``k = -K..K`` with
``K = (n - 1) // 2``.  The integral over the torus is the normalized Haar
measure ``(1/2pi) * int_0^{2pi}``, so that

    u(t) = sum_k c_k exp(i k t),    c_k = (1/2pi) int u(t) exp(-i k t) dt.
"""
from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass
from enum import Enum

import numpy as np


class NormKind(str, Enum):
    BOCHNER = "bochner"
    SOBOLEV_INTEGER = "sobolev_integer"
    SOBOLEV_FRACTIONAL = "sobolev_fractional"


@dataclass(frozen=True)
class NormSpec:
    """Integrability exponent ``p`` plus a differentiation order."""

    p: float = 2.0
    order: float = 0.0
    kind: NormKind = NormKind.BOCHNER

    def __post_init__(self):
        object.__setattr__(self, "kind", NormKind(self.kind))
        if not self.p > 1:
            raise ValueError(f"norm exponent must satisfy p > 1, got {self.p}")
        if np.isinf(self.p):
            raise ValueError("p = inf is not supported")
        if self.order < 0:
            raise ValueError("differentiation order must be nonnegative")
        if self.kind is NormKind.SOBOLEV_INTEGER and float(self.order) != int(self.order):
            raise ValueError("sobolev_integer norms need an integer order")


def time_grid(n_time: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(n_time) / n_time


def mode_numbers(K: int) -> np.ndarray:
    return np.arange(-K, K + 1)


@dataclass(frozen=True, eq=False)
class TorusFunction:
    """A bandlimited 2pi-periodic function with values in C^dim.

    ``samples`` has shape ``(n_time, dim)`` and ``coeffs`` has shape
    ``(2K+1, dim)`` with row ``K + k`` holding mode ``k``.  Build instances
    with :func:`analyze` or :func:`from_coeffs` rather than directly.
    """

    samples: np.ndarray
    coeffs: np.ndarray
    real_valued: bool = False

    def __post_init__(self):
        for arr in (self.samples, self.coeffs):
            arr.setflags(write=False)

    @property
    def n_time(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    @property
    def K(self) -> int:
        return (self.coeffs.shape[0] - 1) // 2

    @property
    def modes(self) -> np.ndarray:
        return mode_numbers(self.K)

    def coeff(self, k: int) -> np.ndarray:
        if abs(k) > self.K:
            return np.zeros(self.dim, dtype=complex)
        return self.coeffs[self.K + k]

    def __add__(self, other: "TorusFunction") -> "TorusFunction":
        K = max(self.K, other.K)
        return from_coeffs(
            _pad(self.coeffs, K) + _pad(other.coeffs, K),
            n_time=max(self.n_time, other.n_time),
            real_valued=self.real_valued and other.real_valued,
        )

    def __sub__(self, other: "TorusFunction") -> "TorusFunction":
        return self + other.scale(-1.0)

    def scale(self, s: complex) -> "TorusFunction":
        real = self.real_valued and np.isreal(s)
        return from_coeffs(s * self.coeffs, n_time=self.n_time, real_valued=real)


def _pad(coeffs: np.ndarray, K: int) -> np.ndarray:
    k_old = (coeffs.shape[0] - 1) // 2
    if k_old == K:
        return coeffs
    out = np.zeros((2 * K + 1, coeffs.shape[1]), dtype=complex)
    out[K - k_old : K + k_old + 1] = coeffs
    return out


def _as_matrix(samples) -> np.ndarray:
    arr = np.asarray(samples)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError("samples must be a vector or an (n_time, dim) matrix")
    return arr


def _hermitian_ok(coeffs: np.ndarray) -> bool:
    return bool(np.array_equal(coeffs, np.conj(coeffs[::-1])))


def _synthesize_grid(coeffs: np.ndarray, n_time: int, real: bool) -> np.ndarray:
    K = (coeffs.shape[0] - 1) // 2
    if n_time < 2 * K + 1:
        raise ValueError(f"n_time={n_time} cannot carry {2 * K + 1} modes")
    spec = np.zeros((n_time, coeffs.shape[1]), dtype=complex)
    spec[: K + 1] = coeffs[K:]
    if K:
        spec[-K:] = coeffs[:K]
    vals = np.fft.ifft(spec, axis=0) * n_time
    if real:
        vals = vals.real.astype(complex)
    return vals


def analyze(samples) -> TorusFunction:
    """Fourier coefficients of uniformly sampled data.

    The trapezoidal rule on the uniform periodic grid is exact for
    trigonometric polynomials of degree ``K``; an unpaired Nyquist mode
    (even ``n_time``) is dropped.  Real input yields exactly Hermitian
    coefficients.
    """
    arr = _as_matrix(samples)
    n = arr.shape[0]
    if n < 1 or arr.shape[1] < 1:
        raise ValueError("cannot analyze an empty sample array")
    K = (n - 1) // 2
    real = bool(np.isrealobj(arr) or not np.any(arr.imag))
    if real:
        half = np.fft.rfft(arr.real, axis=0)[: K + 1] / n
        coeffs = np.concatenate([np.conj(half[1:][::-1]), half], axis=0)
    else:
        full = np.fft.fft(arr, axis=0) / n
        coeffs = np.concatenate([full[n - K :], full[: K + 1]], axis=0) if K else full[:1]
    coeffs = np.ascontiguousarray(coeffs, dtype=complex)
    return TorusFunction(_synthesize_grid(coeffs, n, real), coeffs, real)


def from_coeffs(coeffs, n_time: int | None = None, real_valued: bool | None = None) -> TorusFunction:
    """Build a function from coefficients ordered ``k = -K..K``."""
    c = _as_matrix(np.asarray(coeffs, dtype=complex))
    if c.shape[0] % 2 != 1:
        raise ValueError("coefficient array needs an odd number of rows (k = -K..K)")
    K = (c.shape[0] - 1) // 2
    if n_time is None:
        n_time = 2 * K + 1
    if real_valued is None:
        real_valued = _hermitian_ok(c)
    elif real_valued:
        # enforce exact symmetry
        c = 0.5 * (c + np.conj(c[::-1]))
    c = np.ascontiguousarray(c)
    return TorusFunction(_synthesize_grid(c, n_time, real_valued), c, bool(real_valued))


def synthesize(f: TorusFunction, t) -> np.ndarray:
    """Evaluate ``sum_k c_k exp(ikt)``; returns shape ``(dim,)`` or ``(len(t), dim)``."""
    t_arr = np.asarray(t, dtype=float)
    phase = np.exp(1j * np.multiply.outer(np.atleast_1d(t_arr), f.modes))
    vals = phase @ f.coeffs
    if f.real_valued:
        vals = vals.real.astype(complex)
    return vals[0] if t_arr.ndim == 0 else vals


def resample(f: TorusFunction, n_time: int) -> TorusFunction:
    return TorusFunction(_synthesize_grid(f.coeffs, n_time, f.real_valued), f.coeffs, f.real_valued)


def apply_symbol(f: TorusFunction, symbol: np.ndarray) -> TorusFunction:
    """Multiply mode ``k`` by ``symbol[K + k]`` (scalar or ``(dim_out, dim)`` matrix)."""
    s = np.asarray(symbol)
    if s.ndim == 1:
        c = s[:, None] * f.coeffs
    else:
        c = np.einsum("kij,kj->ki", s, f.coeffs)
    real = f.real_valued and _hermitian_ok(s.reshape(s.shape[0], -1))
    return from_coeffs(c, n_time=f.n_time, real_valued=real)


def derivative(f: TorusFunction, order: int = 1) -> TorusFunction:
    # repeated products keep the symbol exactly Hermitian
    sym = np.ones(2 * f.K + 1, dtype=complex)
    for _ in range(order):
        sym = sym * (1j * f.modes)
    return apply_symbol(f, sym)


def _bochner(f: TorusFunction, p: float, n_quad: int | None) -> float:
    vals = f.samples if n_quad is None or n_quad == f.n_time else resample(f, n_quad).samples
    pointwise = np.linalg.norm(vals, axis=1)
    if p == 2:
        return float(np.sqrt(np.mean(pointwise**2)))
    return float(np.mean(pointwise**p) ** (1.0 / p))


def norm(f: TorusFunction, spec: NormSpec = NormSpec(), n_quad: int | None = None) -> float:
    """Bochner or Sobolev norm in time with the Euclidean norm on values.

    ``n_quad`` refines the time quadrature (zero padding); by default the
    sample grid of ``f`` is used.
    """
    if spec.kind is NormKind.BOCHNER:
        return _bochner(f, spec.p, n_quad)
    if spec.kind is NormKind.SOBOLEV_INTEGER:
        terms = [_bochner(derivative(f, ell), spec.p, n_quad) ** spec.p for ell in range(int(spec.order) + 1)]
        return float(sum(terms) ** (1.0 / spec.p))
    weight = (1.0 + np.abs(f.modes)) ** spec.order
    return _bochner(apply_symbol(f, weight), spec.p, n_quad)


def split_stationary_oscillatory(f: TorusFunction) -> tuple[np.ndarray, TorusFunction]:
    """Return the time mean and the mean-free remainder."""
    mean = f.coeff(0).copy()
    c = f.coeffs.copy()
    c[f.K] = 0.0
    return mean, from_coeffs(c, n_time=f.n_time, real_valued=f.real_valued)


def parseval_gap(f: TorusFunction) -> float:
    """Relative mismatch between the time-domain energy and sum |c_k|^2."""
    energy_t = float(np.mean(np.sum(np.abs(f.samples) ** 2, axis=1)))
    energy_k = float(np.sum(np.abs(f.coeffs) ** 2))
    scale = max(energy_t, energy_k)
    return abs(energy_t - energy_k) / scale if scale else 0.0


def write_csv(f: TorusFunction, dest) -> None:
    """Write coefficients as rows ``k, component, re, im``."""
    own = isinstance(dest, (str, os.PathLike))
    fh = open(dest, "w", newline="", encoding="utf-8") if own else dest
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "component", "re", "im"])
        for row, k in enumerate(f.modes):
            for comp in range(f.dim):
                c = f.coeffs[row, comp]
                w.writerow([int(k), comp, repr(float(c.real)), repr(float(c.imag))])
    finally:
        if own:
            fh.close()


def read_csv(src, n_time: int | None = None) -> TorusFunction:
    text = open(src, encoding="utf-8").read() if isinstance(src, (str, os.PathLike)) else src.read()
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows:
        raise ValueError("empty coefficient table")
    ks = [int(r["k"]) for r in rows]
    comps = [int(r["component"]) for r in rows]
    K = max(abs(k) for k in ks)
    c = np.zeros((2 * K + 1, max(comps) + 1), dtype=complex)
    for k, comp, r in zip(ks, comps, rows):
        c[K + k, comp] = complex(float(r["re"]), float(r["im"]))
    return from_coeffs(c, n_time=n_time)
