"""Randomized R-bound estimation and multiplier-norm probes.

For a family of matrices ``T`` the R-bound is the smallest ``C`` with

    || sum_k r_k T_k f_k ||_{L_p}  <=  C || sum_k r_k f_k ||_{L_p}

over all finite selections, where ``r_k`` are independent random signs.
All estimates here are lower bounds obtained by probing; none is certified.
"""
from __future__ import annotations

import csv
import itertools
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import accel
from .torus import from_coeffs, norm as torus_norm, NormSpec

EXACT_SIGN_LIMIT = 1024
ROUNDOFF_FLOOR = 1e-13  # relative; equal norms must not fail on rounding
MC_SIGN_DRAWS = 4096


@dataclass(frozen=True, eq=False)
class OperatorFamily:
    ops: np.ndarray  # (n_ops, rows, cols)
    label: str = ""

    def __post_init__(self):
        ops = np.asarray(self.ops, dtype=complex)
        if ops.ndim == 2:
            ops = ops[None]
        if ops.ndim != 3 or ops.shape[0] < 1:
            raise ValueError("an operator family needs at least one matrix of uniform shape")
        object.__setattr__(self, "ops", ops)

    @classmethod
    def from_list(cls, mats, label: str = "") -> "OperatorFamily":
        shapes = {np.shape(m) for m in mats}
        if len(shapes) != 1:
            raise ValueError(f"operators have differing shapes {sorted(shapes)}")
        return cls(np.stack([np.asarray(m, dtype=complex) for m in mats]), label)

    @property
    def n_ops(self) -> int:
        return self.ops.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.ops.shape[1:]

    def max_operator_norm(self) -> float:
        return float(max(np.linalg.norm(T, 2) for T in self.ops))


@dataclass
class RboundEstimate:
    value: float
    n_trials: int
    n_max: int
    p_exponent: float
    stderr: float
    seed: int
    exact_signs: bool = True

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "stderr": self.stderr,
            "n_trials": self.n_trials,
            "n_max": self.n_max,
            "p": self.p_exponent,
            "seed": self.seed,
        }


@dataclass
class MultiplierProbe:
    """Symbol ``M`` of a Fourier multiplier, evaluated on reals or integers."""

    symbol_eval: Callable
    derivative_eval: Optional[Callable] = None
    band_limit: int = 16
    label: str = ""

    def matrix(self, t) -> np.ndarray:
        return np.atleast_2d(np.asarray(self.symbol_eval(t), dtype=complex))

    def derivative(self, t: float) -> np.ndarray:
        if self.derivative_eval is not None:
            return np.atleast_2d(np.asarray(self.derivative_eval(t), dtype=complex))
        h = 1e-5 * (1.0 + abs(t))
        return (self.matrix(t + h) - self.matrix(t - h)) / (2.0 * h)


def sign_patterns(n: int, rng: np.random.Generator | None = None, draws: int = MC_SIGN_DRAWS):
    """All ``2**n`` sign vectors when feasible, otherwise ``draws`` random ones."""
    if 2**n <= EXACT_SIGN_LIMIT:
        bits = (np.arange(2**n)[:, None] >> np.arange(n)[None, :]) & 1
        return 1.0 - 2.0 * bits, True
    rng = rng or np.random.default_rng(0)
    return rng.choice([-1.0, 1.0], size=(draws, n)), False


def random_unit_vectors(rng: np.random.Generator, shape, dim: int) -> np.ndarray:
    v = rng.normal(size=(*shape, dim)) + 1j * rng.normal(size=(*shape, dim))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _ratios(ops: np.ndarray, sel: np.ndarray, vecs: np.ndarray, signs: np.ndarray, p: float) -> np.ndarray:
    TX = np.einsum("bkij,bkj->bki", ops[sel], vecs)
    num = accel.rademacher_norms(TX, signs, p)
    den = accel.rademacher_norms(vecs, signs, p)
    if np.any(den == 0):
        raise ValueError("degenerate probe: Rademacher average of the test vectors vanishes")
    return num / den


def _sign_stderr(ops, sel, vecs, p, rng, batches: int = 8) -> float:
    """Spread of the ratio for one probe over independent sign batches."""
    n = sel.shape[0]
    vals = []
    for _ in range(batches):
        signs = rng.choice([-1.0, 1.0], size=(MC_SIGN_DRAWS // batches, n))
        vals.append(_ratios(ops, sel[None], vecs[None], signs, p)[0])
    return float(np.std(vals, ddof=1) / math.sqrt(batches))


def estimate_rbound(
    fam: OperatorFamily,
    n_trials: int = 200,
    n_max: int = 4,
    p: float = 2.0,
    test_vector_seed: int = 0,
    test_vectors=None,
) -> RboundEstimate:
    """Monte-Carlo lower estimate of the R-bound of ``fam``.

    For each sum length ``n <= n_max`` the ratio of Rademacher averages is
    maximized over ``n_trials`` random (operator selection, test vector)
    probes; if the number of distinct probes is at most ``n_trials`` they are
    all enumerated.  Rademacher averages are exact when ``2**n <= 1024``.
    With ``test_vectors=None`` the probes are random unit vectors plus the
    top right singular vector of each operator, so the result is never
    below the largest operator norm.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    if p < 1:
        raise ValueError("the Rademacher exponent must satisfy p >= 1")
    rng = np.random.default_rng(test_vector_seed)
    ops = fam.ops
    cols = fam.shape[1]
    pool = None if test_vectors is None else np.asarray(test_vectors, dtype=complex).reshape(-1, cols)
    best, best_probe, all_exact = -np.inf, None, True

    if pool is None:
        _, _, vh = np.linalg.svd(ops)
        sel = np.arange(fam.n_ops)[:, None]
        vecs = np.conj(vh[:, 0, :])[:, None, :]
        signs, _ = sign_patterns(1)
        r = _ratios(ops, sel, vecs, signs, p)
        best = float(r.max())
        best_probe = (sel[r.argmax()], vecs[r.argmax()], signs, True)

    for n in range(1, n_max + 1):
        signs, exact = sign_patterns(n, rng)
        all_exact &= exact
        if pool is not None and math.comb(fam.n_ops * len(pool) + n - 1, n) <= n_trials:
            sel, vecs = _enumerate_multisets(fam.n_ops, pool, n)
        else:
            sel = rng.integers(fam.n_ops, size=(n_trials, n))
            if pool is None:
                vecs = random_unit_vectors(rng, (n_trials, n), cols)
            else:
                vecs = pool[rng.integers(len(pool), size=(n_trials, n))]
        r = _ratios(ops, sel, vecs, signs, p)
        i = int(np.argmax(r))
        if r[i] > best:
            best = float(r[i])
            best_probe = (sel[i], vecs[i], signs, exact)

    stderr = 0.0
    if not best_probe[3]:
        stderr = _sign_stderr(ops, best_probe[0], best_probe[1], p, np.random.default_rng(test_vector_seed + 1))
    return RboundEstimate(best, n_trials, n_max, float(p), stderr, test_vector_seed, all_exact)


def _enumerate_multisets(n_ops: int, pool: np.ndarray, n: int):
    pairs = [(a, b) for a in range(n_ops) for b in range(len(pool))]
    combos = np.array(list(itertools.combinations_with_replacement(range(len(pairs)), n)), dtype=int)
    pair_arr = np.array(pairs, dtype=int)
    chosen = pair_arr[combos]  # (C, n, 2)
    return chosen[..., 0], pool[chosen[..., 1]]


def brute_force_rbound(fam: OperatorFamily, n: int, test_vectors, p: float = 2.0) -> float:
    """Exact maximum of the R-bound ratio over a finite probe set.

    Enumerates every sum length ``1..n``, every operator selection, every
    tuple of test vectors and every sign pattern.  The ratio is invariant
    under permuting summands, so multisets of (operator, vector) pairs
    suffice.
    """
    if n > 8 or fam.n_ops > 4:
        raise ValueError("brute-force enumeration limited to n <= 8 and at most 4 operators")
    pool = np.asarray(test_vectors, dtype=complex).reshape(-1, fam.shape[1])
    best = 0.0
    for m in range(1, n + 1):
        if math.comb(fam.n_ops * len(pool) + m - 1, m) > 2_000_000:
            raise ValueError("probe set too large for exhaustive enumeration")
        sel, vecs = _enumerate_multisets(fam.n_ops, pool, m)
        bits = (np.arange(2**m)[:, None] >> np.arange(m)[None, :]) & 1
        best = max(best, float(_ratios(fam.ops, sel, vecs, 1.0 - 2.0 * bits, p).max()))
    return best


def read_family_csv(path, label: str | None = None) -> OperatorFamily:
    """Read rows ``op_index, i, j, re, im`` into an operator family."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no operator entries")
    idx = np.array([[int(r["op_index"]), int(r["i"]), int(r["j"])] for r in rows])
    vals = np.array([complex(float(r["re"]), float(r["im"])) for r in rows])
    ops = np.zeros(tuple(idx.max(axis=0) + 1), dtype=complex)
    ops[idx[:, 0], idx[:, 1], idx[:, 2]] = vals
    return OperatorFamily(ops, label or os.path.basename(str(path)))


def write_family_csv(fam: OperatorFamily, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["op_index", "i", "j", "re", "im"])
        for a, T in enumerate(fam.ops):
            for i in range(T.shape[0]):
                for j in range(T.shape[1]):
                    w.writerow([a, i, j, repr(float(T[i, j].real)), repr(float(T[i, j].imag))])


# ---------------------------------------------------------------------------
# Fourier multipliers on the torus and on the line


def _torus_symbol(probe: MultiplierProbe, K: int) -> np.ndarray:
    return np.stack([probe.matrix(k) for k in range(-K, K + 1)])


@dataclass
class MultiplierNormEstimate:
    value: float
    random_values: list = field(default_factory=list)


def _multiplier_norm_torus(probe: MultiplierProbe, p: float, n_probe_functions: int, seed: int,
                           K: int | None = None) -> MultiplierNormEstimate:
    K = probe.band_limit if K is None else K
    sym = _torus_symbol(probe, K)
    d_out, d_in = sym.shape[1:]
    n_quad = max(64, 8 * (2 * K + 1))
    spec = NormSpec(p=p)

    def ratio(coeffs):
        f = from_coeffs(coeffs, n_time=n_quad)
        out = from_coeffs(np.einsum("kij,kj->ki", sym, coeffs), n_time=n_quad)
        return torus_norm(out, spec) / torus_norm(f, spec)

    best = 0.0
    _, _, vh = np.linalg.svd(sym)
    for row in range(2 * K + 1):
        c = np.zeros((2 * K + 1, d_in), dtype=complex)
        c[row] = np.conj(vh[row, 0])
        best = max(best, ratio(c))
    rng = np.random.default_rng(seed)
    rand_vals = []
    for _ in range(n_probe_functions):
        c = rng.normal(size=(2 * K + 1, d_in)) + 1j * rng.normal(size=(2 * K + 1, d_in))
        rand_vals.append(ratio(c))
    return MultiplierNormEstimate(max([best] + rand_vals), rand_vals)


def estimate_multiplier_norm_torus(probe: MultiplierProbe, p: float = 2.0, n_probe_functions: int = 32,
                                   seed: int = 0) -> float:
    """Lower estimate of the L_p(T) norm of ``f -> F^{-1}[m F f]``.

    Probes are single modes along the top singular vector of each ``m(k)``
    (which include the constant function) and random bandlimited functions.
    For ``p = 2`` the single-mode probes already attain ``max_k ||m(k)||``.
    """
    return _multiplier_norm_torus(probe, p, n_probe_functions, seed).value


def _bump(t: np.ndarray, width: float) -> np.ndarray:
    x = 2.0 * t / width
    out = np.zeros_like(t)
    inside = np.abs(x) < 1
    out[inside] = np.exp(-1.0 / (1.0 - x[inside] ** 2))
    return out


def _line_symbol(probe: MultiplierProbe, sigma: np.ndarray) -> np.ndarray:
    return np.stack([probe.matrix(s) for s in sigma])


def _lp_line(vals: np.ndarray, dt: float, p: float) -> float:
    pointwise = np.linalg.norm(vals, axis=1)
    return float((np.sum(pointwise**p) * dt) ** (1.0 / p))


def estimate_multiplier_norm_line(
    probe: MultiplierProbe,
    p: float = 2.0,
    window: float = 64.0 * np.pi,
    support: float | None = None,
    n_grid: int = 4096,
    n_random: int = 16,
    seed: int = 0,
) -> float:
    """Lower estimate of the L_p(R) norm of ``op_R[M]``.

    ``op_R[M]`` is discretized on a periodic window of length ``window``;
    probes are smooth bumps of width ``support`` (default ``window/8``)
    modulated to the frequencies where ``||M||`` is largest, plus random
    modulated bumps.
    """
    support = window / 8.0 if support is None else support
    dt = window / n_grid
    t = (np.arange(n_grid) - n_grid // 2) * dt
    sigma = 2.0 * np.pi * np.fft.fftfreq(n_grid, d=dt)
    sym = _line_symbol(probe, sigma)
    d_in = sym.shape[2]
    envelope = _bump(t, support)

    def ratio(f):
        out = np.fft.ifft(np.einsum("sij,sj->si", sym, np.fft.fft(f, axis=0)), axis=0)
        return _lp_line(out, dt, p) / _lp_line(f, dt, p)

    norms = np.linalg.norm(sym, ord=2, axis=(1, 2))
    order = np.argsort(-norms, kind="stable")
    centers = list(sigma[order[:8]])
    centers += [float(k) for k in range(-probe.band_limit, probe.band_limit + 1)]
    best = 0.0
    for s0 in centers:
        _, _, vh = np.linalg.svd(probe.matrix(s0))
        f = (envelope * np.exp(1j * s0 * t))[:, None] * np.conj(vh[0])[None, :]
        best = max(best, ratio(f))
    rng = np.random.default_rng(seed)
    band = max(1.0, float(np.max(np.abs(centers))))
    for _ in range(n_random):
        n_waves = 4
        freqs = rng.uniform(-band, band, size=n_waves)
        amps = rng.normal(size=(n_waves, d_in)) + 1j * rng.normal(size=(n_waves, d_in))
        f = envelope[:, None] * (np.exp(1j * np.outer(t, freqs)) @ amps)
        best = max(best, ratio(f))
    return best


@dataclass
class TransferenceReport:
    torus_norm: float
    line_norm: float
    tolerance: float
    margin: float
    satisfied: bool
    label: str = ""

    def as_dict(self) -> dict:
        return {
            "label": self.label,
            "torus_norm": self.torus_norm,
            "line_norm": self.line_norm,
            "tolerance": self.tolerance,
            "margin": self.margin,
            "satisfied": self.satisfied,
        }


def check_transference(probe: MultiplierProbe, p: float = 2.0, n_repeats: int = 4, seed: int = 0,
                       window: float = 64.0 * np.pi) -> TransferenceReport:
    """Compare torus and line multiplier-norm estimates.

    The tolerance combines the spread of each estimate over ``n_repeats``
    independent probe seeds with the resolution bias of the line estimate,
    gauged by rerunning it with half the probe support (for a bias of order
    ``support**-2`` the difference is three times the bias).  ``margin`` is
    ``line + 3*tolerance - torus`` and the check passes when it is >= 0.
    The tolerance never drops below ``ROUNDOFF_FLOOR`` times the estimates.
    """
    tor = [estimate_multiplier_norm_torus(probe, p, seed=seed + r) for r in range(n_repeats)]
    line = [estimate_multiplier_norm_line(probe, p, window=window, seed=seed + r) for r in range(n_repeats)]
    coarse = estimate_multiplier_norm_line(probe, p, window=window, support=window / 16.0, seed=seed)
    torus_val, line_val = max(tor), max(line)
    resolution = abs(line_val - coarse) / 3.0
    tol = math.sqrt(np.std(tor) ** 2 + np.std(line) ** 2 + resolution**2)
    tol = max(tol, ROUNDOFF_FLOOR * max(torus_val, line_val))
    margin = line_val + 3.0 * tol - torus_val
    return TransferenceReport(torus_val, line_val, tol, margin, bool(margin >= 0), probe.label)


@dataclass
class MikhlinReport:
    r0_M: RboundEstimate
    r0_tMprime: RboundEstimate
    r0_M_half_grid: float
    non_uniform: bool

    def as_dict(self) -> dict:
        return {
            "r0_M": self.r0_M.as_dict(),
            "r0_tMprime": self.r0_tMprime.as_dict(),
            "r0_M_half_grid": self.r0_M_half_grid,
            "non_uniform": self.non_uniform,
        }


def mikhlin_surrogate(probe: MultiplierProbe, sigma_grid, n_trials: int = 200, n_max: int = 4, p: float = 2.0,
                      seed: int = 0, growth_threshold: float = 1.5) -> MikhlinReport:
    """R-bound estimates for ``{M(t)}`` and ``{t M'(t)}`` over ``sigma_grid``.

    The family ``{M(t)}`` is re-estimated on the half-radius subgrid; growth
    by more than ``growth_threshold`` flags a non-uniform bound.
    """
    grid = np.asarray(sigma_grid, dtype=float)
    grid = grid[grid != 0]
    fam_M = OperatorFamily.from_list([probe.matrix(t) for t in grid], "M")
    fam_D = OperatorFamily.from_list([t * probe.derivative(t) for t in grid], "tM'")
    est_M = estimate_rbound(fam_M, n_trials, n_max, p, seed)
    est_D = estimate_rbound(fam_D, n_trials, n_max, p, seed)
    half = grid[np.abs(grid) <= 0.5 * np.abs(grid).max()]
    half_val = est_M.value
    if half.size:
        half_val = estimate_rbound(OperatorFamily.from_list([probe.matrix(t) for t in half]), n_trials, n_max, p,
                                   seed).value
    non_uniform = bool(est_M.value > growth_threshold * max(half_val, 1e-300))
    return MikhlinReport(est_M, est_D, half_val, non_uniform)


def standard_corpus(band_limit: int = 16) -> list[MultiplierProbe]:
    """Ten smooth bounded multipliers used for transference checks."""

    def diag(*fs):
        return lambda t: np.diag([f(t) for f in fs])

    def rot(t):
        c, s = np.cos(t), np.sin(t)
        return np.array([[c, -s], [s, c]])

    items = [
        ("identity", lambda t: 1.0),
        ("gaussian", lambda t: np.exp(-t * t)),
        ("diag_1_t2", diag(lambda t: 1.0, lambda t: t * t / (1 + t * t))),
        ("it_over_1pit", lambda t: 1j * t / (1 + 1j * t)),
        ("lorentzian", lambda t: 1.0 / (1 + t * t)),
        ("damped_cos", lambda t: np.cos(t) * np.exp(-t * t / 4)),
        ("tanh", lambda t: np.tanh(t)),
        ("rotation", rot),
        ("shifted_gaussian", lambda t: np.exp(-((t - 0.5) ** 2))),
        ("heat_resolvent", lambda t: np.array([[1 / (1 + 1j * t), 0], [t / (1 + t * t), 1j * t / (2 + 1j * t)]])),
    ]
    return [MultiplierProbe(f, band_limit=band_limit, label=name) for name, f in items]
