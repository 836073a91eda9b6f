"""Coordinate-transform algebra for a time-periodic domain motion.

A motion ``x = y + phi(y, t)`` with inverse ``y = x + psi(x, t)`` induces
coefficient fields on the reference grid:

* ``a0[l]   = d psi_l / dt``  evaluated at ``x = y + phi(y, t)``,
* ``A[l, j] = d psi_l / dx_j`` evaluated there (so ``(I + A)(I + grad phi) = I``),
* ``J = det(I + grad phi) = 1 + J0``,
* ``Bm1 = M^{-1} - I`` with ``M = (1 + J0) I + J A``.

``M`` is the matrix taking the pulled-back velocity ``v`` to the field
``w = M v`` whose y-divergence equals ``J`` times the x-divergence.  Index
conventions are standard row-major throughout: ``A @ v`` means
``sum_j a_lj v_j`` and x-gradients are ``(I + A)^T grad_y``.

Spatial derivatives on the grid are periodic second-order central
differences; time derivatives are spectral.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

FD_STEP = 1e-5
SMALLNESS_FD_STEP = 1e-3


class SmallnessViolation(ValueError):
    pass


class GridMismatch(ValueError):
    pass


@dataclass(frozen=True)
class MotionGrid:
    """Uniform periodic grid on ``[0, length)^3`` and ``n_time`` uniform times."""

    n: int
    n_time: int = 1
    length: float = 2 * np.pi

    @property
    def h(self) -> float:
        return self.length / self.n

    def axis(self) -> np.ndarray:
        return self.h * np.arange(self.n)

    def points(self) -> np.ndarray:
        a = self.axis()
        return np.stack(np.meshgrid(a, a, a, indexing="ij"), axis=-1)

    def times(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n_time) / self.n_time


@dataclass
class MotionField:
    """Displacement ``phi(y, t)`` with optional analytic derivatives.

    ``phi`` maps points of shape ``(..., 3)`` and a scalar time to
    displacements of the same shape.  ``grad`` returns ``[..., l, j] =
    d phi_l / dy_j`` and ``dt`` the time derivative; missing callables fall
    back to central differences.
    """

    phi: Callable[[np.ndarray, float], np.ndarray]
    grad: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    dt: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    label: str = "custom"
    volume_preserving: bool = False

    def __call__(self, y, t):
        return np.asarray(self.phi(np.asarray(y, float), float(t)), float)

    def gradient(self, y, t) -> np.ndarray:
        y = np.asarray(y, float)
        if self.grad is not None:
            return np.asarray(self.grad(y, float(t)), float)
        return _fd_jacobian(lambda z: self(z, t), y, FD_STEP * (1 + np.abs(y).max(initial=0.0)))

    def time_derivative(self, y, t) -> np.ndarray:
        if self.dt is not None:
            return np.asarray(self.dt(np.asarray(y, float), float(t)), float)
        s = FD_STEP * (1 + abs(t))
        return _central(lambda tau: self(y, tau), t, s)

    def check_periodic(self, grid: MotionGrid, tol: float = 1e-12) -> float:
        """Max of ``|phi(y, t + 2pi) - phi(y, t)|`` and ``|phi(y, 0)|`` on the grid."""
        y = grid.points()
        worst = float(np.abs(self(y, 0.0)).max())
        for t in grid.times():
            worst = max(worst, float(np.abs(self(y, t + 2 * np.pi) - self(y, t)).max()))
        return worst


def _central(f, t, s):
    """Fourth-order central difference of ``f`` at ``t``."""
    return (-f(t + 2 * s) + 8 * f(t + s) - 8 * f(t - s) + f(t - 2 * s)) / (12 * s)


def _fd_jacobian(f, y, s) -> np.ndarray:
    cols = []
    for j in range(3):
        e = np.zeros(3)
        e[j] = 1.0
        cols.append(_central(lambda tau: f(y + tau * e), 0.0, s))
    return np.stack(cols, axis=-1)


# ---------------------------------------------------------------------------
# built-in motions


def _zero(y, t):
    return np.zeros_like(y)


def builtin_motion(name: str, eps: float = 0.1, direction=(1.0, 0.0, 0.0)) -> MotionField:
    """``none``, ``translation``, ``shear``, ``breathing`` or ``wave-shear``."""
    if name == "none":
        return MotionField(_zero, lambda y, t: np.zeros(y.shape + (3,)), _zero, "none", True)
    if name == "translation":
        c = np.asarray(direction, float)
        c = c / np.linalg.norm(c)
        return MotionField(
            lambda y, t: np.broadcast_to(eps * np.sin(t) * c, y.shape).copy(),
            lambda y, t: np.zeros(y.shape + (3,)),
            lambda y, t: np.broadcast_to(eps * np.cos(t) * c, y.shape).copy(),
            "translation",
            True,
        )
    if name == "shear":
        def phi(y, t):
            out = np.zeros_like(y)
            out[..., 0] = eps * np.sin(t) * y[..., 1]
            return out

        def grad(y, t):
            g = np.zeros(y.shape + (3,))
            g[..., 0, 1] = eps * np.sin(t)
            return g

        def dt(y, t):
            out = np.zeros_like(y)
            out[..., 0] = eps * np.cos(t) * y[..., 1]
            return out

        return MotionField(phi, grad, dt, "shear", True)
    if name == "breathing":
        def shape(y):
            s, c = np.sin(y), np.cos(y)
            return np.stack([s[..., 0] * c[..., 1], s[..., 1] * c[..., 2], s[..., 2] * c[..., 0]], axis=-1)

        def grad(y, t):
            s, c = np.sin(y), np.cos(y)
            g = np.zeros(y.shape + (3,))
            g[..., 0, 0] = c[..., 0] * c[..., 1]
            g[..., 0, 1] = -s[..., 0] * s[..., 1]
            g[..., 1, 1] = c[..., 1] * c[..., 2]
            g[..., 1, 2] = -s[..., 1] * s[..., 2]
            g[..., 2, 2] = c[..., 2] * c[..., 0]
            g[..., 2, 0] = -s[..., 2] * s[..., 0]
            return eps * np.sin(t) * g

        return MotionField(lambda y, t: eps * np.sin(t) * shape(y), grad,
                           lambda y, t: eps * np.cos(t) * shape(y), "breathing", False)
    if name == "wave-shear":
        # x1 = y1 + eps sin t sin y2: triangular Jacobian with unit determinant
        def phi(y, t):
            out = np.zeros_like(y)
            out[..., 0] = eps * np.sin(t) * np.sin(y[..., 1])
            return out

        def grad(y, t):
            g = np.zeros(y.shape + (3,))
            g[..., 0, 1] = eps * np.sin(t) * np.cos(y[..., 1])
            return g

        def dt(y, t):
            out = np.zeros_like(y)
            out[..., 0] = eps * np.cos(t) * np.sin(y[..., 1])
            return out

        return MotionField(phi, grad, dt, "wave-shear", True)
    raise ValueError(f"unknown motion {name!r}")


BUILTIN_MOTIONS = ("none", "translation", "shear", "breathing", "wave-shear")


# ---------------------------------------------------------------------------
# inverse map and coefficients


def _grad_sup(motion: MotionField, y, t) -> float:
    g = motion.gradient(y, t)
    return float(np.max(np.linalg.norm(g, ord=2, axis=(-2, -1)))) if g.size else 0.0


def invert_map(motion: MotionField, x, t: float, tol: float = 1e-15, max_iter: int = 500,
               check: bool = True) -> np.ndarray:
    """Solve ``x = y + phi(y, t)`` by the iteration ``y <- x - phi(y, t)``.

    Converges when ``phi(., t)`` is a contraction.  The loop stops once the
    update falls below ``tol * (1 + |x|)`` or stops shrinking.
    """
    x = np.asarray(x, float)
    if check:
        lip = _grad_sup(motion, x, t)
        if lip >= 1.0:
            raise SmallnessViolation(f"||grad phi|| = {lip:.3g} >= 1, the inverse map is not a contraction")
    scale = 1.0 + np.abs(x).max(initial=0.0)
    y = x.copy()
    prev = np.inf
    for _ in range(max_iter):
        y_new = x - motion(y, t)
        step = float(np.abs(y_new - y).max(initial=0.0))
        y = y_new
        if step <= tol * scale:
            return y
        if step >= prev and step < 1e-12 * scale:
            return y
        if step > 1e3 * scale:
            break
        prev = min(prev, step)
    if prev < 1e-10 * scale:
        return y
    raise SmallnessViolation("fixed-point iteration for the inverse map did not converge")


@dataclass
class TransformCoefficients:
    """Coefficient grids with shapes ``(n_time, n, n, n, ...)``."""

    grid: MotionGrid
    a0: np.ndarray
    A: np.ndarray
    J: np.ndarray
    J0: np.ndarray
    Bm1: np.ndarray
    grad_phi: np.ndarray
    epsilon0_norms: dict = field(default_factory=dict)

    @property
    def M(self) -> np.ndarray:
        eye = np.eye(3)
        return (1 + self.J0)[..., None, None] * eye + self.J[..., None, None] * self.A

    def chain_rule_error(self) -> float:
        eye = np.eye(3)
        return float(np.abs((eye + self.A) @ (eye + self.grad_phi) - eye).max())

    def inverse_identity_error(self) -> float:
        eye = np.eye(3)
        return float(np.abs(self.M @ (eye + self.Bm1) - eye).max())

    def jacobian_error(self) -> float:
        return float(np.abs(self.J - np.linalg.det(np.eye(3) + self.grad_phi)).max())


def compute_coefficients(motion: MotionField, grid: MotionGrid, times=None, with_norms: bool = False,
                         cond_limit: float = 1e12, method: str = "analytic") -> TransformCoefficients:
    """Coefficient grids at each time of ``grid`` (or the given ``times``).

    ``method="analytic"`` uses ``I + A = (I + grad phi)^{-1}`` and
    ``a0 = -(I + grad phi)^{-1} dphi/dt``.  ``method="inverse-fd"`` instead
    differentiates the numerically inverted map with fourth-order
    differences, which gives an independent check of the identities.
    """
    if method not in ("analytic", "inverse-fd"):
        raise ValueError(f"unknown method {method!r}")
    y = grid.points()
    ts = grid.times() if times is None else np.atleast_1d(np.asarray(times, float))
    shape = (len(ts),) + y.shape[:-1]
    a0 = np.zeros(shape + (3,))
    A = np.zeros(shape + (3, 3))
    G = np.zeros(shape + (3, 3))
    eye = np.eye(3)
    for i, t in enumerate(ts):
        lip = _grad_sup(motion, y, t)
        if lip >= 1.0:
            raise SmallnessViolation(f"||grad phi|| = {lip:.3g} >= 1 at t = {t:.4g}")
        G[i] = motion.gradient(y, t)
        if method == "analytic":
            A[i] = np.linalg.inv(eye + G[i]) - eye
            a0[i] = -_apply_mat(eye + A[i], motion.time_derivative(y, t))
            continue
        x = y + motion(y, t)
        s = FD_STEP * (1 + np.abs(x).max())
        inv = lambda z, tau=t: invert_map(motion, z, tau, check=False)  # noqa: E731
        for j in range(3):
            e = np.zeros(3)
            e[j] = s
            d = (-inv(x + 2 * e) + 8 * inv(x + e) - 8 * inv(x - e) + inv(x - 2 * e)) / (12 * s)
            A[i, ..., :, j] = d
        A[i, ..., np.arange(3), np.arange(3)] -= 1.0
        st = FD_STEP * (1 + abs(t))
        yt = [invert_map(motion, x, t + k * st, check=False) for k in (-2, -1, 1, 2)]
        a0[i] = (yt[0] - 8 * yt[1] + 8 * yt[2] - yt[3]) / (12 * st)
    J = np.linalg.det(np.eye(3) + G)
    J0 = J - 1.0
    M = (1 + J0)[..., None, None] * np.eye(3) + J[..., None, None] * A
    cond = np.linalg.cond(M.reshape(-1, 3, 3))
    if not np.all(cond < cond_limit):
        raise np.linalg.LinAlgError("the matrix (1 + J0) I + J A is singular at some grid point")
    Bm1 = np.linalg.inv(M) - np.eye(3)
    tc = TransformCoefficients(grid, a0, A, J, J0, Bm1, G)
    if with_norms:
        tc.epsilon0_norms = motion_norms(motion, grid, ts)
    return tc


# ---------------------------------------------------------------------------
# finite differences on the periodic grid


def _d1(f: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (np.roll(f, -1, axis) - np.roll(f, 1, axis)) / (2 * h)


def _d2(f: np.ndarray, a: int, b: int, h: float) -> np.ndarray:
    if a == b:
        return (np.roll(f, -1, a) - 2 * f + np.roll(f, 1, a)) / h**2
    return _d1(_d1(f, a, h), b, h)


def _dt_spectral(f: np.ndarray) -> np.ndarray:
    n = f.shape[0]
    k = np.fft.fftfreq(n, 1.0 / n)
    if n % 2 == 0:
        k[n // 2] = 0.0
    sym = (1j * k).reshape((n,) + (1,) * (f.ndim - 1))
    return np.fft.ifft(sym * np.fft.fft(f, axis=0), axis=0).real


def _check_grid(coeffs: TransformCoefficients, *fields):
    base = coeffs.J.shape
    for f in fields:
        if f.shape[: len(base)] != base:
            raise GridMismatch(f"field grid {f.shape[:len(base)]} does not match coefficients {base}")


def _d1_4(f: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (-np.roll(f, -2, axis) + 8 * np.roll(f, -1, axis) - 8 * np.roll(f, 1, axis) + np.roll(f, 2, axis)) / (12 * h)


def _first_difference(order: int):
    if order not in (2, 4):
        raise ValueError("difference order must be 2 or 4")
    return _d1 if order == 2 else _d1_4


def x_divergence(coeffs: TransformCoefficients, v: np.ndarray, fd_order: int = 2) -> np.ndarray:
    """``div_x u`` for ``u(x) = v(y)`` via the chain rule."""
    d1 = _first_difference(fd_order)
    h = coeffs.grid.h
    lead = v.ndim - 4
    eye = np.eye(3)
    out = np.zeros(v.shape[:-1])
    for j in range(3):
        for ell in range(3):
            c = eye[ell, j] + coeffs.A[..., ell, j]
            out += c * d1(v[..., j], lead + ell, h)
    return out


def y_divergence(f: np.ndarray, h: float, fd_order: int = 2) -> np.ndarray:
    d1 = _first_difference(fd_order)
    lead = f.ndim - 4
    return sum(d1(f[..., ell], lead + ell, h) for ell in range(3))


def check_divergence_identity(coeffs: TransformCoefficients, v: np.ndarray, fd_order: int = 4) -> float:
    """Max-norm gap between ``J div_x u`` and ``div_y (M v)``.

    Both sides use periodic central differences of the given order; the
    gap is pure truncation error because the Piola identity holds
    pointwise.
    """
    _check_grid(coeffs, v)
    lhs = coeffs.J * x_divergence(coeffs, v, fd_order)
    w = np.einsum("...lj,...j->...l", coeffs.M, v)
    rhs = y_divergence(w, coeffs.grid.h, fd_order)
    return float(np.abs(lhs - rhs).max())


def divergence_convergence(motion: MotionField, v_fn, levels=(8, 16, 32, 64), t: float = 1.0,
                           fd_order: int = 4) -> dict:
    """Residual of the divergence identity on successively halved grids."""
    rows = []
    for n in levels:
        grid = MotionGrid(n)
        tc = compute_coefficients(motion, grid, times=[t])
        v = v_fn(grid.points())[None]
        rows.append((n, grid.h, check_divergence_identity(tc, v, fd_order)))
    orders = [float(np.log(rows[i - 1][2] / rows[i][2]) / np.log(rows[i - 1][1] / rows[i][1]))
              if rows[i][2] > 0 and rows[i - 1][2] > 0 else float("inf") for i in range(1, len(rows))]
    return {"levels": rows, "orders": orders}


# ---------------------------------------------------------------------------
# transformed operators


def _apply_mat(Mx: np.ndarray, w: np.ndarray) -> np.ndarray:
    return np.einsum("...lj,...j->...l", Mx, w)


def assemble_L(coeffs: TransformCoefficients, w: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Linear perturbation operator of the transformed Stokes system.

    ``w`` has shape ``(n_time, n, n, n, 3)`` on the uniform time grid and
    ``q`` shape ``(n_time, n, n, n)``.  The terms are, in order: the time
    derivative of ``Bm1 w``, transport by ``a0``, the Laplacian of
    ``Bm1 w``, the two second-order coefficient terms, the first-order
    coefficient term and the pressure correction.
    """
    _check_grid(coeffs, w, q[..., None])
    h = coeffs.grid.h
    A, a0, B = coeffs.A, coeffs.a0, coeffs.Bm1
    sp = 1  # first spatial axis
    Bw = _apply_mat(B, w)
    vt = w + Bw
    out = -_dt_spectral(Bw)
    for ell in range(3):
        out -= a0[..., ell, None] * _d1(vt, sp + ell, h)
        out += _d2(Bw, sp + ell, sp + ell, h)
    for ell in range(3):
        for j in range(3):
            out += (A[..., ell, j] + A[..., j, ell])[..., None] * _d2(vt, sp + ell, sp + j, h)
    AAt = np.einsum("...lj,...mj->...lm", A, A)
    for ell in range(3):
        for m in range(3):
            out += AAt[..., ell, m, None] * _d2(vt, sp + ell, sp + m, h)
    for m in range(3):
        c = sum(_d1(A[..., m, ell], sp + ell, h) for ell in range(3))
        for ell in range(3):
            for j in range(3):
                c = c + A[..., ell, j] * _d1(A[..., m, j], sp + ell, h)
        out += c[..., None] * _d1(vt, sp + m, h)
    gq = np.stack([_d1(q, sp + ell, h) for ell in range(3)], axis=-1)
    out -= np.einsum("...lj,...l->...j", A, gq)
    return out


def assemble_N(coeffs: TransformCoefficients, w: np.ndarray) -> np.ndarray:
    """``(v . grad_x) v`` for ``v = (I + Bm1) w`` with ``grad_x = (I + A)^T grad_y``."""
    _check_grid(coeffs, w)
    h = coeffs.grid.h
    lead = w.ndim - 4
    vt = w + _apply_mat(coeffs.Bm1, w)
    dv = [_d1(vt, lead + ell, h) for ell in range(3)]
    eye = np.eye(3)
    out = np.zeros_like(w)
    for j in range(3):
        for ell in range(3):
            c = (eye[ell, j] + coeffs.A[..., ell, j]) * vt[..., j]
            out += c[..., None] * dv[ell]
    return out


def convective(w: np.ndarray, h: float) -> np.ndarray:
    """Plain ``(w . grad) w`` with the same differences."""
    lead = w.ndim - 4
    return sum(w[..., ell, None] * _d1(w, lead + ell, h) for ell in range(3))


# ---------------------------------------------------------------------------
# smallness


def _derivative_sups(f, y, order: int, s: float) -> list:
    """Sup over the grid of every mixed partial of ``f`` up to ``order``."""
    sups = [float(np.linalg.norm(f(y), axis=-1).max())]
    for m in range(1, order + 1):
        for alpha in itertools.combinations_with_replacement(range(3), m):
            acc = 0.0
            for signs in itertools.product((-1.0, 1.0), repeat=m):
                shift = np.zeros(3)
                for ax, sg in zip(alpha, signs):
                    shift[ax] += sg * s
                acc = acc + np.prod(signs) * f(y + shift)
            d = acc / (2 * s) ** m
            sups.append(float(np.linalg.norm(d, axis=-1).max()))
    return sups


def motion_norms(motion: MotionField, grid: MotionGrid, times=None) -> dict:
    """Discrete ``sup_t ||phi||_{H^3_inf}`` and ``sup_t ||d_t phi||_{H^1_inf}``."""
    y = grid.points()
    ts = grid.times() if times is None else times
    s = SMALLNESS_FD_STEP
    n_phi = 0.0
    n_dt = 0.0
    for t in ts:
        n_phi = max(n_phi, sum(_derivative_sups(lambda z: motion(z, t), y, 3, s)))
        n_dt = max(n_dt, sum(_derivative_sups(lambda z: motion.time_derivative(z, t), y, 1, s)))
    return {"phi_H3_inf": n_phi, "dt_phi_H1_inf": n_dt, "total": n_phi + n_dt}


@dataclass
class SmallnessReport:
    norms: dict
    coefficient_bounds: dict
    epsilon0: float
    satisfied: bool

    def as_dict(self) -> dict:
        return {
            "norms": {k: float(v) for k, v in sorted(self.norms.items())},
            "coefficient_bounds": {k: float(v) for k, v in sorted(self.coefficient_bounds.items())},
            "epsilon0": float(self.epsilon0),
            "satisfied": bool(self.satisfied),
        }


def _h2_sup(f: np.ndarray, h: float) -> float:
    """Largest ``sum_{|alpha| <= 2} sup |d^alpha f_c|`` over the trailing components ``c``."""
    flat = f.reshape(f.shape[:4] + (-1,))
    if flat.shape[1] < 3:
        return float(np.abs(flat).max())
    best = 0.0
    for c in range(flat.shape[-1]):
        g = flat[..., c]
        total = float(np.abs(g).max())
        for a, da in enumerate(np.gradient(g, h, axis=(1, 2, 3))):
            total += float(np.abs(da).max())
            for dab in np.gradient(da, h, axis=tuple(range(1 + a, 4))) if a < 2 else [np.gradient(da, h, axis=3)]:
                total += float(np.abs(dab).max())
        best = max(best, total)
    return best


def smallness_report(motion: MotionField, epsilon0: float, grid: MotionGrid | None = None) -> SmallnessReport:
    """Measured norms of the motion and of the induced coefficients."""
    grid = grid or MotionGrid(8, n_time=8)
    norms = motion_norms(motion, grid)
    bounds = {}
    try:
        tc = compute_coefficients(motion, grid)
        h = grid.h
        bounds = {
            "A_H2_inf": _h2_sup(tc.A, h),
            "dt_A_inf": float(np.abs(_dt_spectral(tc.A)).max()) if grid.n_time > 2 else 0.0,
            "a0_inf": float(np.abs(tc.a0).max()),
            "J0_H2_inf": _h2_sup(tc.J0[..., None], h),
            "dt_J0_inf": float(np.abs(_dt_spectral(tc.J0)).max()) if grid.n_time > 2 else 0.0,
            "Bm1_H2_inf": _h2_sup(tc.Bm1, h),
            "dt_Bm1_inf": float(np.abs(_dt_spectral(tc.Bm1)).max()) if grid.n_time > 2 else 0.0,
        }
        if epsilon0 > 0:
            bounds.update({f"{k}_over_eps0": v / epsilon0 for k, v in list(bounds.items())})
    except SmallnessViolation:
        bounds = {"inverse_map_failed": 1.0}
    return SmallnessReport(norms, bounds, float(epsilon0), bool(norms["total"] < epsilon0))
