"""Low-level numerical building blocks shared by the integrators.

Fixed-step RK4 on a prescribed grid, re-projection onto SO(n), finite
difference stencils on (possibly non-uniform) grids, quadrature helpers and
the determinant-constrained orthogonal Procrustes fit.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

STENCIL = 5


class RollingError(Exception):
    """Base class for numeric failures raised by this package."""


class ChartDomainError(RollingError, ValueError):
    """A point left the chart domain of a manifold model."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class StepUnderflowError(RollingError):
    """Integration grid has a vanishing (or non-increasing) step."""


class RegularityError(RollingError, ValueError):
    """A curve is not regular enough for the requested construction."""

    def __init__(self, message, order=None, times=None):
        super().__init__(message)
        self.order = order
        self.times = np.asarray([] if times is None else times, dtype=float)


def wrap_angle(angle):
    """Representative of ``angle`` modulo 2*pi in (-pi, pi]."""
    a = np.mod(np.asarray(angle, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    a = np.where(a <= -np.pi, a + 2.0 * np.pi, a)
    return float(a) if np.ndim(a) == 0 else a


def check_grid(t):
    t = np.asarray(t, dtype=float)
    if t.ndim != 1:
        raise ValueError("time grid must be one-dimensional")
    if t.size >= 2:
        h = np.diff(t)
        span = abs(t[-1] - t[0])
        if np.any(h <= 0) or np.any(h < 1e-14 * max(span, 1.0)):
            raise StepUnderflowError("time grid must be strictly increasing with non-vanishing steps")
    return t


# ---------------------------------------------------------------- SO(n)


def gram_schmidt(R):
    """Modified Gram-Schmidt on the columns of ``R`` (keeps the column order and det sign)."""
    Q = np.array(R, dtype=float, copy=True)
    n = Q.shape[1]
    for j in range(n):
        for i in range(j):
            Q[:, j] -= (Q[:, i] @ Q[:, j]) * Q[:, i]
        Q[:, j] /= np.linalg.norm(Q[:, j])
    return Q


def orthogonality_defect(R):
    R = np.asarray(R)
    eye = np.eye(R.shape[-1])
    return float(np.max(np.abs(np.swapaxes(R, -1, -2) @ R - eye)))


def is_rotation(R, tol=1e-9):
    R = np.asarray(R, dtype=float)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        return False
    return orthogonality_defect(R) < tol and np.linalg.det(R) > 0


def generalized_cross(vectors):
    """Unit-free completion of n-1 vectors in R^n to a positively oriented basis.

    Returns ``w`` with ``det[v_1, ..., v_{n-1}, x] == <w, x>`` for every ``x``,
    computed by cofactor expansion along the last column.  ``vectors`` has shape
    (..., n, n-1) (columns are the input vectors).
    """
    V = np.asarray(vectors, dtype=float)
    n = V.shape[-2]
    if V.shape[-1] != n - 1:
        raise ValueError("need n-1 vectors in R^n")
    out = np.empty(V.shape[:-2] + (n,))
    for i in range(n):
        minor = np.delete(V, i, axis=-2)
        sign = -1.0 if (i + n - 1) % 2 else 1.0
        out[..., i] = sign * (np.linalg.det(minor) if n > 1 else 1.0)
    return out


# ---------------------------------------------------------------- RK4


@dataclass
class Integration:
    t: np.ndarray
    y: np.ndarray
    exit_time: Optional[float]
    exit_reason: Optional[str]
    max_drift: float

    @property
    def complete(self):
        return self.exit_time is None


def rk4_grid(rhs: Callable, t, y0, project: Optional[Callable] = None,
             in_domain: Optional[Callable] = None) -> Integration:
    """Classical RK4 on the grid ``t``.

    ``rhs(i, stage, y)`` returns dy/dt where ``stage`` selects the time:
    0 -> t[i], 1 -> t[i] + h/2, 2 -> t[i+1].  ``project(y)`` returns the
    re-projected state and the defect it removed.  ``in_domain(y)`` is
    checked after each step; on failure the partial solution is returned.
    """
    t = check_grid(t)
    y = np.array(y0, dtype=float, copy=True)
    ys = np.empty((t.size,) + y.shape)
    ys[0] = y
    drift = 0.0
    for i in range(t.size - 1):
        h = t[i + 1] - t[i]
        k1 = rhs(i, 0, y)
        k2 = rhs(i, 1, y + 0.5 * h * k1)
        k3 = rhs(i, 1, y + 0.5 * h * k2)
        k4 = rhs(i, 2, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            return Integration(t[: i + 1], ys[: i + 1], float(t[i + 1]), "non-finite state", drift)
        if project is not None:
            y, d = project(y)
            drift = max(drift, d)
        if in_domain is not None and not in_domain(y):
            return Integration(t[: i + 1], ys[: i + 1], float(t[i + 1]), "chart exit", drift)
        ys[i + 1] = y
    return Integration(t, ys, None, None, drift)


def stage_times(t):
    """Times at which :func:`rk4_grid` evaluates the driving data."""
    t = np.asarray(t, dtype=float)
    return t[:-1], 0.5 * (t[:-1] + t[1:]), t[1:]


# ---------------------------------------------------------------- finite differences


def _stencil_weights(t, order=1):
    N = t.size
    if N < STENCIL:
        raise ValueError(f"grid too short for finite differences (need >= {STENCIL} points)")
    start = np.clip(np.arange(N) - STENCIL // 2, 0, N - STENCIL)
    idx = start[:, None] + np.arange(STENCIL)[None, :]
    off = t[idx] - t[:, None]
    scale = np.max(np.abs(off), axis=1, keepdims=True)
    x = off / scale
    V = x[:, None, :] ** np.arange(STENCIL)[None, :, None]
    rhs = np.zeros((N, STENCIL))
    rhs[:, order] = float(np.prod(np.arange(1, order + 1)))
    w = np.linalg.solve(V, rhs[..., None])[..., 0] / scale ** order
    return idx, w


def derivative(t, f):
    """Fourth-order finite-difference derivative of samples ``f`` (axis 0) on grid ``t``.

    Five-point stencils, centred in the interior and shifted (one-sided) at the
    two points nearest each end.
    """
    t = np.asarray(t, dtype=float)
    f = np.asarray(f, dtype=float)
    idx, w = _stencil_weights(t)
    return np.einsum("ij,ij...->i...", w, f[idx])


def interior_mask(N, margin=2):
    m = np.ones(N, dtype=bool)
    m[:margin] = False
    m[N - margin:] = False
    return m


# ---------------------------------------------------------------- quadrature


def trapezoid_weights(t):
    t = np.asarray(t, dtype=float)
    w = np.zeros_like(t)
    h = np.diff(t)
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    return w


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(3)


def gauss_legendre_panels(func, a, b):
    """Three-point Gauss-Legendre integral of vectorised ``func`` over each panel [a_i, b_i]."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    total = 0.0
    for x, w in zip(_GL_NODES, _GL_WEIGHTS):
        total = total + w * func(mid + half * x)
    return half * total


# ---------------------------------------------------------------- Procrustes


@dataclass
class ProcrustesFit:
    rotation: np.ndarray
    reflection_preferred: bool
    singular_values: np.ndarray


def procrustes_rotation(A, B, weights=None) -> ProcrustesFit:
    """Rotation ``R`` (det +1) minimising ``sum_i w_i |B_i - R A_i|^2``.

    ``reflection_preferred`` is set when the unconstrained orthogonal optimum
    has determinant -1.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape:
        raise ValueError("sample sets must have the same shape")
    w = np.ones(A.shape[0]) if weights is None else np.asarray(weights, dtype=float)
    H = (A * w[:, None]).T @ B
    U, S, Vt = np.linalg.svd(H)
    d = np.sign(np.linalg.det(Vt.T @ U.T))
    if d == 0:
        d = 1.0
    D = np.eye(A.shape[1])
    D[-1, -1] = d
    R = Vt.T @ D @ U.T
    return ProcrustesFit(R, bool(d < 0 and S[-1] > 1e-12 * max(S[0], 1e-300)), S)
