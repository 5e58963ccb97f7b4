"""Parallel transport, parallel frames, anti-development and development.

Frames along a curve are stored as rotation matrices ``R(t)`` whose columns
are the frame components of the parallel vector fields.  In frame components
the transport equation reads ``dR/dt = -W(t) R`` with ``W = sum_k u_k Gamma_k``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .curves import SampledCurve, frame_velocity, is_closed
from .geometry import ManifoldModel
from .numerics import (Integration, gram_schmidt, is_rotation, orthogonality_defect, rk4_grid,
                       stage_times, wrap_angle)


@dataclass
class FrameCurve:
    t: np.ndarray
    R: np.ndarray
    max_drift: float = 0.0

    def __len__(self):
        return self.t.size


@dataclass
class AntiDevelopment:
    y: SampledCurve
    frame: FrameCurve


@dataclass
class Development:
    x: SampledCurve
    frame: FrameCurve
    exit_time: Optional[float] = None
    exit_reason: Optional[str] = None

    @property
    def complete(self):
        return self.exit_time is None


def _rotation_arg(R0, n):
    R0 = np.eye(n) if R0 is None else np.asarray(R0, dtype=float)
    if R0.shape != (n, n) or not is_rotation(R0, 1e-9):
        raise ValueError("initial frame must be a rotation matrix in SO(n)")
    return R0


def _project_rotation(R):
    d = orthogonality_defect(R)
    return gram_schmidt(R), d


def connection_along(M: ManifoldModel, c: SampledCurve):
    """Connection matrices and frame velocities at the grid and at step midpoints."""
    _, tm, _ = stage_times(c.t)
    xm, dxm = c(tm)
    M.require_domain(c.xi, "curve")
    M.require_domain(xm, "curve (between samples)")
    u = frame_velocity(M, c)
    um = M.frame_components(xm, dxm)
    return u, um, M.connection(c.xi, u), M.connection(xm, um)


def _picker(grid, mid):
    def pick(i, stage):
        if stage == 0:
            return grid[i]
        if stage == 1:
            return mid[i]
        return grid[i + 1]
    return pick


def parallel_transport(M: ManifoldModel, c: SampledCurve, v0) -> np.ndarray:
    """Frame components of the parallel field along ``c`` with initial value ``v0``."""
    v0 = np.asarray(v0, dtype=float)
    if v0.shape[-1] != M.n:
        raise ValueError(f"initial vector must have {M.n} components")
    if len(c) < 2:
        return v0[None].copy()
    _, _, W, Wm = connection_along(M, c)
    W_at = _picker(W, Wm)
    res = rk4_grid(lambda i, s, v: -(W_at(i, s) @ v), c.t, v0)
    return res.y


def parallel_frame(M: ManifoldModel, c: SampledCurve, R0=None) -> FrameCurve:
    """Parallel orthonormal frame along ``c`` starting from ``R0`` (default identity)."""
    R0 = _rotation_arg(R0, M.n)
    if len(c) < 2:
        return FrameCurve(c.t.copy(), R0[None].copy())
    _, _, W, Wm = connection_along(M, c)
    W_at = _picker(W, Wm)
    res = rk4_grid(lambda i, s, R: -(W_at(i, s) @ R), c.t, R0, project=_project_rotation)
    return FrameCurve(res.t, res.y, res.max_drift)


def antidevelop(M: ManifoldModel, c: SampledCurve, R0=None) -> AntiDevelopment:
    """Anti-development ``y(t) = int_0^t R(s)^T u(s) ds`` along a parallel frame."""
    n = M.n
    R0 = _rotation_arg(R0, n)
    if len(c) < 2:
        y = SampledCurve(c.t, np.zeros((1, n)), (R0.T @ frame_velocity(M, c)[0])[None])
        return AntiDevelopment(y, FrameCurve(c.t.copy(), R0[None].copy()))
    u, um, W, Wm = connection_along(M, c)
    W_at = _picker(W, Wm)
    u_at = _picker(u, um)

    def rhs(i, s, state):
        R = state[:n]
        return np.vstack([-(W_at(i, s) @ R), (R.T @ u_at(i, s))[None]])

    def project(state):
        Q, d = _project_rotation(state[:n])
        return np.vstack([Q, state[n:]]), d

    res = rk4_grid(rhs, c.t, np.vstack([R0, np.zeros((1, n))]), project=project)
    R = res.y[:, :n]
    y = res.y[:, n]
    dy = np.einsum("tji,tj->ti", R, u)
    y[0] = 0.0
    curve = SampledCurve(c.t.copy(), y, dy, c.arc_length, False, None, "antidev")
    return AntiDevelopment(curve, FrameCurve(res.t, R, res.max_drift))


def develop(M: ManifoldModel, y: SampledCurve, x0, R0=None) -> Development:
    """Roll R^n on ``M``: the curve on ``M`` whose anti-development (frame ``R0``) is ``y``.

    If the solution leaves the chart the partial result is returned with
    ``exit_time`` set.
    """
    n = M.n
    R0 = _rotation_arg(R0, n)
    x0 = M.normalize(np.asarray(x0, dtype=float))
    M.require_domain(x0, "initial point")
    if y.dim != n:
        raise ValueError(f"anti-development curve must live in R^{n}")
    m = M.coord_dim
    _, tm, _ = stage_times(y.t)
    _, dym = y(tm)
    dy_at = _picker(y.dxi, dym)

    def rhs(i, s, state):
        xi = state[:m]
        R = state[m:].reshape(n, n)
        u = R @ dy_at(i, s)
        return np.concatenate([M.chart_vector(xi, u), (-(M.connection(xi, u) @ R)).ravel()])

    def project(state):
        Q, d = _project_rotation(state[m:].reshape(n, n))
        return np.concatenate([M.normalize(state[:m]), Q.ravel()]), d

    res: Integration = rk4_grid(rhs, y.t, np.concatenate([x0, R0.ravel()]), project=project,
                                in_domain=lambda st: bool(M.in_domain(st[:m])))
    xi = res.y[:, :m]
    R = res.y[:, m:].reshape(-1, n, n)
    u = np.einsum("tij,tj->ti", R, y.dxi[: res.t.size])
    dxi = M.chart_vector(xi, u)
    x = SampledCurve(res.t, xi, dxi, y.arc_length, False, None, "develop")
    return Development(x, FrameCurve(res.t, R, res.max_drift), res.exit_time, res.exit_reason)


@dataclass
class Holonomy:
    matrix: np.ndarray
    angle: Optional[float]


def holonomy(M: ManifoldModel, loop: SampledCurve, R0=None, tol_close=1e-6) -> Holonomy:
    """Holonomy ``H = R(0)^T R(tau)`` of a closed curve; for n = 2 also its angle in (-pi, pi]."""
    if not is_closed(loop, tol_close):
        raise ValueError("holonomy needs a closed curve")
    fr = parallel_frame(M, loop, R0)
    H = fr.R[0].T @ fr.R[-1]
    angle = wrap_angle(np.arctan2(H[1, 0], H[0, 0])) if M.n == 2 else None
    return Holonomy(H, angle)
