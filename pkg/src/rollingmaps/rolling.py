"""Rolling of one manifold model on another along a prescribed curve.

The isometry ``q(t)`` is stored as an n x n rotation acting on frame
components: a tangent vector with frame components ``z`` at ``x(t)`` is sent
to the vector with frame components ``q(t) z`` at ``x_hat(t)``.  If the frame
of either model is changed by a rotation field ``S`` (``e' = e S``) the matrix
transforms as ``q' = S_hat^T q S``.

The rolling equations in frame components are

    xi_hat' = phi_hat(xi_hat) q u
    q'      = q W(u) - W_hat(q u) q

with ``u`` the frame components of x' and ``W``, ``W_hat`` the connection
matrices of the two models.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .curves import SampledCurve, frame_velocity
from .geometry import ManifoldModel
from .numerics import (derivative, gram_schmidt, interior_mask, is_rotation,
                       orthogonality_defect, rk4_grid)
from .transport import _picker, connection_along, parallel_transport


@dataclass
class RollingTrajectory:
    t: np.ndarray
    x: SampledCurve
    x_hat: SampledCurve
    q: np.ndarray              # (N, n, n)
    exit_time: Optional[float] = None
    exit_reason: Optional[str] = None
    max_drift: float = 0.0

    @property
    def complete(self):
        return self.exit_time is None

    def __len__(self):
        return self.t.size

    def reversed(self):
        """The same rolling run backwards in time on the grid ``-t[::-1]``."""
        return RollingTrajectory(-self.t[::-1], self.x.reversed(), self.x_hat.reversed(),
                                 self.q[::-1].copy(), None, None, self.max_drift)


@dataclass
class RollingReport:
    no_slip: float
    no_twist: float
    so_drift: float
    exit_events: List[str] = field(default_factory=list)

    def ok(self, tol=1e-6):
        return max(self.no_slip, self.no_twist, self.so_drift) < tol and not self.exit_events


def _check_q0(q0, n):
    q0 = np.eye(n) if q0 is None else np.asarray(q0, dtype=float)
    if q0.shape != (n, n) or not is_rotation(q0, 1e-9):
        raise ValueError("q0 must be a rotation matrix in SO(n)")
    return q0


def _same_dim(M: ManifoldModel, Mh: ManifoldModel):
    if M.n != Mh.n:
        raise ValueError(f"cannot roll a {M.n}-manifold on a {Mh.n}-manifold")


def roll_along(M: ManifoldModel, Mh: ManifoldModel, x: SampledCurve, q0=None, xh0=None) -> RollingTrajectory:
    """Integrate the rolling of ``M`` on ``Mh`` along ``x`` with RK4 on x's grid.

    Only (xi_hat, q) are integrated; ``x`` is evaluated from its own
    representation at the RK4 stage times.  Leaving Mh's chart ends the
    integration early and the partial trajectory carries ``exit_time``.
    """
    _same_dim(M, Mh)
    n = M.n
    q0 = _check_q0(q0, n)
    M.require_domain(x.xi, "base curve")
    if xh0 is None:
        raise ValueError("initial point on the target manifold is required")
    xh0 = Mh.normalize(np.asarray(xh0, dtype=float))
    if xh0.shape != (Mh.coord_dim,):
        raise ValueError(f"initial point must have {Mh.coord_dim} chart coordinates")
    Mh.require_domain(xh0, "initial point")
    m = Mh.coord_dim
    if len(x) < 2:
        dxh = Mh.chart_vector(xh0, q0 @ frame_velocity(M, x)[0])
        return RollingTrajectory(x.t.copy(), x, SampledCurve(x.t, xh0[None], dxh[None]), q0[None].copy())

    u, um, W, Wm = connection_along(M, x)
    u_at = _picker(u, um)
    W_at = _picker(W, Wm)

    def rhs(i, s, state):
        xh = state[:m]
        q = state[m:].reshape(n, n)
        uh = q @ u_at(i, s)
        dq = q @ W_at(i, s) - Mh.connection(xh, uh) @ q
        return np.concatenate([Mh.chart_vector(xh, uh), dq.ravel()])

    def project(state):
        q = state[m:].reshape(n, n)
        d = orthogonality_defect(q)
        return np.concatenate([Mh.normalize(state[:m]), gram_schmidt(q).ravel()]), d

    res = rk4_grid(rhs, x.t, np.concatenate([xh0, q0.ravel()]), project=project,
                   in_domain=lambda st: bool(Mh.in_domain(st[:m])))
    k = res.t.size
    xh = res.y[:, :m]
    q = res.y[:, m:].reshape(k, n, n)
    uh = np.einsum("tij,tj->ti", q, u[:k])
    x_part = x if k == len(x) else SampledCurve(x.t[:k], x.xi[:k], x.dxi[:k], x.arc_length, False,
                                                x.func, x.label)
    x_hat = SampledCurve(res.t, xh, Mh.chart_vector(xh, uh), x.arc_length, False, None, "rolled")
    return RollingTrajectory(res.t, x_part, x_hat, q, res.exit_time, res.exit_reason, res.max_drift)


def verify_rolling(M: ManifoldModel, Mh: ManifoldModel, traj: RollingTrajectory, probes=3, seed=0,
                   margin=2) -> RollingReport:
    """Measure how far ``traj`` is from satisfying the rolling axioms.

    no-slip:  |u_hat - q u| with u_hat read off finite differences of the
              x_hat samples (not the stored derivatives).
    no-twist: for ``probes`` random parallel fields Z along x, the covariant
              derivative of q Z along x_hat, which must vanish.
    Residuals are maxima over interior grid points (``margin`` points at each
    end are skipped because the one-sided stencils are less accurate there).
    """
    _same_dim(M, Mh)
    n = M.n
    t = traj.t
    if not (np.array_equal(traj.x.t, t) and np.array_equal(traj.x_hat.t, t) and traj.q.shape[0] == t.size):
        raise ValueError("trajectory grids are not aligned")
    events = [f"{traj.exit_reason} at t = {traj.exit_time:.17g}"] if traj.exit_time is not None else []
    q = traj.q
    drift = float(np.max(np.abs(np.swapaxes(q, 1, 2) @ q - np.eye(n))))
    if np.any(np.linalg.det(q) <= 0):
        drift = max(drift, 1.0)
    if t.size < 5:
        return RollingReport(0.0, 0.0, drift, events)
    mask = interior_mask(t.size, margin)
    u = frame_velocity(M, traj.x)
    uh = Mh.frame_components(traj.x_hat.xi, derivative(t, traj.x_hat.xi))
    qu = np.einsum("tij,tj->ti", q, u)
    slip = float(np.max(np.linalg.norm((uh - qu)[mask], axis=1)))

    Wh = Mh.connection(traj.x_hat.xi, uh)
    rng = np.random.default_rng(seed)
    twist = 0.0
    for _ in range(int(probes)):
        z0 = rng.normal(size=n)
        z0 /= np.linalg.norm(z0)
        Z = parallel_transport(M, traj.x, z0)
        w = np.einsum("tij,tj->ti", q, Z)
        Dw = derivative(t, w) + np.einsum("tij,tj->ti", Wh, w)
        twist = max(twist, float(np.max(np.linalg.norm(Dw[mask], axis=1))))
    return RollingReport(slip, twist, drift, events)


def identity_rolling(M: ManifoldModel, x: SampledCurve) -> RollingTrajectory:
    """Rolling of ``M`` on itself along ``x`` with q = I throughout."""
    q = np.broadcast_to(np.eye(M.n), (len(x), M.n, M.n)).copy()
    return RollingTrajectory(x.t.copy(), x, x, q)


def compose_rollings(first: RollingTrajectory, second: RollingTrajectory, tol=1e-6) -> RollingTrajectory:
    """Rolling of M on M_tilde from rollings M -> M_hat and M_hat -> M_tilde.

    ``second`` must be driven by the curve ``first`` produces on M_hat; if
    the grids differ ``second`` is interpolated onto ``first``'s grid.
    """
    t = first.t
    if first.q.shape[1:] != second.q.shape[1:]:
        raise ValueError("rollings of different dimensions cannot be composed")
    if np.array_equal(second.t, t):
        mid = second.x.xi
        q2 = second.q
        far = second.x_hat
    else:
        if t[0] < second.t[0] - 1e-12 or t[-1] > second.t[-1] + 1e-12:
            raise ValueError("second rolling does not cover the first rolling's time interval")
        mid = second.x(t)[0]
        far = second.x_hat.resample(t)
        q2 = np.stack([gram_schmidt(m) for m in CubicSpline(second.t, second.q, axis=0)(t)])
    gap = float(np.max(np.abs(mid - first.x_hat.xi)))
    if gap > tol:
        raise ValueError(f"intermediate curves differ by {gap:.3g} > {tol:g}")
    q = q2 @ first.q
    return RollingTrajectory(t.copy(), first.x, far, q, None, None,
                             max(first.max_drift, second.max_drift))
