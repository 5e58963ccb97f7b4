"""Rolling motions built from curvature data.

A curve on a target model is produced from prescribed geodesic curvatures
by integrating its Frenet frame ``a(t)`` (columns in frame components)

    xi'  = phi(xi) a_1
    a'   = a K - W(a_1) a

where ``K`` is the curvature matrix and ``W`` the target's connection
matrix.  Specialised right-hand sides are provided for Euclidean space, the
stereographic sphere and the unit quaternions.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .curves import SampledCurve, _grid, speed
from .frenet import EPS_REG, FrenetData, curvature_matrix, frenet_apparatus, regularity_order, reparametrize_arclength
from .geometry import ManifoldModel, _cross_matrices, quat_mul
from .numerics import RegularityError, check_grid, gram_schmidt, is_rotation, orthogonality_defect, rk4_grid, stage_times
from .rolling import RollingTrajectory, _check_q0
from .transport import FrameCurve


@dataclass
class CurvatureProfile:
    t: np.ndarray
    kappa: np.ndarray                 # (N, n-1)
    func: Optional[Callable] = None   # exact kappa(s), vectorised; else cubic interpolation

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.kappa = np.asarray(self.kappa, dtype=float)
        if self.kappa.ndim == 1:
            self.kappa = self.kappa[:, None]
        if self.kappa.shape[0] != self.t.size:
            raise ValueError("one row of curvatures per grid point is required")
        self._spline = None

    @property
    def n(self):
        return self.kappa.shape[1] + 1

    def __call__(self, s):
        if self.func is not None:
            return np.asarray(self.func(np.asarray(s, dtype=float)), dtype=float).reshape(np.shape(s) + (self.n - 1,))
        if self._spline is None:
            self._spline = CubicSpline(self.t, self.kappa, axis=0)
        return self._spline(s)

    def K(self, s=None):
        return curvature_matrix(self.kappa if s is None else self(s))

    @classmethod
    def constant(cls, kappa, length, num=None, step=None):
        kappa = np.atleast_1d(np.asarray(kappa, dtype=float))
        t = _grid(length, num, step)
        return cls(t, np.tile(kappa, (t.size, 1)), lambda s: np.broadcast_to(kappa, np.shape(s) + kappa.shape))

    @classmethod
    def from_function(cls, func, t):
        t = np.asarray(t, dtype=float)
        return cls(t, func(t), func)


def _check_profile(profile: CurvatureProfile, n):
    if profile.n != n:
        raise ValueError(f"profile has {profile.n - 1} curvatures but the manifold needs {n - 1}")
    if n > 2 and np.any(profile.kappa[:, : n - 2] < 0):
        raise ValueError("curvatures kappa_1..kappa_{n-2} must be non-negative")


@dataclass
class Synthesis:
    curve: SampledCurve
    frame: FrameCurve
    exit_time: Optional[float] = None
    exit_reason: Optional[str] = None

    @property
    def complete(self):
        return self.exit_time is None


def _integrate(profile, x0, a0, m, n, point_rate, frame_rate, normalize, in_domain, chart_vector, label,
               t=None):
    a0 = np.asarray(a0, dtype=float)
    if a0.shape != (n, n) or not is_rotation(a0, 1e-9):
        raise ValueError("initial Frenet frame must be a rotation matrix in SO(n)")
    t = profile.t if t is None else check_grid(t)
    _, tm, _ = stage_times(t)
    Kg = profile.K(t)
    Km = profile.K(tm)

    def rhs(i, s, state):
        x = state[:m]
        a = state[m:].reshape(n, n)
        K = Kg[i] if s == 0 else (Km[i] if s == 1 else Kg[i + 1])
        return np.concatenate([point_rate(x, a[:, 0]), frame_rate(x, a, K).ravel()])

    def project(state):
        a = state[m:].reshape(n, n)
        return np.concatenate([normalize(state[:m]), gram_schmidt(a).ravel()]), orthogonality_defect(a)

    res = rk4_grid(rhs, t, np.concatenate([x0, a0.ravel()]), project=project, in_domain=in_domain)
    k = res.t.size
    x = res.y[:, :m]
    a = res.y[:, m:].reshape(k, n, n)
    curve = SampledCurve(res.t, x, chart_vector(x, a[:, :, 0]), True, False, None, label)
    return Synthesis(curve, FrameCurve(res.t, a, res.max_drift), res.exit_time, res.exit_reason)


def synthesize_curve(Mh: ManifoldModel, profile: CurvatureProfile, xh0, a0=None, t=None) -> Synthesis:
    """Unit-speed curve on ``Mh`` with the given curvatures, starting at ``xh0`` with Frenet frame ``a0``.

    The integration grid is ``t`` (default: the profile's own grid).
    """
    n = Mh.n
    _check_profile(profile, n)
    a0 = np.eye(n) if a0 is None else a0
    x0 = Mh.normalize(np.asarray(xh0, dtype=float))
    Mh.require_domain(x0, "initial point")

    def frame_rate(x, a, K):
        return a @ K - Mh.connection(x, a[:, 0]) @ a

    return _integrate(profile, x0, a0, Mh.coord_dim, n, Mh.chart_vector, frame_rate, Mh.normalize,
                      lambda st: bool(Mh.in_domain(st[: Mh.coord_dim])), Mh.chart_vector, "synth", t)


def backend_euclidean(profile: CurvatureProfile, x0=None, a0=None) -> Synthesis:
    """Frenet-Serret integration in R^n: x' = a_1, a' = a K."""
    n = profile.n
    _check_profile(profile, n)
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float)
    a0 = np.eye(n) if a0 is None else a0
    return _integrate(profile, x0, a0, n, n, lambda x, v: v, lambda x, a, K: a @ K, lambda x: x,
                      None, lambda x, v: v, "synth-euclidean")


def backend_sphere(profile: CurvatureProfile, x0=None, a0=None, bound=1e3) -> Synthesis:
    """Unit sphere in the stereographic chart: x' = (1+|x|^2)/2 a_1, a' = a K + (a_1 x^T - x a_1^T) a."""
    n = profile.n
    _check_profile(profile, n)
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float)
    a0 = np.eye(n) if a0 is None else a0
    if not np.linalg.norm(x0) < bound:
        raise ValueError("initial point outside the stereographic chart")

    def point_rate(x, v):
        return 0.5 * (1.0 + x @ x) * v

    def frame_rate(x, a, K):
        a1 = a[:, 0]
        return a @ K + (np.outer(a1, x) - np.outer(x, a1)) @ a

    def chart_vector(x, v):
        return 0.5 * (1.0 + np.sum(x * x, axis=-1, keepdims=True)) * v

    return _integrate(profile, x0, a0, n, n, point_rate, frame_rate, lambda x: x,
                      lambda st: bool(np.linalg.norm(st[:n]) < bound), chart_vector, "synth-sphere")


_E1_CROSS = _cross_matrices(np.array([1.0, 0.0, 0.0]))


def backend_su2(profile: CurvatureProfile, g0=None, a0=None) -> Synthesis:
    """Unit quaternions with the left-invariant frame (g i, g j, g k).

    The reduced frame equation is a' = a (K - [e_1]_x), whose (2,3) entry is
    -(kappa_2 - 1); the curve follows g' = g * (a_11 i + a_21 j + a_31 k).
    """
    if profile.n != 3:
        raise ValueError("the quaternion backend needs a 3-dimensional profile")
    _check_profile(profile, 3)
    g0 = np.array([1.0, 0.0, 0.0, 0.0]) if g0 is None else np.asarray(g0, dtype=float)
    if abs(np.linalg.norm(g0) - 1.0) > 1e-9:
        raise ValueError("initial quaternion must have unit norm")
    a0 = np.eye(3) if a0 is None else a0

    def point_rate(g, v):
        return quat_mul(g, np.concatenate([[0.0], v]))

    def frame_rate(g, a, K):
        return a @ (K - _E1_CROSS)

    def chart_vector(g, v):
        return quat_mul(g, np.concatenate([np.zeros(v.shape[:-1] + (1,)), v], axis=-1))

    def normalize(g):
        return g / np.linalg.norm(g)

    return _integrate(profile, g0, a0, 4, 3, point_rate, frame_rate, normalize, None, chart_vector,
                      "synth-su2")


def frenet_profile(M: ManifoldModel, x: SampledCurve, eps_reg=EPS_REG, refine=1):
    """Frenet data and curvature profile of a curve (reparametrised by arc length if needed).

    With ``refine = 2`` the curvatures are computed on a grid that also holds
    the midpoints of ``x``'s arc-length grid, so an RK4 run on that grid reads
    computed rather than interpolated curvatures; the returned curve and
    Frenet data stay on the coarse grid.
    """
    if refine not in (1, 2):
        raise ValueError("refine must be 1 or 2")
    unit = x.arc_length and np.max(np.abs(speed(M, x) - 1.0)) < 1e-6
    num = refine * (len(x) - 1) + 1
    if unit:
        fine = x if refine == 1 else x.resample(np.linspace(x.t[0], x.t[-1], num))
    else:
        fine = reparametrize_arclength(M, x, num)
    reg = regularity_order(M, fine, eps_reg)
    if reg.order < M.n - 1:
        raise RegularityError(f"curve is only C^{reg.order}-regular; use roll_along instead", reg.order,
                              reg.failures)
    data = frenet_apparatus(M, fine, eps_reg, strict=True)
    profile = CurvatureProfile(fine.t, data.kappa)
    if refine == 1:
        return fine, data, profile
    if unit:
        c = x
    else:
        c = SampledCurve(fine.t[::2], fine.xi[::2], fine.dxi[::2], True, fine.closed, fine.func, fine.label)
    sub = FrenetData(c.t.copy(), data.v[::2], data.kappa[::2], data.regular_order, data.valid[::2],
                     data.failure_time)
    return c, sub, profile


def synthesize_rolling(M: ManifoldModel, Mh: ManifoldModel, x: SampledCurve, q0=None, xh0=None,
                       eps_reg=EPS_REG) -> RollingTrajectory:
    """Rolling along a C^(n-1)-regular curve assembled from matching Frenet frames.

    The target curve is synthesised from x's curvatures with initial frame
    q0 v_j(0); then q(t) = A(t) V(t)^T.  The returned trajectory lives on the
    arc-length grid of ``x``.
    """
    n = M.n
    if Mh.n != n:
        raise ValueError("manifolds of different dimension")
    q0 = _check_q0(q0, n)
    if xh0 is None:
        raise ValueError("initial point on the target manifold is required")
    c, data, profile = frenet_profile(M, x, eps_reg, refine=2)
    syn = synthesize_curve(Mh, profile, xh0, q0 @ data.v[0], t=c.t)
    k = len(syn.curve)
    V = data.v[:k]
    q = syn.frame.R @ np.swapaxes(V, 1, 2)
    base = c if k == len(c) else SampledCurve(c.t[:k], c.xi[:k], c.dxi[:k], True, False, c.func, c.label)
    return RollingTrajectory(syn.curve.t, base, syn.curve, q, syn.exit_time, syn.exit_reason,
                             syn.frame.max_drift)
