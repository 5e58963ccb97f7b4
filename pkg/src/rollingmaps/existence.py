"""Numeric verdicts on whether a rolling exists along a pair of curves.

Also loop diagnostics for surfaces (holonomy, total turning, closure
integral), Frenet-frame compatibility at a junction, the rank of the
smallest parallel subbundle containing a curve's velocity, and recovery of a
Euclidean motion between two curves.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

from .curves import SampledCurve, curve_length, frame_velocity, speed
from .frenet import (EPS_REG, frenet_apparatus, geodesic_curvature, regularity_order,
                     reparametrize_arclength)
from .geometry import ManifoldModel
from .numerics import RegularityError, interior_mask, procrustes_rotation, trapezoid_weights, wrap_angle
from .rolling import RollingTrajectory, verify_rolling
from .transport import antidevelop, parallel_frame

TOL_CURV = 1e-4
TOL_GEN = 1e-5
TOL_LOOP = 1e-6
TOL_ANGLE = 1e-6
KINK_JUMP = 0.05
KINK_RATIO = 20.0


@dataclass
class ExistenceVerdict:
    accepted: bool
    method: str
    iota: Optional[np.ndarray]
    residual: float
    details: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)


def _unit_speed(M: ManifoldModel, c: SampledCurve, tol=1e-6):
    if c.arc_length and np.max(np.abs(speed(M, c) - 1.0)) < tol:
        return c
    return reparametrize_arclength(M, c)


def _common_grid(c: SampledCurve, ch: SampledCurve):
    """Both curves resampled on one grid covering their common parameter interval."""
    a = max(c.t[0], ch.t[0])
    b = min(c.t[-1], ch.t[-1])
    if b <= a:
        raise ValueError("curves have no common parameter interval")
    if np.array_equal(c.t, ch.t):
        return c, ch
    num = max(int(np.sum((c.t >= a) & (c.t <= b))), int(np.sum((ch.t >= a) & (ch.t <= b))), 5)
    t = np.linspace(a, b, num)
    return c.resample(t), ch.resample(t)


# ------------------------------------------------------------------ curvature test


def exists_by_curvature(M: ManifoldModel, Mh: ManifoldModel, x: SampledCurve, xh: SampledCurve,
                        tol_curv=TOL_CURV, eps_reg=EPS_REG, margin=2, check_rolling=True) -> ExistenceVerdict:
    """Rolling exists iff the geodesic curvatures of the two curves agree.

    Both curves are reparametrised by arc length and compared on their common
    arc-length interval.  Curves that are not C^(n-1)-regular are refused with
    :class:`RegularityError`; use :func:`exists_general` for those.
    """
    n = M.n
    if Mh.n != n:
        raise ValueError("manifolds of different dimension")
    c, ch = _unit_speed(M, x), _unit_speed(Mh, xh)
    for name, model, curve in (("x", M, c), ("x_hat", Mh, ch)):
        reg = regularity_order(model, curve, eps_reg)
        if reg.order < n - 1:
            raise RegularityError(f"{name} is only C^{reg.order}-regular; use exists_general instead",
                                  reg.order, reg.failures)
    L, Lh = c.span, ch.span
    c, ch = _common_grid(c, ch)
    f = frenet_apparatus(M, c, eps_reg, strict=True)
    fh = frenet_apparatus(Mh, ch, eps_reg, strict=True)
    mask = interior_mask(len(c), margin)
    gaps = np.max(np.abs(f.kappa - fh.kappa)[mask], axis=0)
    residual = float(np.max(gaps))
    accepted = residual < tol_curv
    details = {"kappa_gap": gaps, "length": L, "length_hat": Lh, "compared_length": c.span}
    if accepted and check_rolling:
        q = fh.v @ np.swapaxes(f.v, 1, 2)
        traj = RollingTrajectory(c.t.copy(), c, ch, q)
        rep = verify_rolling(M, Mh, traj)
        details.update(no_slip=rep.no_slip, no_twist=rep.no_twist, so_drift=rep.so_drift)
        details["rolling"] = traj
    method = "curvature2d" if n == 2 else "curvatureND"
    return ExistenceVerdict(bool(accepted), method, None, residual, details, {"tol_curv": tol_curv, "eps_reg": eps_reg})


# ------------------------------------------------------------------ anti-development test


def exists_general(M: ManifoldModel, Mh: ManifoldModel, x: SampledCurve, xh: SampledCurve,
                   tol_gen=TOL_GEN, R0=None, R0h=None) -> ExistenceVerdict:
    """Rolling exists iff the anti-developments differ by a fixed rotation.

    The rotation is fitted to the derivative samples (Procrustes, det +1,
    trapezoid weights); acceptance needs both the derivative sup-residual
    below ``tol_gen`` and the integrated curves within ``tol_gen * length``.
    """
    if Mh.n != M.n:
        raise ValueError("manifolds of different dimension")
    c, ch = _common_grid(x, xh)
    y = antidevelop(M, c, R0).y
    yh = antidevelop(Mh, ch, R0h).y
    thresholds = {"tol_gen": tol_gen}
    scale = max(np.max(np.linalg.norm(y.dxi, axis=1)), np.max(np.linalg.norm(yh.dxi, axis=1)))
    if scale < 1e-14:
        return ExistenceVerdict(True, "antidev_so_n", np.eye(M.n), 0.0, {"degenerate": True}, thresholds)
    fit = procrustes_rotation(y.dxi, yh.dxi, trapezoid_weights(c.t))
    iota = fit.rotation
    d_res = float(np.max(np.linalg.norm(yh.dxi - y.dxi @ iota.T, axis=1)))
    p_res = float(np.max(np.linalg.norm(yh.xi - y.xi @ iota.T, axis=1)))
    length = max(curve_length(M, c), 1e-300)
    accepted = d_res < tol_gen and p_res < tol_gen * length
    details = {"derivative_residual": d_res, "position_residual": p_res, "length": length,
               "orientation_flag": fit.reflection_preferred, "degenerate": False}
    return ExistenceVerdict(bool(accepted), "antidev_so_n", iota, d_res, details, thresholds)


# ------------------------------------------------------------------ loops on surfaces


@dataclass
class LoopReport:
    theta: float                # holonomy angle
    alpha: float                # total geodesic curvature
    closure_integral: complex
    config_loop: bool
    c1_loop: bool
    closed: bool
    length: float
    tangent_angle: float        # signed angle from x'(0) to x'(tau), via alpha + theta


def _check_smooth_kg(kg, t):
    # A curvature jump is smeared over a few samples by the difference stencils,
    # so each jump is compared with the jumps just outside that zone.
    jumps = np.abs(np.diff(kg))
    pad = np.pad(jumps, 7, mode="edge")
    near = np.max(np.stack([pad[7 + d: 7 + d + jumps.size] for d in (-6, -5, -4, 4, 5, 6)]), axis=0)
    bad = np.nonzero((jumps > KINK_JUMP) & (jumps > KINK_RATIO * near))[0]
    if bad.size:
        raise RegularityError(f"geodesic curvature jumps by {jumps[bad].max():.3g} near t = {t[bad[0]]:.6g}; "
                              "loop is not C^2", 1, t[bad])


def loop_check(M: ManifoldModel, x: SampledCurve, tol_loop=TOL_LOOP, tol_angle=TOL_ANGLE,
               tol_close=1e-6, allow_open=False) -> LoopReport:
    """Holonomy, total turning and closure integral of a C^2 loop on a surface.

    config_loop: trivial holonomy and vanishing closure integral
    ``int exp(i int_0^t k_g) dt``; c1_loop additionally needs the total
    turning to be a multiple of 2 pi.  ``allow_open`` accepts open curves,
    which are reported with config_loop false.
    """
    if M.n != 2:
        raise ValueError("loop diagnostics need a 2-dimensional manifold")
    closed = bool(np.max(np.abs(x.xi[-1] - x.xi[0])) < tol_close)
    if not closed and not allow_open:
        raise ValueError("curve is not closed")
    c = _unit_speed(M, x)
    kg = geodesic_curvature(M, c)
    _check_smooth_kg(kg, c.t)
    v = cumulative_simpson(kg, x=c.t, initial=0.0)
    alpha = float(simpson(kg, x=c.t))
    closure = complex(simpson(np.exp(1j * v), x=c.t))
    fr = parallel_frame(M, c)
    H = fr.R[0].T @ fr.R[-1]
    theta = wrap_angle(np.arctan2(H[1, 0], H[0, 0]))
    length = c.span
    config = closed and abs(theta) < tol_angle and abs(closure) < tol_loop * max(1.0, length)
    c1 = config and abs(wrap_angle(alpha)) < tol_angle
    return LoopReport(theta, alpha, closure, bool(config), bool(c1), closed, length,
                      wrap_angle(alpha + theta))


@dataclass
class LoopInQ:
    in_q: bool
    angle: float
    angle_hat: float
    discrepancy: float


def loop_in_Q(M: ManifoldModel, x: SampledCurve, Mh: ManifoldModel, xh: SampledCurve,
              tol_angle=TOL_ANGLE, allow_open=False) -> LoopInQ:
    """Whether rolling along the loops closes up in the configuration space.

    A rolling carries x's parallel frame to a parallel frame along xh and
    keeps the tangent at the same angle ``v(t)`` in both, so the oriented
    angles from the initial to the final tangent are ``alpha + theta`` and
    ``alpha + theta_hat`` with the common turning ``alpha`` of x.  The rolling
    is a loop iff both curves close and the holonomies agree.
    """
    r = loop_check(M, x, allow_open=allow_open)
    rh = loop_check(Mh, xh, allow_open=allow_open)
    gap = wrap_angle(rh.theta - r.theta)
    ok = r.closed and rh.closed and abs(gap) < tol_angle
    return LoopInQ(bool(ok), wrap_angle(r.alpha + r.theta), wrap_angle(r.alpha + rh.theta), gap)


# ------------------------------------------------------------------ junctions


def _frame_near(M, piece: SampledCurve, at_end: bool, max_gap, eps_reg):
    c = reparametrize_arclength(M, piece)
    data = frenet_apparatus(M, c, eps_reg)
    ok = np.nonzero(data.valid)[0]
    if ok.size == 0:
        raise RegularityError("Frenet frame undefined on the whole piece", data.regular_order)
    i = ok[-1] if at_end else ok[0]
    gap = (c.span - c.t[i]) if at_end else c.t[i]
    if gap > max_gap * c.span:
        raise RegularityError(f"Frenet frame cannot be extended to the junction (nearest regular point "
                              f"{gap:.3g} away)", data.regular_order)
    return data.v[i], gap


@dataclass
class Junction:
    G: np.ndarray
    norm: float
    gaps: tuple


def junction_compatibility(M: ManifoldModel, Mh: ManifoldModel, x: SampledCurve, xh: SampledCurve, b,
                           max_gap=0.25, eps_reg=EPS_REG) -> Junction:
    """G_ij = <v_i(b), w_j(b)> - <v_hat_i(b), w_hat_j(b)>.

    v and w are the Frenet frames of the pieces before and after ``b``,
    extended to ``b`` from the nearest sample where they are defined.
    A rolling along the pair needs G = 0.
    """
    out = []
    gaps = []
    for model, curve in ((M, x), (Mh, xh)):
        left = curve.restrict(curve.t[0], b)
        right = curve.restrict(b, curve.t[-1])
        if len(left) < 5 or len(right) < 5:
            raise ValueError("junction too close to an end of the curve")
        v, g1 = _frame_near(model, left, True, max_gap, eps_reg)
        w, g2 = _frame_near(model, right, False, max_gap, eps_reg)
        out.append(v.T @ w)
        gaps += [g1, g2]
    G = out[0] - out[1]
    return Junction(G, float(np.max(np.abs(G))), tuple(gaps))


# ------------------------------------------------------------------ rank


@dataclass
class ParallelRank:
    rank: int
    singular_values: np.ndarray
    margin_above: float         # sigma_k / threshold
    margin_below: float         # threshold / sigma_{k+1}

    def __int__(self):
        return self.rank


def minimal_parallel_rank(M: ManifoldModel, x: SampledCurve, eps_reg=EPS_REG) -> ParallelRank:
    """Numerical rank of the anti-development velocity samples."""
    y = antidevelop(M, x).y
    S = np.linalg.svd(y.dxi, compute_uv=False)
    if S.size == 0 or S[0] < 1e-14:
        return ParallelRank(0, S, np.inf, np.inf)
    cut = eps_reg * S[0]
    k = int(np.sum(S > cut))
    above = S[k - 1] / cut
    below = cut / S[k] if k < S.size and S[k] > 0 else np.inf
    return ParallelRank(k, S, float(above), float(below))


# ------------------------------------------------------------------ Euclidean motions


@dataclass
class IsometryFit:
    accepted: bool
    rotation: np.ndarray
    translation: np.ndarray
    residual: float
    orientation_flag: bool


def extract_euclidean_isometry(x: SampledCurve, xh: SampledCurve, tol_gen=TOL_GEN) -> IsometryFit:
    """Rotation and translation with xh = R x + b, or a rejection.

    A best orthogonal fit with determinant -1 (mirror image) is rejected with
    ``orientation_flag`` set.
    """
    if not np.array_equal(x.t, xh.t):
        raise ValueError("curves must share the parameter grid")
    fit = procrustes_rotation(x.dxi, xh.dxi, trapezoid_weights(x.t))
    R = fit.rotation
    b = xh.xi[0] - R @ x.xi[0]
    residual = float(np.max(np.linalg.norm(xh.xi - (x.xi @ R.T + b), axis=1)))
    length = float(np.sum(trapezoid_weights(x.t) * np.linalg.norm(x.dxi, axis=1)))
    ok = residual < tol_gen * max(length, 1e-300) and not fit.reflection_preferred
    return IsometryFit(bool(ok), R, b, residual, fit.reflection_preferred)
