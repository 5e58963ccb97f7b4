"""Covariant derivatives along sampled curves, Frenet frames and geodesic curvatures."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .curves import SampledCurve, cumulative_length, frame_velocity, speed
from .geometry import ManifoldModel
from .numerics import RegularityError, derivative, gauss_legendre_panels, generalized_cross, interior_mask

EPS_REG = 1e-7
EPS_SPEED = 1e-10


def covariant_derivative(M: ManifoldModel, c: SampledCurve, w, u=None):
    """``D/dt w = dw/dt + sum_k u_k Gamma_k w`` for frame-component samples ``w`` on ``c``'s grid."""
    w = np.asarray(w, dtype=float)
    if len(c) < 5:
        raise ValueError("grid too short for covariant differentiation (need >= 5 points)")
    if u is None:
        u = frame_velocity(M, c)
    W = M.connection(c.xi, u)
    return derivative(c.t, w) + np.einsum("tij,tj->ti", W, w)


def curvature_matrix(kappa):
    """Antisymmetric tridiagonal K with K[j+1, j] = kappa_j and K[j, j+1] = -kappa_j."""
    kappa = np.asarray(kappa, dtype=float)
    n = kappa.shape[-1] + 1
    K = np.zeros(kappa.shape[:-1] + (n, n))
    j = np.arange(n - 1)
    K[..., j + 1, j] = kappa
    K[..., j, j + 1] = -kappa
    return K


@dataclass
class FrenetData:
    t: np.ndarray
    v: np.ndarray             # (N, n, n); column j is v_{j+1} in frame components
    kappa: np.ndarray         # (N, n-1)
    regular_order: int
    valid: np.ndarray         # points where v_1..v_n are all defined
    failure_time: Optional[float] = None

    @property
    def K(self):
        return curvature_matrix(np.nan_to_num(self.kappa))

    @property
    def complete(self):
        return self.failure_time is None


def frenet_apparatus(M: ManifoldModel, c: SampledCurve, eps_reg=EPS_REG, strict=False,
                     speed_tol=1e-6) -> FrenetData:
    """Frenet fields and geodesic curvatures of a unit-speed curve.

    v_2..v_{n-1} come from the recursion with Gram-Schmidt clean-up, v_n
    completes a positively oriented basis and kappa_{n-1} is signed.  Where a
    curvature kappa_j (j <= n-2) drops below ``eps_reg`` the later fields are
    undefined (NaN) and ``failure_time`` records the first such time; with
    ``strict`` a :class:`RegularityError` is raised instead.
    """
    n = M.n
    u = frame_velocity(M, c)
    sp = np.linalg.norm(u, axis=1)
    if np.max(np.abs(sp - 1.0)) > speed_tol:
        raise ValueError("frenet_apparatus needs a unit-speed curve; reparametrize by arc length first")
    N = len(c)
    V = np.full((N, n, n), np.nan)
    kappa = np.full((N, n - 1), np.nan)
    V[:, :, 0] = u / sp[:, None]
    order = 1
    failure = None
    broken = False
    ok = np.ones(N, dtype=bool)
    for j in range(n - 1):  # builds v_{j+2} and kappa_{j+1}
        w = covariant_derivative(M, c, V[:, :, j], u)
        if j > 0:
            w = w + kappa[:, j - 1, None] * V[:, :, j - 1]
        if j < n - 2:
            for i in range(j + 1):
                w = w - np.sum(w * V[:, :, i], axis=1)[:, None] * V[:, :, i]
            k = np.linalg.norm(w, axis=1)
            good = ok & (k > eps_reg)
            kappa[:, j] = np.where(ok, k, np.nan)
            V[:, :, j + 1] = np.where(good[:, None], w / np.where(good, k, 1.0)[:, None], np.nan)
        else:
            rows = np.all(np.isfinite(V[:, :, : n - 1]), axis=(1, 2))
            top = np.full((N, n), np.nan)
            top[rows] = generalized_cross(V[rows, :, : n - 1])
            top[rows] /= np.linalg.norm(top[rows], axis=1)[:, None]
            V[:, :, n - 1] = top
            k = np.sum(top * w, axis=1)
            kappa[:, j] = k
            good = ok & np.isfinite(k) & (np.abs(k) > eps_reg)
        if not broken and np.all(good):
            order = max(order, j + 1)
        else:
            broken = True
        if j < n - 2:
            if failure is None and not np.all(good):
                failure = float(c.t[np.argmax(~good)])
            ok = good
    valid = np.all(np.isfinite(V.reshape(N, -1)), axis=1)
    if failure is None and not np.all(valid):
        failure = float(c.t[np.argmax(~valid)])
    data = FrenetData(c.t.copy(), V, kappa, order, valid, failure)
    if strict and failure is not None:
        raise RegularityError(f"Frenet frame undefined from t = {failure:.6g} on", order, [failure])
    return data


def frenet_residual(M: ManifoldModel, c: SampledCurve, data: FrenetData, margin=2):
    """Max over interior points of |D v_j + kappa_{j-1} v_{j-1} - kappa_j v_{j+1}|, j = 1..n."""
    n = M.n
    N = len(c)
    k = np.concatenate([np.zeros((N, 1)), data.kappa, np.zeros((N, 1))], axis=1)
    worst = 0.0
    mask = interior_mask(N, margin) & data.valid
    u = frame_velocity(M, c)
    for j in range(n):
        r = covariant_derivative(M, c, data.v[:, :, j], u)
        if j > 0:
            r = r + k[:, j, None] * data.v[:, :, j - 1]
        if j < n - 1:
            r = r - k[:, j + 1, None] * data.v[:, :, j + 1]
        worst = max(worst, float(np.max(np.linalg.norm(r[mask], axis=1), initial=0.0)))
    return worst


def geodesic_curvature(M: ManifoldModel, c: SampledCurve):
    """Oriented geodesic curvature of a curve on a surface, any regular parametrisation.

    ``<D/dt x', J x'> / |x'|^3`` with ``J`` the rotation by +pi/2 in frame components.
    """
    if M.n != 2:
        raise ValueError("geodesic_curvature is defined for surfaces")
    u = frame_velocity(M, c)
    acc = covariant_derivative(M, c, u, u)
    nu = np.stack([-u[:, 1], u[:, 0]], axis=1)
    return np.sum(acc * nu, axis=1) / np.linalg.norm(u, axis=1) ** 3


@dataclass
class Regularity:
    order: int
    failures: np.ndarray      # times where order + 1 fails
    ratios: np.ndarray        # (N, n-1): sigma_min/sigma_max of {x', .., D^k x'} for k = 1..n-1

    def __int__(self):
        return self.order


def regularity_order(M: ManifoldModel, c: SampledCurve, eps_reg=EPS_REG) -> Regularity:
    """Largest k such that x', D x', .., D^k x' are independent at every grid point.

    A curve with non-vanishing speed is reported as at least order 1, so a
    geodesic gives 1 with failures everywhere for order 2.
    """
    n = M.n
    u = frame_velocity(M, c)
    if np.min(np.linalg.norm(u, axis=1)) < EPS_SPEED:
        bad = c.t[np.linalg.norm(u, axis=1) < EPS_SPEED]
        return Regularity(0, bad, np.zeros((len(c), max(n - 1, 0))))
    ders = [u]
    for _ in range(n - 1):
        ders.append(covariant_derivative(M, c, ders[-1], u))
    ratios = np.zeros((len(c), n - 1))
    for k in range(1, n):
        S = np.linalg.svd(np.stack(ders[: k + 1], axis=2), compute_uv=False)
        ratios[:, k - 1] = S[:, -1] / S[:, 0]
    order = 1
    failures = np.asarray([], dtype=float)
    for k in range(1, n):
        bad = ratios[:, k - 1] <= eps_reg
        if np.any(bad):
            failures = c.t[bad]
            break
        order = max(order, k)
    return Regularity(order, failures, ratios)


def reparametrize_arclength(M: ManifoldModel, c: SampledCurve, num=None) -> SampledCurve:
    """Unit-speed reparametrisation on a uniform arc-length grid starting at 0."""
    sp = speed(M, c)
    if np.min(sp) < EPS_SPEED:
        raise RegularityError("vanishing derivative; cannot reparametrize by arc length", 0,
                              c.t[sp < EPS_SPEED])
    s_nodes = cumulative_length(M, c)
    L = float(s_nodes[-1])
    t_nodes = c.t

    def inverse(sigma):
        sigma = np.clip(np.asarray(sigma, dtype=float), 0.0, L)
        idx = np.clip(np.searchsorted(s_nodes, sigma, side="right") - 1, 0, len(t_nodes) - 2)
        a, b = t_nodes[idx], t_nodes[idx + 1]
        sa, sb = s_nodes[idx], s_nodes[idx + 1]
        t = a + (b - a) * (sigma - sa) / np.where(sb > sa, sb - sa, 1.0)
        for _ in range(8):
            part = gauss_legendre_panels(lambda s: speed(M, c, s), a, t)
            step = (sa + part - sigma) / speed(M, c, t)
            t = np.clip(t - step, a, b)
            if np.max(np.abs(step), initial=0.0) < 1e-15 * max(1.0, abs(c.span)):
                break
        return t

    def func(sigma):
        t = inverse(sigma)
        x, dx = c(t)
        return x, dx / speed(M, c, t)[..., None]

    count = len(c) if num is None else int(num)
    grid = np.linspace(0.0, L, count)
    x, dx = func(grid)
    x[0], x[-1] = c.xi[0], c.xi[-1]
    return SampledCurve(grid, x, dx, True, c.closed, func, c.label)
