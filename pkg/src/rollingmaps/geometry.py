"""Chart-based manifold models.

A model is a single chart with coordinates ``xi`` together with an
orthonormal frame field ``e_j = sum_i phi[i, j] d/dxi_i`` and the
Christoffel matrices of the Levi-Civita connection in that frame,
``Gamma[k][i, j] = <e_i, nabla_{e_k} e_j>``.  Tangent vectors are mostly
handled through their *frame components* ``u = phi^+ xi_dot``.

Everything here is vectorised over leading axes of ``xi``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .numerics import ChartDomainError

__all__ = [
    "ManifoldModel",
    "ModelReport",
    "builtin_manifold",
    "check_model",
    "from_frame_field",
    "grid_manifold",
    "inner_product",
    "quat_mul",
    "quat_conj",
    "su2_matrix",
    "sphere_to_stereo",
    "stereo_to_sphere",
]

BUILTINS = ("euclidean", "sphere_stereo", "hyperbolic_halfplane", "su2")


@dataclass(frozen=True)
class ManifoldModel:
    name: str
    n: int
    coord_dim: int
    frame_fn: Callable
    christoffel_fn: Callable
    domain_fn: Callable
    connection_fn: Optional[Callable] = None
    normalize_fn: Optional[Callable] = None
    params: dict = field(default_factory=dict)

    # -- frame and connection -------------------------------------------------

    def frame(self, xi):
        return self.frame_fn(np.asarray(xi, dtype=float))

    def christoffel(self, xi):
        """Array of shape (..., n, n, n); entry [k, i, j] is Gamma^i_{kj}."""
        return self.christoffel_fn(np.asarray(xi, dtype=float))

    def connection(self, xi, u):
        """Connection matrix ``sum_k u_k Gamma_k`` along frame components ``u``."""
        xi = np.asarray(xi, dtype=float)
        u = np.asarray(u, dtype=float)
        if self.connection_fn is not None:
            return self.connection_fn(xi, u)
        return np.einsum("...k,...kij->...ij", u, self.christoffel(xi))

    def frame_components(self, xi, v):
        phi = self.frame(xi)
        v = np.asarray(v, dtype=float)
        if self.coord_dim == self.n:
            return np.linalg.solve(phi, v[..., None])[..., 0]
        pt = np.swapaxes(phi, -1, -2)
        return np.linalg.solve(pt @ phi, (pt @ v[..., None]))[..., 0]

    def chart_vector(self, xi, u):
        return (self.frame(xi) @ np.asarray(u, dtype=float)[..., None])[..., 0]

    # -- chart domain ---------------------------------------------------------

    def in_domain(self, xi):
        xi = np.asarray(xi, dtype=float)
        return np.all(np.isfinite(xi), axis=-1) & self.domain_fn(xi)

    def require_domain(self, xi, what="point"):
        ok = self.in_domain(xi)
        if not np.all(ok):
            raise ChartDomainError(f"{what} outside the chart domain of {self.name}")

    def normalize(self, xi):
        if self.normalize_fn is None:
            return np.asarray(xi, dtype=float)
        return self.normalize_fn(np.asarray(xi, dtype=float))

    def reversed_orientation(self):
        """Same manifold with the last frame vector negated (opposite orientation)."""
        sign = np.ones(self.n)
        sign[-1] = -1.0
        base = self

        def frame(xi):
            return base.frame(xi) * sign

        def christoffel(xi):
            G = base.christoffel(xi)
            return G * sign[:, None, None] * sign[None, :, None] * sign[None, None, :]

        return ManifoldModel(self.name + "~", self.n, self.coord_dim, frame, christoffel,
                             self.domain_fn, None, self.normalize_fn, dict(self.params))


def inner_product(M: ManifoldModel, xi, v, w):
    """Riemannian inner product of chart vectors ``v`` and ``w`` at ``xi``."""
    M.require_domain(xi)
    a = M.frame_components(xi, v)
    b = M.frame_components(xi, w)
    return np.sum(a * b, axis=-1)


# ------------------------------------------------------------------ builtins


def _conformal(name, n, scale, grad, domain, params):
    """Model with frame ``phi = scale(xi) I``; metric ``scale^-2 delta``."""
    eye = np.eye(n)

    def frame(xi):
        return scale(xi)[..., None, None] * eye

    def christoffel(xi):
        g = grad(xi)
        # Gamma_k = grad(s) e_k^T - e_k grad(s)^T
        return g[..., None, :, None] * eye[:, None, :] - eye[:, :, None] * g[..., None, None, :]

    def connection(xi, u):
        g = np.broadcast_to(grad(xi), np.broadcast_shapes(np.shape(xi), np.shape(u)))
        return g[..., :, None] * u[..., None, :] - u[..., :, None] * g[..., None, :]

    return ManifoldModel(name, n, n, frame, christoffel, domain, connection, None, params)


def _euclidean(n):
    return _conformal(
        "euclidean", n,
        lambda xi: np.ones(xi.shape[:-1]),
        lambda xi: np.zeros(xi.shape),
        lambda xi: np.ones(xi.shape[:-1], dtype=bool),
        {"n": n},
    )


def _sphere_stereo(n, bound=1e3):
    # chart xi = (r_1..r_n) / (1 + r_0) on the unit sphere, centred at (1, 0, .., 0)
    return _conformal(
        "sphere_stereo", n,
        lambda xi: 0.5 * (1.0 + np.sum(xi * xi, axis=-1)),
        lambda xi: xi,
        lambda xi: np.sum(xi * xi, axis=-1) < bound * bound,
        {"n": n, "bound": bound},
    )


def _hyperbolic_halfplane(margin=1e-8):
    e2 = np.array([0.0, 1.0])
    return _conformal(
        "hyperbolic_halfplane", 2,
        lambda xi: xi[..., 1],
        lambda xi: np.broadcast_to(e2, xi.shape),
        lambda xi: xi[..., 1] > margin,
        {"n": 2, "margin": margin},
    )


# Left-invariant fields on unit quaternions g = g0 + g1 i + g2 j + g3 k:
# X_1(g) = g i, X_2(g) = g j, X_3(g) = g k, written as linear maps of g.
SU2_FIELDS = np.array([
    [[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]],
    [[0, 0, -1, 0], [0, 0, 0, -1], [1, 0, 0, 0], [0, 1, 0, 0]],
    [[0, 0, 0, -1], [0, 0, 1, 0], [0, -1, 0, 0], [1, 0, 0, 0]],
], dtype=float)


def _cross_matrices(u):
    u = np.asarray(u, dtype=float)
    z = np.zeros(u.shape[:-1])
    return np.stack([
        np.stack([z, -u[..., 2], u[..., 1]], axis=-1),
        np.stack([u[..., 2], z, -u[..., 0]], axis=-1),
        np.stack([-u[..., 1], u[..., 0], z], axis=-1),
    ], axis=-2)


def _su2():
    # nabla_{X_k} X_j = 1/2 [X_k, X_j] = eps_{kjm} X_m, i.e. Gamma_k = [e_k]_x
    gamma = _cross_matrices(np.eye(3))

    def frame(g):
        return np.einsum("jab,...b->...aj", SU2_FIELDS, g)

    def christoffel(g):
        return np.broadcast_to(gamma, g.shape[:-1] + (3, 3, 3))

    def connection(g, u):
        return _cross_matrices(u)

    def normalize(g):
        return g / np.linalg.norm(g, axis=-1, keepdims=True)

    return ManifoldModel(
        "su2", 3, 4, frame, christoffel,
        lambda g: np.abs(np.linalg.norm(g, axis=-1) - 1.0) < 0.5,
        connection, normalize, {"n": 3},
    )


def builtin_manifold(name: str, n: Optional[int] = None, **params) -> ManifoldModel:
    """Construct one of the built-in models.

    ``euclidean`` and ``sphere_stereo`` need ``n``; ``hyperbolic_halfplane``
    is 2-dimensional and ``su2`` (unit quaternions, left-invariant frame) is
    3-dimensional.  ``hyperbolic_halfplane`` is an extra model for
    cross-validation: frame ``xi_2 I`` on the upper half plane.
    """
    if name not in BUILTINS:
        raise ValueError(f"unknown manifold {name!r}; expected one of {', '.join(BUILTINS)}")
    if name in ("euclidean", "sphere_stereo"):
        if n is None or int(n) != n or n < 1:
            raise ValueError(f"{name} requires an integer dimension n >= 1")
        n = int(n)
        if name == "euclidean":
            return _euclidean(n)
        return _sphere_stereo(n, float(params.get("bound", 1e3)))
    if name == "hyperbolic_halfplane":
        if n not in (None, 2):
            raise ValueError("hyperbolic_halfplane is 2-dimensional")
        return _hyperbolic_halfplane(float(params.get("margin", 1e-8)))
    if n not in (None, 3):
        raise ValueError("su2 requires n=3")
    return _su2()


# ------------------------------------------------------------------ user models


def _central4(f, x, h):
    """Fourth-order central derivative of ``f`` at ``x`` along every coordinate axis.

    Returns an array with a new leading axis indexing the coordinate.
    """
    x = np.asarray(x, dtype=float)
    out = []
    for a in range(x.shape[-1]):
        e = np.zeros(x.shape[-1])
        e[a] = h
        out.append((-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12 * h))
    return np.stack(out)


def _bracket_christoffel(frame_fn, n, h):
    """Christoffel matrices from Lie brackets of the frame (Koszul formula)."""

    def christoffel(xi):
        xi = np.asarray(xi, dtype=float)
        if xi.ndim > 1:
            return np.stack([christoffel(p) for p in xi.reshape(-1, xi.shape[-1])]).reshape(
                xi.shape[:-1] + (n, n, n))
        phi = frame_fn(xi)
        dphi = _central4(frame_fn, xi, h)  # [a, b, j] = d phi_bj / d xi_a
        # directional derivative of e_j along e_k: sum_a phi_ak dphi[a, :, j]
        D = np.einsum("ak,abj->kbj", phi, dphi)  # [k, b, j]
        br = np.einsum("kbj->kjb", D) - np.einsum("jbk->kjb", D)  # [e_k, e_j] chart comps, [k, j, b]
        c = np.linalg.solve(phi, br.reshape(-1, n).T).T.reshape(n, n, n)  # c[k, j, i] = <[e_k,e_j], e_i>
        # 2 G^i_{kj} = c[k,j,i] - c[k,i,j] - c[j,i,k]
        G = 0.5 * (np.einsum("kji->kij", c) - np.einsum("kij->kij", c) - np.einsum("jik->kij", c))
        return G

    return christoffel


def from_frame_field(name: str, n: int, frame_fn: Callable, christoffel_fn: Optional[Callable] = None,
                     domain_fn: Optional[Callable] = None, h: float = 1e-5, **params) -> ManifoldModel:
    """User-supplied square chart model.

    Without ``christoffel_fn`` the connection is obtained from central
    fourth-order differences (step ``h``) of the frame via its Lie brackets.
    """
    if christoffel_fn is None:
        christoffel_fn = _bracket_christoffel(frame_fn, n, h)
    if domain_fn is None:
        def domain_fn(xi):
            return np.ones(np.shape(xi)[:-1], dtype=bool)
    return ManifoldModel(name, n, n, frame_fn, christoffel_fn, domain_fn, None, None,
                         dict(params, n=n, h=h))


def grid_manifold(name: str, axes, phi_values, h: float = 1e-5) -> ManifoldModel:
    """Model whose frame field is tabulated on a regular grid.

    ``axes`` is a list of n increasing 1-D coordinate arrays, ``phi_values`` an
    array of shape (len(axes[0]), ..., n, n).  The frame is interpolated with
    cubic splines; the domain is the interior of the grid box.
    """
    from scipy.interpolate import RegularGridInterpolator

    n = len(axes)
    vals = np.asarray(phi_values, dtype=float).reshape(tuple(len(a) for a in axes) + (n * n,))
    method = "cubic" if all(len(a) >= 4 for a in axes) else "linear"
    interp = RegularGridInterpolator([np.asarray(a, float) for a in axes], vals, method=method)
    lo = np.array([a[0] for a in axes], dtype=float)
    hi = np.array([a[-1] for a in axes], dtype=float)
    margin = 2.5 * h

    def frame(xi):
        xi = np.asarray(xi, dtype=float)
        flat = xi.reshape(-1, n)
        return interp(flat).reshape(xi.shape[:-1] + (n, n))

    def domain(xi):
        return np.all((xi > lo + margin) & (xi < hi - margin), axis=-1)

    return from_frame_field(name, n, frame, None, domain, h)


# ------------------------------------------------------------------ diagnostics


@dataclass
class ModelReport:
    antisymmetry: list
    min_det: Optional[float]
    max_condition: float
    levi_civita_residual: Optional[float]

    @property
    def max_antisymmetry(self):
        return max(self.antisymmetry) if self.antisymmetry else 0.0


def _metric_oracle(M, xi, h):
    """Gamma from finite differences of the metric g = (phi phi^T)^-1 (square charts)."""
    n = M.n

    def metric(p):
        phi = M.frame(p)
        return np.linalg.inv(phi @ np.swapaxes(phi, -1, -2))

    g = metric(xi)
    ginv = np.linalg.inv(g)
    dg = _central4(metric, xi, h)  # [a, d, c] = d_a g_dc
    # chart Christoffels C[b, a, c] = 1/2 g^{bd} (d_a g_dc + d_c g_da - d_d g_ac)
    T = dg.transpose(1, 0, 2) + dg.transpose(1, 2, 0) - dg  # [d, a, c]
    C = 0.5 * np.einsum("bd,dac->bac", ginv, T)
    phi = M.frame(xi)
    dphi = _central4(M.frame, xi, h)  # [a, b, j]
    # nabla_{e_k} e_j = sum_a phi_ak (d_a phi_bj + sum_c phi_cj C^b_ac) d_b
    nab = np.einsum("ak,abj->kbj", phi, dphi) + np.einsum("ak,cj,bac->kbj", phi, phi, C)
    comps = np.linalg.solve(phi, nab.transpose(1, 0, 2).reshape(n, n * n)).reshape(n, n, n)
    return comps.transpose(1, 0, 2)  # [k, i, j]


def _embedded_oracle(M, xi, h):
    """Gamma for a chart that is an isometric embedding: tangential part of ambient derivatives."""
    phi = M.frame(xi)
    dphi = _central4(M.frame, xi, h)  # [a, b, j]
    D = np.einsum("ak,abj->kbj", phi, dphi)
    return np.einsum("bi,kbj->kij", phi, D)


def check_model(M: ManifoldModel, sample_points, h: float = 1e-5) -> ModelReport:
    """Report antisymmetry of each Gamma_k, frame determinant/conditioning and
    the deviation from a finite-difference Levi-Civita oracle."""
    pts = np.atleast_2d(np.asarray(sample_points, dtype=float))
    G = M.christoffel(pts)
    anti = [float(np.max(np.abs(G[:, k] + np.swapaxes(G[:, k], -1, -2)))) for k in range(M.n)]
    phi = M.frame(pts)
    if M.coord_dim == M.n:
        min_det = float(np.min(np.linalg.det(phi)))
        oracle = _metric_oracle
    else:
        min_det = None
        oracle = _embedded_oracle
    cond = float(np.max(np.linalg.cond(phi)))
    resid = 0.0
    for p, Gp in zip(pts, G):
        resid = max(resid, float(np.max(np.abs(oracle(M, p, h) - Gp))))
    return ModelReport(anti, min_det, cond, resid)


# ------------------------------------------------------------------ helpers


def quat_mul(p, q):
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    p0, p1, p2, p3 = np.moveaxis(p, -1, 0)
    q0, q1, q2, q3 = np.moveaxis(q, -1, 0)
    return np.stack([
        p0 * q0 - p1 * q1 - p2 * q2 - p3 * q3,
        p0 * q1 + p1 * q0 + p2 * q3 - p3 * q2,
        p0 * q2 - p1 * q3 + p2 * q0 + p3 * q1,
        p0 * q3 + p1 * q2 - p2 * q1 + p3 * q0,
    ], axis=-1)


def quat_conj(q):
    q = np.asarray(q, dtype=float)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def su2_matrix(g):
    """The 2x2 complex matrix [[g0 + i g1, g2 + i g3], [-g2 + i g3, g0 - i g1]]."""
    g0, g1, g2, g3 = np.moveaxis(np.asarray(g, dtype=float), -1, 0)
    return np.stack([
        np.stack([g0 + 1j * g1, g2 + 1j * g3], axis=-1),
        np.stack([-g2 + 1j * g3, g0 - 1j * g1], axis=-1),
    ], axis=-2)


def stereo_to_sphere(xi, dxi=None):
    """Point (and velocity) on the unit sphere in R^{n+1} from stereographic coordinates."""
    xi = np.asarray(xi, dtype=float)
    s = np.sum(xi * xi, axis=-1, keepdims=True)
    r = np.concatenate([(1 - s) / (1 + s), 2 * xi / (1 + s)], axis=-1)
    if dxi is None:
        return r
    dxi = np.asarray(dxi, dtype=float)
    ds = 2 * np.sum(xi * dxi, axis=-1, keepdims=True)
    dr0 = -2 * ds / (1 + s) ** 2
    drest = 2 * dxi / (1 + s) - 2 * xi * ds / (1 + s) ** 2
    return r, np.concatenate([dr0, drest], axis=-1)


def sphere_to_stereo(r, dr=None):
    """Stereographic coordinates xi = (r_1..r_n) / (1 + r_0) (and their velocity)."""
    r = np.asarray(r, dtype=float)
    d = 1 + r[..., :1]
    xi = r[..., 1:] / d
    if dr is None:
        return xi
    dr = np.asarray(dr, dtype=float)
    return xi, dr[..., 1:] / d - r[..., 1:] * dr[..., :1] / d ** 2
