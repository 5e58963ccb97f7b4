"""Sampled curves in a chart, and the built-in analytic curve families.

A :class:`SampledCurve` stores chart coordinates and their derivatives on a
strictly increasing grid.  Curves built from a formula keep the (vectorised)
formula so integrators can evaluate them exactly between grid points; other
curves are interpolated with cubic Hermite splines.
"""
from __future__ import annotations

import inspect
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.special import fresnel

from .geometry import ManifoldModel, sphere_to_stereo
from .numerics import ChartDomainError, check_grid, derivative, gauss_legendre_panels

DEFAULT_INTERVALS = 10000


@dataclass
class SampledCurve:
    t: np.ndarray
    xi: np.ndarray
    dxi: np.ndarray
    arc_length: bool = False
    closed: bool = False
    func: Optional[Callable] = None
    label: str = ""
    _spline: Optional[CubicHermiteSpline] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.t = check_grid(self.t)
        self.xi = np.asarray(self.xi, dtype=float)
        self.dxi = np.asarray(self.dxi, dtype=float)
        if self.xi.ndim != 2 or self.xi.shape[0] != self.t.size or self.dxi.shape != self.xi.shape:
            raise ValueError("xi and dxi must have shape (len(t), dim)")

    @property
    def dim(self):
        return self.xi.shape[1]

    @property
    def span(self):
        return float(self.t[-1] - self.t[0])

    def __len__(self):
        return self.t.size

    def __call__(self, s):
        """Chart point and velocity at parameter(s) ``s``."""
        s = np.asarray(s, dtype=float)
        if self.func is not None:
            return self.func(s)
        if self._spline is None:
            self._spline = CubicHermiteSpline(self.t, self.xi, self.dxi, axis=0)
        return self._spline(s), self._spline(s, 1)

    def reversed(self):
        """Same trace traversed backwards, on the grid ``-t[::-1]``."""
        f = None
        if self.func is not None:
            base = self.func

            def f(s):
                x, dx = base(-np.asarray(s, dtype=float))
                return x, -dx
        return SampledCurve(-self.t[::-1], self.xi[::-1].copy(), -self.dxi[::-1], self.arc_length,
                            self.closed, f, self.label + "~")

    def restrict(self, a, b):
        """Piece of the curve on the grid points with a <= t <= b."""
        m = (self.t >= a - 1e-12) & (self.t <= b + 1e-12)
        return SampledCurve(self.t[m], self.xi[m], self.dxi[m], self.arc_length, False, self.func,
                            self.label)

    def resample(self, t_new):
        t_new = np.asarray(t_new, dtype=float)
        x, dx = self(t_new)
        return SampledCurve(t_new, x, dx, self.arc_length, self.closed, self.func, self.label)

    def with_flags(self, **flags):
        return replace(self, **flags)


def from_function(func: Callable, t, arc_length=False, closed=False, label="") -> SampledCurve:
    """Sample a vectorised ``func(t) -> (xi, dxi)`` on grid ``t``."""
    t = check_grid(t)
    xi, dxi = func(t)
    return SampledCurve(t, xi, dxi, arc_length, closed, func, label)


def from_samples(t, xi, dxi=None, closed=False, label="") -> SampledCurve:
    """Curve from tabulated points; missing derivatives are finite-differenced."""
    t = check_grid(t)
    xi = np.asarray(xi, dtype=float)
    if xi.ndim == 1:
        xi = xi[:, None]
    if dxi is None:
        dxi = derivative(t, xi)
    return SampledCurve(t, xi, dxi, False, closed, None, label)


# ------------------------------------------------------------------ measurements


def frame_velocity(M: ManifoldModel, c: SampledCurve, s=None):
    """Frame components u of the velocity, at the grid or at parameters ``s``."""
    if s is None:
        return M.frame_components(c.xi, c.dxi)
    x, dx = c(s)
    return M.frame_components(x, dx)


def speed(M: ManifoldModel, c: SampledCurve, s=None):
    return np.linalg.norm(frame_velocity(M, c, s), axis=-1)


def cumulative_length(M: ManifoldModel, c: SampledCurve):
    """Arc length from t[0] to each grid point (3-point Gauss-Legendre per panel)."""
    panels = gauss_legendre_panels(lambda s: speed(M, c, s), c.t[:-1], c.t[1:])
    return np.concatenate([[0.0], np.cumsum(panels)])


def curve_length(M: ManifoldModel, c: SampledCurve) -> float:
    return float(cumulative_length(M, c)[-1])


def validate_curve(M: ManifoldModel, c: SampledCurve, tol_speed=1e-8, tol_close=1e-6):
    """Check the curve invariants; raises on the first violation."""
    if c.dim != M.coord_dim:
        raise ValueError(f"curve has {c.dim} coordinates, {M.name} chart has {M.coord_dim}")
    bad = ~M.in_domain(c.xi)
    if np.any(bad):
        raise ChartDomainError(f"curve leaves the chart domain of {M.name}", float(c.t[np.argmax(bad)]))
    if c.arc_length:
        dev = np.max(np.abs(speed(M, c) - 1.0))
        if dev >= tol_speed:
            raise ValueError(f"curve flagged arc-length but speed deviates from 1 by {dev:.3g}")
    if c.closed:
        gap = np.max(np.abs(c.xi[0] - c.xi[-1]))
        if gap >= tol_close:
            raise ValueError(f"curve flagged closed but endpoints differ by {gap:.3g}")
    return c


def is_closed(c: SampledCurve, tol=1e-6):
    return bool(np.max(np.abs(c.xi[0] - c.xi[-1])) < tol)


# ------------------------------------------------------------------ families


def _grid(length, num=None, step=None, start=0.0):
    if num is None:
        num = DEFAULT_INTERVALS + 1 if step is None else int(np.ceil(abs(length) / step - 1e-9)) + 1
    return np.linspace(start, start + length, max(int(num), 5))


def _embed(v, n):
    if n < v.shape[-1]:
        raise ValueError("dimension too small for this curve family")
    pad = np.zeros(v.shape[:-1] + (n - v.shape[-1],))
    return np.concatenate([v, pad], axis=-1)


def line(length=1.0, direction=(1.0, 0.0), start=None, num=None, step=None):
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    p = np.zeros_like(d) if start is None else np.asarray(start, dtype=float)

    def f(t):
        t = np.asarray(t, dtype=float)[..., None]
        return p + t * d, np.broadcast_to(d, t.shape[:-1] + d.shape).copy()

    return from_function(f, _grid(length, num, step), arc_length=True, label="line")


def circle(r=1.0, center=None, n=2, angle=2 * np.pi, phase=0.0, num=None, step=None):
    """Counter-clockwise circle of radius ``r`` in the (xi_1, xi_2) plane, unit chart speed."""
    c0 = np.zeros(n) if center is None else _embed(np.asarray(center, dtype=float), n)

    def f(t):
        a = np.asarray(t, dtype=float) / r + phase
        x = np.stack([r * np.cos(a), r * np.sin(a)], axis=-1)
        dx = np.stack([-np.sin(a), np.cos(a)], axis=-1)
        return c0 + _embed(x, n), _embed(dx, n)

    closed = bool(np.isclose(angle % (2 * np.pi), 0.0) and angle > 0)
    return from_function(f, _grid(r * angle, num, step), arc_length=True, closed=closed, label="circle")


def latitude(theta, n=2, turns=1.0, num=None, step=None):
    """Unit-speed latitude circle at colatitude ``theta`` on the unit sphere (stereographic chart)."""
    rho = np.tan(theta / 2.0)
    w = 1.0 / np.sin(theta)

    def f(t):
        a = w * np.asarray(t, dtype=float)
        x = rho * np.stack([np.cos(a), np.sin(a)], axis=-1)
        dx = rho * w * np.stack([-np.sin(a), np.cos(a)], axis=-1)
        return _embed(x, n), _embed(dx, n)

    length = 2 * np.pi * np.sin(theta) * turns
    closed = bool(np.isclose(turns, round(turns)) and turns > 0)
    return from_function(f, _grid(length, num, step), arc_length=True, closed=closed, label="latitude")


def greatcircle(length=np.pi / 2, n=2, num=None, step=None):
    """Unit-speed great circle through the chart centre along e_1: xi = (tan(t/2), 0, ..)."""

    def f(t):
        t = np.asarray(t, dtype=float)
        x = np.tan(t / 2.0)[..., None]
        dx = (0.5 / np.cos(t / 2.0) ** 2)[..., None]
        return _embed(x, n), _embed(dx, n)

    return from_function(f, _grid(length, num, step), arc_length=True, label="greatcircle")


def helix(kappa=1.0, tau=0.5, length=2 * np.pi, mirror=False, num=None, step=None):
    """Unit-speed helix in R^3 with constant curvature ``kappa`` and torsion ``tau``."""
    d = kappa * kappa + tau * tau
    a, b = kappa / d, tau / d
    c = 1.0 / np.sqrt(d)
    sgn = -1.0 if mirror else 1.0

    def f(s):
        u = np.asarray(s, dtype=float) / c
        x = np.stack([a * np.cos(u), a * np.sin(u), sgn * b * u], axis=-1)
        dx = np.stack([-a * np.sin(u), a * np.cos(u), sgn * b * np.ones_like(u)], axis=-1) / c
        return x, dx

    return from_function(f, _grid(length, num, step), arc_length=True, label="helix")


def clothoid(length=3.0, rate=1.0, num=None, step=None):
    """Plane curve with curvature ``rate * s`` starting at the origin along e_1."""
    k = np.sqrt(rate / np.pi)

    def f(s):
        s = np.asarray(s, dtype=float)
        S, C = fresnel(k * s)
        x = np.stack([C, S], axis=-1) / k
        dx = np.stack([np.cos(0.5 * rate * s * s), np.sin(0.5 * rate * s * s)], axis=-1)
        return x, dx

    return from_function(f, _grid(length, num, step), arc_length=True, label="clothoid")


def _flat_bump(t):
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        t2 = t * t
        val = np.where(t2 > 0, np.exp(-1.0 / np.where(t2 > 0, t2, 1.0)), 0.0)
        der = np.where(t2 > 0, 2.0 / np.where(t2 > 0, t * t2, 1.0) * val, 0.0)
    return val, der


def exonepoint_pair(num=None, step=None):
    """The curves (t, exp(-1/t^2), 0) and its partner that switches to the third axis for t > 0."""
    t_grid = _grid(2.0, num, step, start=-1.0)

    def y(t):
        t = np.asarray(t, dtype=float)
        v, dv = _flat_bump(t)
        return (np.stack([t, v, np.zeros_like(t)], axis=-1),
                np.stack([np.ones_like(t), dv, np.zeros_like(t)], axis=-1))

    def y_hat(t):
        t = np.asarray(t, dtype=float)
        v, dv = _flat_bump(t)
        pos = t > 0
        z = np.zeros_like(t)
        return (np.stack([t, np.where(pos, z, v), np.where(pos, v, z)], axis=-1),
                np.stack([np.ones_like(t), np.where(pos, z, dv), np.where(pos, dv, z)], axis=-1))

    return (from_function(y, t_grid, label="exonepoint"),
            from_function(y_hat, t_grid, label="exonepoint_hat"))


def sphere_curve(r_func, t, closed=False, label="sphere"):
    """Stereographic curve from a vectorised ambient curve ``r_func(t) -> (r, r_dot)`` on S^n."""

    def f(s):
        r, dr = r_func(np.asarray(s, dtype=float))
        return sphere_to_stereo(r, dr)

    return from_function(f, t, closed=closed, label=label)


def random_curve(M: ManifoldModel, seed=0, length=1.0, num=None, step=None, wiggle=0.6, base=None, modes=3):
    """Smooth random curve in the chart of ``M`` (not unit speed).

    A straight drift with unit chart speed plus ``modes`` trigonometric
    wiggles whose combined chart speed is at most ``wiggle`` (< 1), so the
    chart speed stays in [1 - wiggle, 1 + wiggle] and the curve has no cusps.
    """
    if not 0.0 <= wiggle < 1.0:
        raise ValueError("wiggle must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    m = M.coord_dim
    if base is None:
        if M.name.startswith("hyperbolic"):
            base = np.array([0.0, 1.0])
        elif M.name.startswith("su2"):
            g = rng.normal(size=4)
            base = g / np.linalg.norm(g)
        else:
            base = np.zeros(m)
    base = np.asarray(base, dtype=float)
    drift = rng.normal(size=m)
    if M.normalize_fn is not None:
        drift -= (drift @ base) / (base @ base) * base   # tangent to the normalised surface at the start
    drift /= np.linalg.norm(drift)
    k = np.arange(1, modes + 1) * (np.pi / length)
    A = rng.normal(size=(modes, m))
    B = rng.normal(size=(modes, m))
    # |d/dt sum| <= sum_j k_j (|A_j| + |B_j|); scale that bound to ``wiggle``
    bound = np.sum(k * (np.linalg.norm(A, axis=1) + np.linalg.norm(B, axis=1)))
    A *= wiggle / bound
    B *= wiggle / bound

    def raw(t):
        t = np.asarray(t, dtype=float)
        c, s = np.cos(k * t[..., None]), np.sin(k * t[..., None])
        p = base + t[..., None] * drift + (c - 1.0) @ A + s @ B
        dp = drift + (-k * s) @ A + (k * c) @ B
        return p, dp

    if M.name.startswith("hyperbolic"):
        # keep the height positive: xi_2 = base_2 exp((p_2 - base_2) / base_2)
        h0 = base[1]

        def f(t):
            p, dp = raw(t)
            y = h0 * np.exp((p[..., 1] - h0) / h0)
            p[..., 1] = y
            dp[..., 1] = dp[..., 1] * y / h0
            return p, dp
    elif M.normalize_fn is None:
        f = raw
    else:
        def f(t):
            p, dp = raw(t)
            nrm = np.linalg.norm(p, axis=-1, keepdims=True)
            g = p / nrm
            return g, dp / nrm - g * np.sum(g * dp, axis=-1, keepdims=True) / nrm

    return from_function(f, _grid(length, num, step), label=f"random{seed}")


FAMILIES = ("line", "circle", "latitude", "greatcircle", "helix", "clothoid", "exonepoint_pair")


def builtin_curve(family: str, **params):
    """Dispatch to a named family.  ``exonepoint_pair`` returns two curves."""
    table = {
        "line": line, "circle": circle, "latitude": latitude, "greatcircle": greatcircle,
        "helix": helix, "clothoid": clothoid, "exonepoint_pair": exonepoint_pair,
    }
    if family not in table:
        raise ValueError(f"unknown curve family {family!r}; expected one of {', '.join(FAMILIES)}")
    accepted = inspect.signature(table[family]).parameters
    unknown = sorted(set(params) - set(accepted))
    if unknown:
        raise ValueError(f"{family} does not take parameter(s) {', '.join(unknown)}; "
                         f"accepted: {', '.join(accepted)}")
    return table[family](**params)
