import numpy as np
import pytest

from rollingmaps.curves import (circle, exonepoint_pair, from_function, greatcircle, helix, latitude, line,
                                random_curve)
from rollingmaps.existence import (exists_by_curvature, exists_general, extract_euclidean_isometry,
                                   junction_compatibility, loop_check, loop_in_Q, minimal_parallel_rank)
from rollingmaps.frenet import frenet_apparatus, regularity_order
from rollingmaps.numerics import RegularityError
from rollingmaps.rolling import roll_along

from conftest import random_rotation


def rotated(c, R, b=None):
    b = np.zeros(c.dim) if b is None else np.asarray(b, dtype=float)
    return from_function(lambda t: (c.func(t)[0] @ R.T + b, c.func(t)[1] @ R.T), c.t, c.arc_length)


def rot_z(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1.0]])


# ---------------------------------------------------------------- curvature test

def test_equal_circles_accepted(E2):
    v = exists_by_curvature(E2, E2, circle(step=1e-3), circle(center=(3.0, 1.0), step=1e-3))
    assert v.accepted and v.method == "curvature2d"
    assert v.residual < 1e-8
    assert v.details["no_slip"] < 1e-6 and v.details["no_twist"] < 1e-6


def test_circle_against_line_is_refused_or_rejected(E2):
    # a straight line is C^1-regular on a surface, so the curvature test applies
    v = exists_by_curvature(E2, E2, circle(step=1e-3), line(length=2 * np.pi, step=1e-3))
    assert not v.accepted
    assert abs(v.residual - 1.0) < 1e-8


def test_latitude_against_plane_circles(S2, E2):
    th = np.pi / 3
    lat = latitude(th, step=1e-3)
    good = exists_by_curvature(S2, E2, lat, circle(r=np.sqrt(3), step=1e-3))
    assert good.accepted
    assert good.details["compared_length"] == pytest.approx(2 * np.pi * np.sin(th), abs=1e-9)
    bad = exists_by_curvature(S2, E2, lat, circle(r=1.0, step=1e-3))
    assert not bad.accepted
    assert abs(bad.residual - (1 - 1 / np.sqrt(3))) < 1e-6


def test_helix_rotated_copy_curvature_test(E3, rng):
    c = helix(1.0, 0.5, step=1e-3)
    v = exists_by_curvature(E3, E3, c, rotated(c, random_rotation(rng, 3), [1.0, 2.0, 3.0]))
    assert v.accepted and v.method == "curvatureND"


def test_curvature_test_refuses_irregular_curves(E3):
    y, yh = exonepoint_pair(step=1e-3)
    with pytest.raises(RegularityError):
        exists_by_curvature(E3, E3, y, yh)


# ---------------------------------------------------------------- anti-development test

def test_rotated_copy_recovers_rotation(E3, rng):
    c = random_curve(E3, seed=2, step=1e-3)
    R = random_rotation(rng, 3)
    v = exists_general(E3, E3, c, rotated(c, R, [1.0, -1.0, 0.5]))
    assert v.accepted
    assert np.linalg.norm(v.iota - R) < 1e-8


def test_exonepoint_pair_rejected(E3):
    y, yh = exonepoint_pair(step=1e-3)
    v = exists_general(E3, E3, y, yh)
    assert not v.accepted
    assert v.residual > 100 * v.thresholds["tol_gen"]


def test_mirror_helix_rejected_with_flag(E3):
    v = exists_general(E3, E3, helix(1.0, 0.5, step=1e-3), helix(1.0, 0.5, mirror=True, step=1e-3))
    assert not v.accepted
    assert v.details["orientation_flag"]


def test_sphere_curve_and_its_rotation(S2):
    # rotations about the pole act on the stereographic chart as plane rotations
    c = random_curve(S2, seed=4, step=1e-3)
    R = np.array([[0.0, -1.0], [1.0, 0.0]])
    v = exists_general(S2, S2, c, rotated(c, R))
    assert v.accepted


def test_constant_curves_are_degenerate(E2):
    c = from_function(lambda t: (np.zeros(t.shape + (2,)), np.zeros(t.shape + (2,))), np.linspace(0, 1, 11))
    v = exists_general(E2, E2, c, c)
    assert v.accepted and v.details["degenerate"]
    np.testing.assert_array_equal(v.iota, np.eye(2))


def test_verdict_independent_of_initial_frames(S3, E3, rng):
    c = random_curve(S3, seed=5, step=1e-3)
    tr = roll_along(S3, E3, c, xh0=np.zeros(3))
    other = random_curve(E3, seed=6, step=1e-3)
    for _ in range(3):
        R0, R0h = random_rotation(rng, 3), random_rotation(rng, 3)
        assert exists_general(S3, E3, c, tr.x_hat, R0=R0, R0h=R0h).accepted
        assert not exists_general(S3, E3, c, other, R0=R0, R0h=R0h).accepted
    v0 = exists_general(S3, E3, c, tr.x_hat)
    v1 = exists_general(S3, E3, c, tr.x_hat, R0=R0, R0h=R0h)
    np.testing.assert_allclose(v1.iota, R0h.T @ v0.iota @ R0, atol=1e-8)


def test_curvature_acceptance_implies_general_acceptance(S2, E2, E3, S3):
    cases = [(S2, E2, latitude(np.pi / 3, step=1e-3), circle(r=np.sqrt(3), step=1e-3)),
             (E3, S3, helix(1.0, 0.5, length=3.0, step=1e-3), None)]
    for M, Mh, x, xh in cases:
        if xh is None:
            xh = roll_along(M, Mh, x, xh0=np.zeros(Mh.coord_dim)).x_hat
        v = exists_by_curvature(M, Mh, x, xh)
        assert v.accepted
        assert max(v.details["no_slip"], v.details["no_twist"]) < 1e-4
        g = exists_general(M, Mh, x, xh)
        assert g.accepted


# ---------------------------------------------------------------- loops

def test_unit_circle_loop(E2):
    r = loop_check(E2, circle(step=1e-3))
    assert r.config_loop and r.c1_loop
    assert abs(r.closure_integral) < 1e-6
    assert abs(r.alpha - 2 * np.pi) < 1e-8
    assert r.theta == 0.0


def test_three_quarter_arc_closure_integral(E2):
    r = loop_check(E2, circle(angle=1.5 * np.pi, step=1e-3), allow_open=True)
    assert not r.config_loop and not r.closed
    assert abs(abs(r.closure_integral) - np.sqrt(2)) < 1e-6


def test_latitude_holonomy_prevents_loop(S2):
    r = loop_check(S2, latitude(np.pi / 3, step=1e-3))
    assert abs(abs(r.theta) - np.pi) < 1e-6
    assert not r.config_loop


def test_open_curve_refused_by_default(E2):
    with pytest.raises(ValueError):
        loop_check(E2, circle(angle=np.pi, step=1e-2))


def test_stadium_refused_at_c2_check(E2):
    # two half circles joined by straight legs: curvature jumps between 1 and 0
    L = np.pi + 2.0

    def half(u):
        on_arc = u <= np.pi
        x = np.where(on_arc[..., None], np.stack([np.sin(u), 1 - np.cos(u)], -1),
                     np.stack([-(u - np.pi), 2.0 + 0 * u], -1))
        dx = np.where(on_arc[..., None], np.stack([np.cos(u), np.sin(u)], -1),
                      np.stack([-1.0 + 0 * u, 0 * u], -1))
        return x, dx

    def f(s):
        s = np.asarray(s, dtype=float)
        second = (s > L)[..., None]
        x1, d1 = half(np.minimum(s, L))
        x2, d2 = half(np.maximum(s - L, 0.0))
        x2 = -x2 + [-2.0, 2.0]
        d2 = -d2
        return np.where(second, x2, x1), np.where(second, d2, d1)

    c = from_function(f, np.linspace(0, 2 * L, 4001), arc_length=True)
    assert np.max(np.abs(c.xi[-1] - c.xi[0])) < 1e-12
    with pytest.raises(RegularityError):
        loop_check(E2, c)


def test_loop_in_q_examples(S2, E2):
    lat = latitude(np.pi / 3, step=1e-3)
    same = loop_in_Q(S2, lat, S2, latitude(np.pi / 3, step=1e-3))
    assert same.in_q and abs(same.discrepancy) < 1e-6
    vs_circle = loop_in_Q(S2, lat, E2, circle(step=1e-3))
    assert not vs_circle.in_q
    assert abs(abs(vs_circle.discrepancy) - np.pi) < 1e-6
    # equal k_g and length: the plane image is half of the circle of radius sqrt(3)
    half = circle(r=np.sqrt(3), angle=np.pi, step=1e-3)
    r = loop_in_Q(S2, lat, E2, half, allow_open=True)
    assert not r.in_q
    # Gauss-Bonnet: the latitude holonomy is 2 pi (1 - cos(pi/3)) = pi, the plane has none
    assert abs(abs(r.discrepancy) - np.pi) < 1e-6
    assert not r.in_q


def hyperbolic_circle(cosh_rho, turns=1.0, num=8001):
    sh = np.sqrt(cosh_rho ** 2 - 1)

    def f(p):
        p = np.asarray(p, dtype=float)
        x = np.stack([sh * np.sin(p), cosh_rho - sh * np.cos(p)], -1)
        dx = np.stack([sh * np.cos(p), sh * np.sin(p)], -1)
        return x, dx

    return from_function(f, np.linspace(0, 2 * np.pi * turns, num), closed=True)


def chart_ellipse(a, b, num=8001):
    def f(p):
        p = np.asarray(p, dtype=float)
        return np.stack([a * np.cos(p), b * np.sin(p)], -1), np.stack([-a * np.sin(p), b * np.cos(p)], -1)
    return from_function(f, np.linspace(0, 2 * np.pi, num), closed=True)


def loop_battery(E2, S2, H2):
    return [
        ("plane circle", E2, circle(step=1e-3), True),
        ("plane ellipse", E2, chart_ellipse(2.0, 0.5), True),
        ("latitude pi/3", S2, latitude(np.pi / 3, step=1e-3), False),
        ("latitude pi/3 twice", S2, latitude(np.pi / 3, turns=2, step=1e-3), True),
        ("latitude acos(1/3) three times", S2, latitude(np.arccos(1 / 3), turns=3, step=1e-3), True),
        # trivial holonomy is not enough: the equator rolls out to a segment of length 2 pi
        ("equator", S2, latitude(np.pi / 2, step=1e-3), False),
        ("sphere ellipse", S2, chart_ellipse(0.8, 0.4), False),
        ("hyperbolic circle cosh 2", H2, hyperbolic_circle(2.0), True),
        ("hyperbolic circle cosh 1.5", H2, hyperbolic_circle(1.5), False),
        ("hyperbolic circle cosh 1.5 twice", H2, hyperbolic_circle(1.5, 2), True),
    ]


def test_loop_battery_matches_rolling_onto_the_plane(E2, S2, H2):
    for name, M, c, expected in loop_battery(E2, S2, H2):
        r = loop_check(M, c)
        if name == "equator":
            assert abs(r.theta) < 1e-9 and abs(abs(r.closure_integral) - 2 * np.pi) < 1e-6
        tr = roll_along(M, E2, c, xh0=np.zeros(2))
        closes = (np.max(np.abs(tr.x_hat.xi[-1] - tr.x_hat.xi[0])) < 1e-6
                  and np.max(np.abs(tr.q[-1] - tr.q[0])) < 1e-6)
        assert r.config_loop == closes == expected, name


# ---------------------------------------------------------------- junctions

def test_junction_of_smooth_curve_vanishes(E3, S3):
    c = helix(1.0, 0.5, length=4.0, step=1e-3)
    tr = roll_along(E3, S3, c, xh0=np.zeros(3))
    j = junction_compatibility(E3, S3, c, tr.x_hat, 2.0)
    assert j.norm < 1e-5


def test_junction_of_exonepoint_pair(E3):
    y, yh = exonepoint_pair(step=1e-3)
    j = junction_compatibility(E3, E3, y, yh, 0.0)
    assert j.norm >= 1 - 1e-6


def test_junction_detects_binormal_flip(E3):
    # a unit arc in the (e1, e2)-plane against an S-curve that bends the other way after b
    b = 1.5

    def arc(s, sign):
        return (np.stack([np.sin(s), sign * (1 - np.cos(s)), 0 * s], -1),
                np.stack([np.cos(s), sign * np.sin(s), 0 * s], -1))

    R = rot_z(b)
    p = arc(np.array(b), 1.0)[0]

    def s_curve(s):
        s = np.asarray(s, dtype=float)
        x0, d0 = arc(s, 1.0)
        x1, d1 = arc(s - b, -1.0)
        left = (s <= b)[..., None]
        return np.where(left, x0, p + x1 @ R.T), np.where(left, d0, d1 @ R.T)

    t = np.linspace(0, 3.0, 3001)
    x = from_function(lambda s: arc(np.asarray(s, dtype=float), 1.0), t, True)
    xh = from_function(s_curve, t, True)
    j = junction_compatibility(E3, E3, x, xh, b)
    np.testing.assert_allclose(j.G, np.diag([0.0, 2.0, 2.0]), atol=1e-5)


# ---------------------------------------------------------------- rank

@pytest.mark.parametrize("case,expected", [("geodesic", 1), ("latitude", 2), ("helix", 3), ("latitude3", 2)])
def test_minimal_parallel_rank(S2, S3, E3, case, expected):
    M, c = {"geodesic": (S2, greatcircle(length=2.0, step=1e-3)),
            "latitude": (S2, latitude(np.pi / 3, step=1e-3)),
            "helix": (E3, helix(1.0, 0.5, step=1e-3)),
            "latitude3": (S3, latitude(np.pi / 3, n=3, step=1e-3))}[case]
    r = minimal_parallel_rank(M, c)
    assert r.rank == expected
    assert r.margin_above > 1e3 and r.margin_below > 1e3
    assert r.rank <= regularity_order(M, c).order + 1


def test_rank_bounded_by_regularity_on_regular_random_curves(S3, H2):
    for M in (S3, H2):
        for seed in range(3):
            c = random_curve(M, seed=seed, step=1e-3)
            reg = regularity_order(M, c)
            assert reg.order == M.n - 1
            assert minimal_parallel_rank(M, c).rank <= reg.order + 1


def test_isolated_degeneracy_lowers_order_but_not_rank(E3):
    # (t, t^3, t^4) has x'' = 0 at t = 0 but spans all of R^3
    c = from_function(lambda t: (np.stack([t, t ** 3, t ** 4], -1), np.stack([1 + 0 * t, 3 * t ** 2, 4 * t ** 3], -1)),
                      np.linspace(-1, 1, 2001))
    assert regularity_order(E3, c).order == 1
    assert minimal_parallel_rank(E3, c).rank == 3


# ---------------------------------------------------------------- Euclidean isometries

def test_isometry_extraction(rng):
    c = helix(1.0, 0.5, step=1e-3)
    R = rot_z(np.pi / 6)
    fit = extract_euclidean_isometry(c, rotated(c, R, [1.0, 2.0, 3.0]))
    assert fit.accepted
    np.testing.assert_allclose(fit.rotation, R, atol=1e-12)
    np.testing.assert_allclose(fit.translation, [1.0, 2.0, 3.0], atol=1e-12)
    same = extract_euclidean_isometry(c, c)
    np.testing.assert_allclose(same.rotation, np.eye(3), atol=1e-14)
    np.testing.assert_allclose(same.translation, 0.0, atol=1e-14)
    mirror = extract_euclidean_isometry(c, helix(1.0, 0.5, mirror=True, step=1e-3))
    assert not mirror.accepted and mirror.orientation_flag
