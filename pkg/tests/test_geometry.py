import dataclasses

import numpy as np
import pytest

from rollingmaps.geometry import (SU2_FIELDS, builtin_manifold, check_model, from_frame_field,
                                  grid_manifold, inner_product, quat_mul, stereo_to_sphere,
                                  sphere_to_stereo, su2_matrix, _central4)
from rollingmaps.numerics import ChartDomainError


def _points(M, rng, count=100, radius=0.9):
    if M.name == "su2":
        g = rng.normal(size=(count, 4))
        return g / np.linalg.norm(g, axis=1, keepdims=True)
    base = np.array([0.0, 1.0]) if M.name.startswith("hyperbolic") else np.zeros(M.n)
    return base + rng.uniform(-radius, radius, size=(count, M.n))


def test_euclidean_is_flat(E3):
    xi = np.array([0.3, -1.0, 2.0])
    np.testing.assert_array_equal(E3.frame(xi), np.eye(3))
    np.testing.assert_array_equal(E3.christoffel(xi), np.zeros((3, 3, 3)))


def test_sphere_christoffels_at_sample_point(S2):
    G = S2.christoffel(np.array([0.5, 0.3]))
    np.testing.assert_allclose(G[0], [[0, -0.3], [0.3, 0]], atol=1e-15)
    np.testing.assert_allclose(G[1], [[0, 0.5], [-0.5, 0]], atol=1e-15)


def test_sphere_chart_centre(S2):
    # unit sphere: e_j = (1+|xi|^2)/2 d/dxi_j, so the chart vectors have length 2 at the centre
    np.testing.assert_allclose(S2.frame(np.zeros(2)), 0.5 * np.eye(2))
    np.testing.assert_allclose(S2.christoffel(np.zeros(2)), 0.0)


def test_su2_christoffel_entries(SU2):
    G = SU2.christoffel(np.array([1.0, 0, 0, 0]))
    assert G[0, 1, 2] == -1 and G[0, 2, 1] == 1
    assert G[1, 2, 0] == -1 and G[1, 0, 2] == 1
    assert G[2, 0, 1] == -1 and G[2, 1, 0] == 1


def test_unknown_and_bad_dimensions():
    with pytest.raises(ValueError):
        builtin_manifold("torus", n=2)
    with pytest.raises(ValueError):
        builtin_manifold("su2", n=2)
    with pytest.raises(ValueError):
        builtin_manifold("euclidean")
    with pytest.raises(ValueError):
        builtin_manifold("hyperbolic_halfplane", n=3)


@pytest.mark.parametrize("name,n", [("euclidean", 3), ("sphere_stereo", 2), ("sphere_stereo", 3),
                                    ("hyperbolic_halfplane", None), ("su2", None)])
def test_christoffels_antisymmetric_and_frames_positive(name, n, rng):
    M = builtin_manifold(name, n)
    pts = _points(M, rng)
    G = M.christoffel(pts)
    assert np.max(np.abs(G + np.swapaxes(G, -1, -2))) < 1e-12
    rep = check_model(M, pts[:20])
    assert rep.max_antisymmetry < 1e-12
    assert rep.levi_civita_residual < 1e-9
    if M.coord_dim == M.n:
        assert rep.min_det > 0


def test_inner_product_examples(E2, S2):
    e1 = np.array([1.0, 0.0])
    assert inner_product(E2, np.array([5.0, 1.0]), e1, e1) == 1.0
    assert inner_product(S2, np.zeros(2), e1, e1) == 4.0
    # phi^-1 = 2/(1+|xi|^2) I, so at |xi| = 1 the chart and frame norms agree
    assert inner_product(S2, np.array([1.0, 0.0]), e1, e1) == pytest.approx(1.0)
    assert inner_product(S2, np.array([2.0, 0.0]), e1, e1) == pytest.approx((2 / 5) ** 2)
    with pytest.raises(ChartDomainError):
        inner_product(builtin_manifold("hyperbolic_halfplane"), np.array([0.0, -1.0]), e1, e1)


def test_inner_product_matches_frame_components(S3, rng):
    xi = rng.uniform(-1, 1, 3)
    v, w = rng.normal(size=(2, 3))
    expected = S3.frame_components(xi, v) @ S3.frame_components(xi, w)
    assert inner_product(S3, xi, v, w) == pytest.approx(expected, rel=1e-14)


def test_corrupted_christoffel_is_detected(S2, rng):
    eps = 3e-4

    def bad(xi):
        G = S2.christoffel(xi).copy()
        G[..., 0, 0, 1] += eps
        G[..., 0, 1, 0] += eps
        return G

    M = dataclasses.replace(S2, christoffel_fn=bad, connection_fn=None)
    rep = check_model(M, _points(M, rng, 10))
    assert rep.antisymmetry[0] == pytest.approx(2 * eps, rel=1e-9)
    assert rep.antisymmetry[1] == 0.0
    assert rep.levi_civita_residual == pytest.approx(eps, rel=1e-3)


def test_su2_fields_follow_coordinate_formulas():
    g = np.array([0.1, 0.7, -0.5, 0.5])
    g0, g1, g2, g3 = g
    np.testing.assert_allclose(SU2_FIELDS[0] @ g, [-g1, g0, g3, -g2])
    np.testing.assert_allclose(SU2_FIELDS[1] @ g, [-g2, -g3, g0, g1])
    np.testing.assert_allclose(SU2_FIELDS[2] @ g, [-g3, g2, -g1, g0])
    for j in range(3):
        np.testing.assert_allclose(SU2_FIELDS[j] @ g, quat_mul(g, np.eye(4)[j + 1]))


def test_su2_lie_brackets_by_finite_differences(rng):
    def field(j):
        return lambda g: SU2_FIELDS[j] @ g

    def bracket(a, b, g):
        # [X, Y] = DY.X - DX.Y
        DX = _central4(field(a), g, 1e-4).T
        DY = _central4(field(b), g, 1e-4).T
        return DY @ field(a)(g) - DX @ field(b)(g)

    g = rng.normal(size=4)
    g /= np.linalg.norm(g)
    X = [field(j)(g) for j in range(3)]
    np.testing.assert_allclose(bracket(0, 1, g), 2 * X[2], atol=1e-6)
    np.testing.assert_allclose(bracket(0, 2, g), -2 * X[1], atol=1e-6)
    np.testing.assert_allclose(bracket(1, 2, g), 2 * X[0], atol=1e-6)


def test_quaternion_matches_complex_matrix_form(rng):
    p, q = rng.normal(size=(2, 4))
    np.testing.assert_allclose(su2_matrix(quat_mul(p, q)), su2_matrix(p) @ su2_matrix(q), atol=1e-13)
    a = np.array([0.3, -0.2, 0.9])
    expected = np.array([[1j * a[0], a[1] + 1j * a[2]], [-a[1] + 1j * a[2], -1j * a[0]]])
    np.testing.assert_allclose(su2_matrix(np.concatenate([[0.0], a])), expected)


def test_bracket_christoffels_match_analytic(S2, H2, rng):
    for M in (S2, H2):
        user = from_frame_field("user", 2, M.frame_fn, domain_fn=M.domain_fn)
        pts = _points(M, rng, 10, 0.5)
        np.testing.assert_allclose(user.christoffel(pts), M.christoffel(pts), atol=1e-8)


def test_grid_manifold_approximates_sphere(S2):
    ax = np.linspace(-1.0, 1.0, 81)
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    phi = S2.frame(np.stack([X, Y], axis=-1))
    M = grid_manifold("tab", [ax, ax], phi, h=1e-3)
    xi = np.array([[0.31, -0.2], [0.0, 0.45]])
    np.testing.assert_allclose(M.frame(xi), S2.frame(xi), atol=1e-5)
    np.testing.assert_allclose(M.christoffel(xi), S2.christoffel(xi), atol=1e-4)
    assert not M.in_domain(np.array([1.5, 0.0]))


def test_reversed_orientation_flips_last_frame_vector(S3):
    R = S3.reversed_orientation()
    xi = np.array([0.2, 0.1, -0.3])
    assert np.linalg.det(R.frame(xi)) < 0
    G = R.christoffel(xi)
    np.testing.assert_allclose(G, -np.swapaxes(G, -1, -2))


def test_stereographic_round_trip(rng):
    xi, dxi = rng.normal(size=(2, 5, 3))
    r, dr = stereo_to_sphere(xi, dxi)
    np.testing.assert_allclose(np.linalg.norm(r, axis=1), 1.0)
    np.testing.assert_allclose(np.sum(r * dr, axis=1), 0.0, atol=1e-13)
    back, dback = sphere_to_stereo(r, dr)
    np.testing.assert_allclose(back, xi, atol=1e-13)
    np.testing.assert_allclose(dback, dxi, atol=1e-12)
