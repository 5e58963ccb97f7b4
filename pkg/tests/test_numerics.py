import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial.transform import Rotation

from rollingmaps.numerics import (StepUnderflowError, check_grid, derivative, gauss_legendre_panels,
                                  generalized_cross, gram_schmidt, is_rotation, orthogonality_defect,
                                  procrustes_rotation, rk4_grid, trapezoid_weights, wrap_angle)

from conftest import random_rotation


def test_wrap_angle_representative():
    assert wrap_angle(np.pi) == pytest.approx(np.pi)
    assert wrap_angle(-np.pi) == pytest.approx(np.pi)
    assert wrap_angle(3 * np.pi) == pytest.approx(np.pi)
    assert wrap_angle(2 * np.pi + 0.1) == pytest.approx(0.1)
    np.testing.assert_allclose(wrap_angle(np.array([-0.5, 7.0])), [-0.5, 7.0 - 2 * np.pi])


def test_check_grid_rejects_bad_steps():
    with pytest.raises(StepUnderflowError):
        check_grid([0.0, 1.0, 1.0])
    with pytest.raises(StepUnderflowError):
        check_grid([0.0, 1.0, 0.5])
    with pytest.raises(ValueError):
        check_grid(np.zeros((2, 2)))


def test_gram_schmidt_keeps_first_column_direction(rng):
    A = np.eye(3) + 1e-3 * rng.normal(size=(3, 3))
    Q = gram_schmidt(A)
    assert orthogonality_defect(Q) < 1e-15
    np.testing.assert_allclose(Q[:, 0], A[:, 0] / np.linalg.norm(A[:, 0]))
    assert is_rotation(Q)


@given(st.integers(2, 5), st.integers(0, 10_000))
def test_generalized_cross_is_determinant_form(n, seed):
    rng = np.random.default_rng(seed)
    V = rng.normal(size=(n, n - 1))
    w = generalized_cross(V)
    x = rng.normal(size=n)
    assert np.dot(w, x) == pytest.approx(np.linalg.det(np.column_stack([V, x])), abs=1e-9)


def test_generalized_cross_matches_cross_product(rng):
    a, b = rng.normal(size=3), rng.normal(size=3)
    np.testing.assert_allclose(generalized_cross(np.column_stack([a, b])), np.cross(a, b), atol=1e-14)


def test_derivative_fourth_order_on_nonuniform_grid():
    errs = []
    for N in (41, 81):
        t = np.linspace(0, 2, N) ** 1.1
        errs.append(np.max(np.abs(derivative(t, np.sin(t)) - np.cos(t))))
    assert errs[0] / errs[1] > 12


def test_derivative_exact_for_quartics():
    t = np.sort(np.random.default_rng(0).uniform(0, 1, 30))
    f = np.stack([t ** 4 - 2 * t, 3 * t ** 3], axis=1)
    df = np.stack([4 * t ** 3 - 2, 9 * t ** 2], axis=1)
    np.testing.assert_allclose(derivative(t, f), df, atol=1e-8)


def test_rk4_order_and_projection():
    # y' = A y on SO(2), exact solution is a rotation
    A = np.array([[0.0, -1.0], [1.0, 0.0]])
    errs = []
    for N in (21, 41):
        t = np.linspace(0, 2, N)
        res = rk4_grid(lambda i, s, y: A @ y, t, np.eye(2))
        exact = np.array([[np.cos(2), -np.sin(2)], [np.sin(2), np.cos(2)]])
        errs.append(np.max(np.abs(res.y[-1] - exact)))
    assert 14 < errs[0] / errs[1] < 18


def test_rk4_reports_domain_exit():
    t = np.linspace(0, 2, 201)
    res = rk4_grid(lambda i, s, y: np.ones(1), t, np.zeros(1), in_domain=lambda y: y[0] < 1.0)
    assert not res.complete
    assert res.exit_reason == "chart exit"
    assert res.exit_time == pytest.approx(1.0, abs=0.011)
    assert res.y[-1, 0] < 1.0


def test_trapezoid_and_gauss_legendre():
    t = np.linspace(0, 1, 11)
    assert np.sum(trapezoid_weights(t) * t) == pytest.approx(0.5)
    a = np.array([0.0, 1.0])
    b = np.array([1.0, 3.0])
    np.testing.assert_allclose(gauss_legendre_panels(lambda s: s ** 5, a, b), (b ** 6 - a ** 6) / 6)


@settings(max_examples=30)
@given(st.integers(0, 10_000))
def test_procrustes_recovers_planted_rotation(seed):
    rng = np.random.default_rng(seed)
    R = random_rotation(rng, 3)
    A = rng.normal(size=(50, 3))
    fit = procrustes_rotation(A, A @ R.T, rng.uniform(0.5, 1.5, 50))
    np.testing.assert_allclose(fit.rotation, R, atol=1e-10)
    assert not fit.reflection_preferred


def test_procrustes_flags_mirror_images(rng):
    A = rng.normal(size=(40, 3))
    mirror = np.diag([1.0, 1.0, -1.0])
    fit = procrustes_rotation(A, A @ (Rotation.from_rotvec([0.2, 0.1, 0.3]).as_matrix() @ mirror).T)
    assert fit.reflection_preferred
    assert np.linalg.det(fit.rotation) == pytest.approx(1.0)
