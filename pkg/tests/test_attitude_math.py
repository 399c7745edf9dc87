import numpy as np
import pytest
from hypothesis import given, settings

from conftest import (
    dcm_oracle,
    quat_product_oracle,
    random_ball,
    random_quat,
    rodrigues_passive,
    unit_quats,
    vec3,
)
from geomekf.attitude_math import (
    IDENTITY_QUAT,
    attitude_error,
    attitude_matrix,
    cross_matrix,
    normalize,
    quat_conjugate,
    quat_correct,
    quat_discrepancy,
    quat_multiply,
    quat_to_rotvec,
    reset_map,
    reset_map_closed_form,
    rotate_quaternion,
    rotvec_to_quat,
    small_angle_dcm,
    xi,
)

E1, E2, E3 = np.eye(3)


# cross_matrix


def test_cross_matrix_zero():
    np.testing.assert_array_equal(cross_matrix([0, 0, 0]), np.zeros((3, 3)))


def test_cross_matrix_e1():
    S = cross_matrix(E1)
    np.testing.assert_array_equal(S, [[0, 0, 0], [0, 0, -1], [0, 1, 0]])
    np.testing.assert_array_equal(S @ E2, E3)


@given(vec3(10.0), vec3(10.0))
def test_cross_matrix_matches_cross_product(v, u):
    S = cross_matrix(v)
    assert np.abs(S @ u - np.cross(v, u)).max() < 1e-15 * max(1.0, np.abs(v).max() * np.abs(u).max()) * 10
    np.testing.assert_array_equal(S, -S.T)


# xi


def test_xi_identity():
    np.testing.assert_array_equal(xi(IDENTITY_QUAT), np.vstack([np.eye(3), np.zeros(3)]))


@given(unit_quats)
def test_xi_orthonormal_columns(q):
    X = xi(q)
    assert np.abs(X.T @ X - np.eye(3)).max() < 1e-14
    assert np.abs(X.T @ q).max() < 1e-14


@pytest.mark.parametrize("scale", [0.5, 1.01, 2.0])
def test_xi_rejects_non_unit(scale):
    with pytest.raises(ValueError):
        xi(scale * IDENTITY_QUAT)


# attitude_matrix


def test_attitude_matrix_identity():
    np.testing.assert_array_equal(attitude_matrix(IDENTITY_QUAT), np.eye(3))


def test_attitude_matrix_half_turn_z():
    np.testing.assert_allclose(attitude_matrix([0, 0, 1, 0]), np.diag([-1, -1, 1]), atol=0)


@given(unit_quats)
def test_attitude_matrix_orthogonal(q):
    A = attitude_matrix(q)
    assert np.abs(A.T @ A - np.eye(3)).max() < 1e-13
    assert abs(np.linalg.det(A) - 1.0) < 1e-13
    np.testing.assert_array_equal(A, attitude_matrix(-q))


@given(unit_quats)
def test_attitude_matrix_matches_scipy(q):
    assert np.abs(attitude_matrix(q) - dcm_oracle(q)).max() < 1e-14


def test_attitude_matrix_is_passive():
    # a frame rotated +90 deg about z sees the reference x-axis along -y
    q = rotvec_to_quat([0, 0, np.pi / 2])
    np.testing.assert_allclose(attitude_matrix(q) @ E1, -E2, atol=1e-15)


# small_angle_dcm


def test_small_angle_dcm_zero():
    np.testing.assert_array_equal(small_angle_dcm(np.zeros(3)), np.eye(3))


def test_small_angle_dcm_tiny():
    a = np.array([1e-3, 0, 0])
    assert np.linalg.norm(small_angle_dcm(a) - rodrigues_passive(a)) < 1e-6


def test_small_angle_dcm_second_order():
    a = np.array([0.1, -0.05, 0.2])
    D = small_angle_dcm(a) - rodrigues_passive(a)
    t2 = a @ a
    # leading term (1 - cos θ)(n nᵀ - I): spectral norm θ²/2, Frobenius θ²/√2
    assert np.linalg.norm(D, 2) < 0.5 * t2
    assert np.linalg.norm(D) < np.sqrt(0.5) * t2
    assert np.linalg.norm(D) > 0.5 * t2


def test_rodrigues_oracle_agrees_with_quaternion_path(rng):
    for _ in range(50):
        a = random_ball(rng, 3.0)
        np.testing.assert_allclose(
            attitude_matrix(rotvec_to_quat(a)), rodrigues_passive(a), atol=1e-14
        )


# quaternion products and rotation vectors


@given(unit_quats, unit_quats)
def test_quat_multiply_composes_dcms(q, p):
    qp = quat_multiply(q, p)
    assert np.abs(attitude_matrix(qp) - attitude_matrix(q) @ attitude_matrix(p)).max() < 1e-14
    assert np.abs(qp - quat_product_oracle(q, p)).max() < 1e-15 * 10


def test_quat_conjugate_inverts(rng):
    q = random_quat(rng)
    np.testing.assert_allclose(quat_multiply(q, quat_conjugate(q)), IDENTITY_QUAT, atol=1e-16)


@pytest.mark.parametrize(
    "alpha",
    [
        np.zeros(3),
        np.array([1e-12, 0, 0]),
        np.array([3e-9, -2e-9, 1e-9]),
        np.array([0.3, -0.2, 0.1]),
        np.array([0, 0, np.pi - 1e-6]),
    ],
)
def test_rotvec_round_trip(alpha):
    q = rotvec_to_quat(alpha)
    assert abs(np.linalg.norm(q) - 1.0) < 1e-15
    np.testing.assert_allclose(quat_to_rotvec(q), alpha, atol=1e-15, rtol=1e-12)


def test_rotvec_series_is_continuous():
    a = np.array([1.0, 2.0, 2.0]) / 3.0
    below = rotvec_to_quat(a * (1e-8 * (1 - 1e-9)))
    above = rotvec_to_quat(a * (1e-8 * (1 + 1e-9)))
    assert np.abs(below - above).max() < 1e-16


def test_quat_to_rotvec_short_way():
    q = rotvec_to_quat([0.2, 0, 0])
    np.testing.assert_allclose(quat_to_rotvec(-q), [0.2, 0, 0], atol=1e-15)


@given(unit_quats, vec3(0.5))
def test_attitude_error_inverts_composition(q_est, alpha):
    q_true = quat_multiply(rotvec_to_quat(alpha), q_est)
    assert np.abs(attitude_error(q_true, q_est) - alpha).max() < 1e-13


@given(unit_quats, vec3(0.3))
def test_rotate_quaternion_matches_product(q, theta):
    expected = normalize(quat_multiply(rotvec_to_quat(theta), q))
    assert np.abs(rotate_quaternion(q, theta) - expected).max() < 1e-15 * 4


def test_quat_discrepancy_sign_aligned(rng):
    q = random_quat(rng)
    assert quat_discrepancy(q, -q) == pytest.approx(0.0, abs=1e-15)
    p = quat_multiply(rotvec_to_quat([0, 1e-3, 0]), q)
    assert quat_discrepancy(p, q) == pytest.approx(1e-3, rel=1e-6)


# quat_correct


@given(unit_quats)
def test_quat_correct_zero_is_exact(q):
    out = quat_correct(q, np.zeros(3))
    np.testing.assert_array_equal(out, q)
    assert out is not q


def test_quat_correct_matches_product_oracle():
    eps = 1e-4
    a = np.array([2 * eps, 0.0, 0.0])
    dq = np.append(a / 2, 1.0)
    dq /= np.linalg.norm(dq)
    expected = quat_product_oracle(dq, IDENTITY_QUAT)
    out = quat_correct(IDENTITY_QUAT, a)
    assert np.abs(out - expected).max() < a @ a
    # first order: a rotation of 2*eps about x
    np.testing.assert_allclose(quat_to_rotvec(out), a, rtol=1e-7)


def test_quat_correct_is_left_product(rng):
    for _ in range(100):
        q = random_quat(rng)
        a = random_ball(rng, 0.2)
        expected = quat_product_oracle(normalize(np.append(a / 2, 1.0)), q)
        assert np.abs(quat_correct(q, a) - expected).max() < 1e-15 * 4


def test_quat_correct_unit_norm(rng):
    worst = 0.0
    for _ in range(1000):
        out = quat_correct(random_quat(rng), random_ball(rng, 0.2))
        worst = max(worst, abs(np.linalg.norm(out) - 1.0))
    assert worst <= 1e-15 * 2


@settings(max_examples=200)
@given(unit_quats, vec3(0.02))
def test_quat_correct_consistent_with_small_angle_dcm(q, a):
    lhs = attitude_matrix(quat_correct(q, a))
    rhs = small_angle_dcm(a) @ attitude_matrix(q)
    assert np.linalg.norm(lhs - rhs) <= 2.0 * (a @ a) + 1e-15


# reset_map


@given(unit_quats)
def test_reset_map_identity(q):
    assert np.abs(reset_map(q, q) - np.eye(3)).max() < 1e-14


def test_reset_map_random_bounds(rng):
    for _ in range(1000):
        q = random_quat(rng)
        a = random_ball(rng, 0.2)
        M = reset_map(q, quat_correct(q, a))
        assert np.linalg.det(M) > 0
        assert np.linalg.norm(M - np.eye(3)) < np.linalg.norm(a)


@pytest.mark.parametrize("size", [1e-4, 1e-2, 0.1, 0.2])
def test_reset_map_against_closed_forms(rng, size):
    q = random_quat(rng)
    a = size * np.array([0.48, -0.6, 0.64])
    M = reset_map(q, quat_correct(q, a))
    n2 = a @ a
    # after renormalization the product form carries the square-root factor
    exact = (np.eye(3) - 0.5 * cross_matrix(a)) / np.sqrt(1.0 + 0.25 * n2)
    np.testing.assert_allclose(M, exact, atol=1e-15 * 8)
    # the (1 + |a|²/4)^-1 form differs at second order; record the residual
    residual = np.linalg.norm(M - reset_map_closed_form(a))
    predicted = np.linalg.norm(exact) * (1.0 - 1.0 / np.sqrt(1.0 + 0.25 * n2))
    assert residual == pytest.approx(predicted, rel=1e-6, abs=1e-15)
    assert residual < 0.25 * n2 * np.sqrt(3.0)
    # M maps a onto itself up to the norm factor
    np.testing.assert_allclose(M @ a, a / np.sqrt(1.0 + 0.25 * n2), atol=1e-16)


@given(unit_quats)
def test_normalize_idempotent(q):
    assert np.abs(normalize(q) - q).max() < 1e-15
    with pytest.raises(ValueError):
        normalize(np.zeros(4))
