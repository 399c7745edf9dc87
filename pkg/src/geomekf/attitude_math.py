"""Quaternion and rotation algebra shared by every filter.

Conventions
-----------
* Quaternions are scalar-last numpy arrays ``[x, y, z, w]`` where ``[x, y, z]``
  is the vector part and ``w`` the scalar part.
* ``attitude_matrix(q)`` is the passive direction-cosine matrix mapping
  reference-frame vectors into the body frame.
* Composition follows ``A(q ⊗ p) = A(q) A(p)``.
* The attitude error of a true attitude ``q`` about an estimate ``q_hat`` is
  the rotation vector ``alpha`` with ``q = dq(alpha) ⊗ q_hat``, so that
  ``A(q) ≈ (I - [alpha×]) A(q_hat)`` to first order.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import ArrayLike, NDArray

UNIT_NORM_TOL = 1e-6
_SERIES_THRESHOLD = 1e-8

IDENTITY_QUAT = np.array([0.0, 0.0, 0.0, 1.0])


def _check_unit(q: NDArray[np.float64]) -> None:
    n = math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
    if abs(n - 1.0) > UNIT_NORM_TOL:
        raise ValueError(f"expected a unit quaternion, got norm {n!r}")


def normalize(q: ArrayLike) -> NDArray[np.float64]:
    """Return ``q / ||q||``."""
    q = np.asarray(q, dtype=float)
    n = math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
    if n == 0.0 or not math.isfinite(n):
        raise ValueError("cannot normalize a zero or non-finite quaternion")
    return q / n


def cross_matrix(v: ArrayLike) -> NDArray[np.float64]:
    """Skew-symmetric matrix ``[v×]`` such that ``[v×] u = v × u``."""
    x, y, z = v
    return np.array(
        [
            [0.0, -z, y],
            [z, 0.0, -x],
            [-y, x, 0.0],
        ]
    )


def xi(q: ArrayLike) -> NDArray[np.float64]:
    """The 4x3 quaternion kinematics matrix ``Ξ(q)``.

    Top block ``w I + [ρ×]``, bottom row ``-ρᵀ``. For a unit quaternion its
    columns are orthonormal and orthogonal to ``q`` itself.
    """
    q = np.asarray(q, dtype=float)
    _check_unit(q)
    x, y, z, w = q
    return np.array(
        [
            [w, -z, y],
            [z, w, -x],
            [-y, x, w],
            [-x, -y, -z],
        ]
    )


def attitude_matrix(q: ArrayLike) -> NDArray[np.float64]:
    """Direction-cosine matrix ``A(q)`` (reference frame -> body frame)."""
    q = np.asarray(q, dtype=float)
    _check_unit(q)
    x, y, z, w = q
    xx, yy, zz, ww = x * x, y * y, z * z, w * w
    xy, xz, yz = x * y, x * z, y * z
    wx, wy, wz = w * x, w * y, w * z
    return np.array(
        [
            [ww + xx - yy - zz, 2.0 * (xy + wz), 2.0 * (xz - wy)],
            [2.0 * (xy - wz), ww - xx + yy - zz, 2.0 * (yz + wx)],
            [2.0 * (xz + wy), 2.0 * (yz - wx), ww - xx - yy + zz],
        ]
    )


def small_angle_dcm(alpha: ArrayLike) -> NDArray[np.float64]:
    """First-order attitude matrix of a rotation vector, ``I - [alpha×]``."""
    return np.eye(3) - cross_matrix(alpha)


def quat_multiply(q: ArrayLike, p: ArrayLike) -> NDArray[np.float64]:
    """Quaternion product ``q ⊗ p`` with ``A(q ⊗ p) = A(q) A(p)``."""
    qx, qy, qz, qw = q
    px, py, pz, pw = p
    return np.array(
        [
            qw * px + pw * qx - (qy * pz - qz * py),
            qw * py + pw * qy - (qz * px - qx * pz),
            qw * pz + pw * qz - (qx * py - qy * px),
            qw * pw - (qx * px + qy * py + qz * pz),
        ]
    )


def quat_conjugate(q: ArrayLike) -> NDArray[np.float64]:
    x, y, z, w = q
    return np.array([-x, -y, -z, w])


def rotvec_to_quat(alpha: ArrayLike) -> NDArray[np.float64]:
    """Exact unit quaternion of a rotation vector.

    ``[sin(θ/2) α/θ; cos(θ/2)]`` with ``θ = ||α||``; below 1e-8 rad a Taylor
    series replaces ``sin(θ/2)/θ``.
    """
    ax, ay, az = alpha
    theta2 = ax * ax + ay * ay + az * az
    theta = math.sqrt(theta2)
    if theta < _SERIES_THRESHOLD:
        s = 0.5 - theta2 / 48.0
        c = 1.0 - theta2 / 8.0
    else:
        s = math.sin(0.5 * theta) / theta
        c = math.cos(0.5 * theta)
    return np.array([s * ax, s * ay, s * az, c])


def rotate_quaternion(q: ArrayLike, theta: ArrayLike) -> NDArray[np.float64]:
    """``normalize(dq(theta) ⊗ q)``: apply a body-frame rotation increment."""
    tx, ty, tz = theta
    th2 = tx * tx + ty * ty + tz * tz
    th = math.sqrt(th2)
    if th < _SERIES_THRESHOLD:
        s = 0.5 - th2 / 48.0
        pw = 1.0 - th2 / 8.0
    else:
        s = math.sin(0.5 * th) / th
        pw = math.cos(0.5 * th)
    px, py, pz = s * tx, s * ty, s * tz
    qx, qy, qz, qw = q
    x = pw * qx + qw * px - (py * qz - pz * qy)
    y = pw * qy + qw * py - (pz * qx - px * qz)
    z = pw * qz + qw * pz - (px * qy - py * qx)
    w = pw * qw - (px * qx + py * qy + pz * qz)
    n = math.sqrt(x * x + y * y + z * z + w * w)
    return np.array([x / n, y / n, z / n, w / n])


def quat_to_rotvec(q: ArrayLike) -> NDArray[np.float64]:
    """Rotation vector of a unit quaternion, taking the short way round."""
    x, y, z, w = q
    if w < 0.0:
        x, y, z, w = -x, -y, -z, -w
    vn = math.sqrt(x * x + y * y + z * z)
    if vn < _SERIES_THRESHOLD:
        # 2 atan2(vn, w)/vn -> 2/w for vn -> 0
        k = 2.0 / w
    else:
        k = 2.0 * math.atan2(vn, w) / vn
    return np.array([k * x, k * y, k * z])


def attitude_error(q_true: ArrayLike, q_est: ArrayLike) -> NDArray[np.float64]:
    """Rotation vector ``alpha`` with ``q_true = dq(alpha) ⊗ q_est``."""
    return quat_to_rotvec(quat_multiply(q_true, quat_conjugate(q_est)))


def quat_discrepancy(q1: ArrayLike, q2: ArrayLike) -> float:
    """Sign-aligned angular distance ``2 ||vec(q1 ⊗ q2⁻¹)||`` in radians."""
    d = quat_multiply(q1, quat_conjugate(q2))
    return 2.0 * math.sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])


def quat_correct(q_minus: ArrayLike, alpha_hat: ArrayLike) -> NDArray[np.float64]:
    """Multiplicative attitude correction ``q + 0.5 Ξ(q) alpha_hat``, renormalized.

    The additive step equals ``[alpha_hat/2; 1] ⊗ q`` and is not unit-norm;
    the result is always renormalized. A zero correction returns ``q_minus``
    untouched.
    """
    q_minus = np.asarray(q_minus, dtype=float)
    alpha_hat = np.asarray(alpha_hat, dtype=float)
    if not alpha_hat.any():
        _check_unit(q_minus)
        return q_minus.copy()
    return normalize(q_minus + 0.5 * xi(q_minus) @ alpha_hat)


def reset_map(q_minus: ArrayLike, q_plus: ArrayLike) -> NDArray[np.float64]:
    """Attitude-error reset map ``M = Ξᵀ(q_plus) Ξ(q_minus)``.

    Maps the pre-reset attitude error deviation (about ``q_minus``) to the
    post-reset one (about ``q_plus``) to first order.
    """
    return xi(q_plus).T @ xi(q_minus)


def reset_map_closed_form(alpha_hat: ArrayLike) -> NDArray[np.float64]:
    """Printed closed form ``(1 + ||a||²/4)⁻¹ (I - [a×]/2)``.

    Kept as a cross-check for :func:`reset_map`; it is the exact Jacobian when
    the attitude error is parameterized as twice the Gibbs vector, while the
    product form evaluated after renormalization carries the factor
    ``(1 + ||a||²/4)^(-1/2)`` instead.
    """
    a = np.asarray(alpha_hat, dtype=float)
    return (np.eye(3) - 0.5 * cross_matrix(a)) / (1.0 + 0.25 * float(a @ a))
