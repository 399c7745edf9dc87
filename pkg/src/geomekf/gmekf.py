"""Geometric multiplicative EKF measurement update.

The bias error is carried in the common (true body) frame,
``db = b - A(alpha) b_hat``. After the Kalman correction the global
quaternion and bias absorb the error estimate, the local estimate is reset to
zero, and the covariance is mapped through the linearized reset

    M_bar = [[M, 0], [[b_minus×] - [b_plus×] M, I]],   P++ = M_bar P+ M_barᵀ

with ``M = Ξᵀ(q_plus) Ξ(q_minus)``.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .attitude_math import cross_matrix, quat_correct, reset_map, small_angle_dcm
from .filter_core import (
    FilterState,
    MeasurementSet,
    error_update,
    joseph_update,
    kalman_gain,
    measurement_matrix,
    predicted_measurement,
    symmetrize,
)

logger = logging.getLogger(__name__)

LARGE_ANGLE_WARN_RAD = 0.35


class CovarianceMod(enum.Enum):
    """Covariance treatment after the reset.

    ``FULL`` applies the complete ``M_bar`` (attitude and bias coupling),
    ``ATTITUDE`` only rotates the attitude rows with ``M``, ``NONE`` skips
    the modification entirely.
    """

    FULL = "full"
    ATTITUDE = "attitude"
    NONE = "none"


@dataclass(frozen=True)
class ResetReport:
    M: NDArray[np.float64]
    M_bar: NDArray[np.float64]
    b_minus: NDArray[np.float64]
    b_plus: NDArray[np.float64]
    alpha_hat: NDArray[np.float64] | None = None
    db_hat: NDArray[np.float64] | None = None
    large_angle: bool = False


@dataclass(frozen=True)
class UpdateResult:
    state_plus: FilterState
    P_plus_plus: NDArray[np.float64]
    report: ResetReport
    innovation: NDArray[np.float64]
    P_plus: NDArray[np.float64]


def bias_update(
    b_minus: ArrayLike, alpha_hat: ArrayLike, db_hat: ArrayLike
) -> NDArray[np.float64]:
    """``b_plus = b_minus + [b_minus×] alpha_hat + db_hat``."""
    b_minus = np.asarray(b_minus, dtype=float)
    alpha_hat = np.asarray(alpha_hat, dtype=float)
    return b_minus + cross_matrix(b_minus) @ alpha_hat + np.asarray(db_hat, dtype=float)


def true_bias_reconstruct(
    alpha: ArrayLike, b_hat: ArrayLike, db: ArrayLike
) -> NDArray[np.float64]:
    """First-order true bias ``(I - [alpha×]) b_hat + db`` from a geometric error."""
    b_hat = np.asarray(b_hat, dtype=float)
    return small_angle_dcm(alpha) @ b_hat + np.asarray(db, dtype=float)


def reset_jacobian(
    q_minus: ArrayLike,
    q_plus: ArrayLike,
    b_minus: ArrayLike,
    b_plus: ArrayLike,
    mode: CovarianceMod = CovarianceMod.FULL,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Return ``(M, M_bar)`` for the requested covariance treatment."""
    M = reset_map(q_minus, q_plus)
    M_bar = np.eye(6)
    if mode is CovarianceMod.NONE:
        return M, M_bar
    M_bar[:3, :3] = M
    if mode is CovarianceMod.FULL:
        M_bar[3:, :3] = cross_matrix(b_minus) - cross_matrix(b_plus) @ M
    return M, M_bar


def reset_covariance(
    P_plus: NDArray[np.float64],
    q_minus: ArrayLike,
    q_plus: ArrayLike,
    b_minus: ArrayLike,
    b_plus: ArrayLike,
    *,
    mode: CovarianceMod = CovarianceMod.FULL,
    alpha_hat: ArrayLike | None = None,
    db_hat: ArrayLike | None = None,
) -> tuple[NDArray[np.float64], ResetReport]:
    """Map the post-update covariance through the reset, ``P++ = M_bar P+ M_barᵀ``."""
    b_minus = np.asarray(b_minus, dtype=float)
    b_plus = np.asarray(b_plus, dtype=float)
    M, M_bar = reset_jacobian(q_minus, q_plus, b_minus, b_plus, mode)
    P_pp = symmetrize(M_bar @ P_plus @ M_bar.T)
    large = False
    if alpha_hat is not None:
        alpha_hat = np.asarray(alpha_hat, dtype=float)
        large = bool(np.linalg.norm(alpha_hat) > LARGE_ANGLE_WARN_RAD)
        if large:
            logger.warning(
                "attitude correction %.3f rad exceeds the small-angle regime",
                np.linalg.norm(alpha_hat),
            )
    report = ResetReport(
        M=M,
        M_bar=M_bar,
        b_minus=b_minus,
        b_plus=b_plus,
        alpha_hat=alpha_hat,
        db_hat=None if db_hat is None else np.asarray(db_hat, dtype=float),
        large_angle=large,
    )
    return P_pp, report


def gmekf_measurement_update(
    state_minus: FilterState,
    P_minus: NDArray[np.float64],
    meas: MeasurementSet,
    covariance_mod: CovarianceMod = CovarianceMod.FULL,
) -> UpdateResult:
    """One GMEKF measurement update followed by the reset.

    Order: gain, Joseph covariance, error estimate, quaternion correction,
    geometric bias update, reset of the error estimate to zero, covariance
    modification.
    """
    q_minus, b_minus = state_minus.q_hat, state_minus.b_hat
    H = measurement_matrix(q_minus, meas.refs)
    K = kalman_gain(P_minus, H, meas.R)
    P_plus = joseph_update(P_minus, K, H, meas.R)
    y_pred = predicted_measurement(q_minus, meas.refs)
    dx = error_update(K, meas.y, y_pred)

    q_plus = quat_correct(q_minus, dx.alpha_hat)
    b_plus = bias_update(b_minus, dx.alpha_hat, dx.db_hat)
    # the local error estimate is discarded here: alpha_hat = db_hat = 0
    P_pp, report = reset_covariance(
        P_plus,
        q_minus,
        q_plus,
        b_minus,
        b_plus,
        mode=covariance_mod,
        alpha_hat=dx.alpha_hat,
        db_hat=dx.db_hat,
    )
    return UpdateResult(
        state_plus=FilterState(q_plus, b_plus),
        P_plus_plus=P_pp,
        report=report,
        innovation=meas.y - y_pred,
        P_plus=P_plus,
    )
