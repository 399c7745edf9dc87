"""Classical MEKF measurement update (bias error ``db = b - b_hat``)."""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

from .attitude_math import quat_correct
from .filter_core import (
    FilterState,
    MeasurementSet,
    error_update,
    joseph_update,
    kalman_gain,
    measurement_matrix,
    predicted_measurement,
)
from .gmekf import CovarianceMod, UpdateResult, reset_covariance


def mekf_measurement_update(
    state_minus: FilterState,
    P_minus: NDArray[np.float64],
    meas: MeasurementSet,
    attitude_reset: bool = True,
) -> UpdateResult:
    """Additive bias correction; ``attitude_reset`` rotates the attitude rows of
    the covariance by ``M`` after the quaternion absorbs the correction."""
    q_minus, b_minus = state_minus.q_hat, state_minus.b_hat
    H = measurement_matrix(q_minus, meas.refs)
    K = kalman_gain(P_minus, H, meas.R)
    P_plus = joseph_update(P_minus, K, H, meas.R)
    y_pred = predicted_measurement(q_minus, meas.refs)
    dx = error_update(K, meas.y, y_pred)

    q_plus = quat_correct(q_minus, dx.alpha_hat)
    b_plus = b_minus + dx.db_hat
    mode = CovarianceMod.ATTITUDE if attitude_reset else CovarianceMod.NONE
    P_pp, report = reset_covariance(
        P_plus,
        q_minus,
        q_plus,
        b_minus,
        b_plus,
        mode=mode,
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
