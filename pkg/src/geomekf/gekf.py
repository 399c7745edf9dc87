"""Covariance-projection GEKF measurement update over the 7-component state.

Works on ``x = [q; b]`` directly. The 6-dimensional error covariance is
mapped into measurement space through the sensitivity ``C`` of the 7-state
with respect to ``[alpha; db]``, and the correction is applied additively to
the seven components before renormalizing the quaternion. Only the reset
covariance projection is shared with :mod:`geomekf.gmekf`.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .attitude_math import attitude_matrix, cross_matrix, normalize, xi
from .filter_core import (
    FilterState,
    MeasurementSet,
    joseph_update,
    kalman_gain,
    predicted_measurement,
)
from .gmekf import CovarianceMod, UpdateResult, reset_covariance


def sensitivity_c(q_minus: ArrayLike, b_minus: ArrayLike) -> NDArray[np.float64]:
    """7x6 matrix ``[[0.5 Ξ(q), 0], [[b×], I]]``."""
    C = np.zeros((7, 6))
    C[:4, :3] = 0.5 * xi(q_minus)
    C[4:, :3] = cross_matrix(b_minus)
    C[4:, 3:] = np.eye(3)
    return C


def htilde(q_minus: ArrayLike, refs: ArrayLike) -> NDArray[np.float64]:
    """3n x 7 quaternion-space sensitivity, rows ``[2 [A r_i ×] Ξᵀ(q), 0]``."""
    refs = np.atleast_2d(np.asarray(refs, dtype=float))
    A = attitude_matrix(q_minus)
    XiT = xi(q_minus).T
    n = refs.shape[0]
    Ht = np.zeros((3 * n, 7))
    for i, r in enumerate(refs):
        Ht[3 * i : 3 * i + 3, :4] = 2.0 * cross_matrix(A @ r) @ XiT
    return Ht


def hbar(q_minus: ArrayLike, b_minus: ArrayLike, refs: ArrayLike) -> NDArray[np.float64]:
    """Error-space sensitivity ``H̃ C``."""
    return htilde(q_minus, refs) @ sensitivity_c(q_minus, b_minus)


def gekf_measurement_update(
    state_minus: FilterState,
    P_minus: NDArray[np.float64],
    meas: MeasurementSet,
) -> UpdateResult:
    q_minus, b_minus = state_minus.q_hat, state_minus.b_hat
    C = sensitivity_c(q_minus, b_minus)
    Hb = htilde(q_minus, meas.refs) @ C
    K = kalman_gain(P_minus, Hb, meas.R)
    P_plus = joseph_update(P_minus, K, Hb, meas.R)

    innovation = meas.y - predicted_measurement(q_minus, meas.refs)
    dx = K @ innovation
    x_plus = np.concatenate([q_minus, b_minus]) + C @ dx
    q_plus = normalize(x_plus[:4])
    b_plus = x_plus[4:]

    P_pp, report = reset_covariance(
        P_plus,
        q_minus,
        q_plus,
        b_minus,
        b_plus,
        mode=CovarianceMod.FULL,
        alpha_hat=dx[:3],
        db_hat=dx[3:],
    )
    return UpdateResult(
        state_plus=FilterState(q_plus, b_plus),
        P_plus_plus=P_pp,
        report=report,
        innovation=innovation,
        P_plus=P_plus,
    )
