"""Kalman machinery shared by the MEKF, GMEKF and GEKF.

The error state is the 6-vector ``[alpha; db]``: attitude error rotation
vector (rad) followed by the gyro bias error (rad/s). Covariances are 6x6
with the attitude block top-left.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from .attitude_math import attitude_matrix, cross_matrix, rotate_quaternion

_I6 = np.eye(6)
_G_CLASSICAL = np.diag([-1.0, -1.0, -1.0, 1.0, 1.0, 1.0])
_G_CLASSICAL.setflags(write=False)


class NumericalError(RuntimeError):
    """Raised when a covariance or gain computation loses definiteness."""


class ErrorModel(enum.Enum):
    """Definition of the bias error carried by the filter.

    ``CLASSICAL`` uses ``db = b - b_hat``; ``GEOMETRIC`` expresses the bias
    estimate in the true body frame first, ``db = b - A(alpha) b_hat``.
    """

    CLASSICAL = "classical"
    GEOMETRIC = "geometric"


@dataclass(frozen=True)
class FilterState:
    q_hat: NDArray[np.float64]
    b_hat: NDArray[np.float64]

    def __post_init__(self) -> None:
        q = np.asarray(self.q_hat, dtype=float)
        b = np.asarray(self.b_hat, dtype=float)
        if q.shape != (4,) or b.shape != (3,):
            raise ValueError("FilterState expects a 4-quaternion and a 3-bias")
        if not math.isfinite(float(q.sum()) + float(b.sum())):
            raise ValueError("FilterState must be finite")
        if abs(math.sqrt(float(q @ q)) - 1.0) > 1e-6:
            raise ValueError("FilterState quaternion must be unit norm")
        object.__setattr__(self, "q_hat", q)
        object.__setattr__(self, "b_hat", b)

    @classmethod
    def _trusted(cls, q_hat: NDArray[np.float64], b_hat: NDArray[np.float64]):
        # skips validation for states produced by this package's own updates
        obj = object.__new__(cls)
        object.__setattr__(obj, "q_hat", q_hat)
        object.__setattr__(obj, "b_hat", b_hat)
        return obj


@dataclass(frozen=True)
class ErrorEstimate:
    alpha_hat: NDArray[np.float64]
    db_hat: NDArray[np.float64]

    @property
    def vector(self) -> NDArray[np.float64]:
        return np.concatenate([self.alpha_hat, self.db_hat])

    @classmethod
    def zero(cls) -> ErrorEstimate:
        return cls(np.zeros(3), np.zeros(3))


@dataclass(frozen=True)
class MeasurementSet:
    """``n`` reference directions, their noisy body-frame observations and R."""

    refs: NDArray[np.float64]
    obs: NDArray[np.float64]
    R: NDArray[np.float64]

    def __post_init__(self) -> None:
        refs = np.atleast_2d(np.asarray(self.refs, dtype=float))
        obs = np.atleast_2d(np.asarray(self.obs, dtype=float))
        R = np.asarray(self.R, dtype=float)
        n = refs.shape[0]
        if n < 1 or refs.shape != (n, 3):
            raise ValueError("need at least one 3-vector reference direction")
        if obs.shape != (n, 3):
            raise ValueError(f"expected {n} observations, got shape {obs.shape}")
        if R.shape != (3 * n, 3 * n):
            raise ValueError(f"R must be {3 * n}x{3 * n}, got {R.shape}")
        if np.max(np.abs(np.linalg.norm(refs, axis=1) - 1.0)) > 1e-9:
            raise ValueError("reference directions must be unit vectors")
        if np.abs(R - R.T).max() > 1e-12 * np.abs(R).max():
            raise ValueError("R must be symmetric")
        object.__setattr__(self, "refs", refs)
        object.__setattr__(self, "obs", obs)
        object.__setattr__(self, "R", R)

    @classmethod
    def from_sigmas(
        cls, refs: ArrayLike, obs: ArrayLike, sigma: float | Sequence[float]
    ) -> MeasurementSet:
        """Block-diagonal ``R = diag(σ_i² I3)``; ``sigma`` is scalar or per sensor."""
        refs = np.atleast_2d(np.asarray(refs, dtype=float))
        sig = np.broadcast_to(np.asarray(sigma, dtype=float), (refs.shape[0],))
        R = np.diag(np.repeat(sig**2, 3))
        return cls(refs, obs, R)

    @property
    def y(self) -> NDArray[np.float64]:
        return self.obs.reshape(-1)


@dataclass(frozen=True)
class GyroSample:
    omega_meas: NDArray[np.float64]
    dt: float


@dataclass(frozen=True)
class NoiseParams:
    """Gyro angle random walk ``sigma_v`` [rad/s^½], rate random walk
    ``sigma_u`` [rad/s^(3/2)] and per-sensor vector noise ``sigma_meas`` [rad]."""

    sigma_v: float
    sigma_u: float
    sigma_meas: tuple[float, ...] = (0.0,)

    def __post_init__(self) -> None:
        sm = tuple(float(s) for s in np.atleast_1d(self.sigma_meas))
        object.__setattr__(self, "sigma_meas", sm)
        if self.sigma_v < 0 or self.sigma_u < 0 or min(sm) < 0:
            raise ValueError("noise standard deviations must be non-negative")


def symmetrize(P: NDArray[np.float64]) -> NDArray[np.float64]:
    return 0.5 * (P + P.T)


def measurement_matrix(q_minus: ArrayLike, refs: ArrayLike) -> NDArray[np.float64]:
    """Stacked sensitivity ``[[A(q) r_i ×], 0]`` of the vector observations."""
    refs = np.atleast_2d(np.asarray(refs, dtype=float))
    if refs.size == 0:
        raise ValueError("measurement set must contain at least one reference")
    A = attitude_matrix(q_minus)
    n = refs.shape[0]
    H = np.zeros((3 * n, 6))
    for i, body in enumerate(refs @ A.T):
        H[3 * i : 3 * i + 3, :3] = cross_matrix(body)
    return H


def predicted_measurement(q_minus: ArrayLike, refs: ArrayLike) -> NDArray[np.float64]:
    """Stacked body-frame predictions ``A(q) r_i``."""
    refs = np.atleast_2d(np.asarray(refs, dtype=float))
    if refs.size == 0:
        raise ValueError("measurement set must contain at least one reference")
    return (refs @ attitude_matrix(q_minus).T).reshape(-1)


def kalman_gain(
    P_minus: NDArray[np.float64], H: NDArray[np.float64], R: NDArray[np.float64]
) -> NDArray[np.float64]:
    """Optimal gain ``K = P Hᵀ (H P Hᵀ + R)⁻¹`` via a Cholesky solve."""
    PHt = P_minus @ H.T
    S = symmetrize(H @ PHt + R)
    tr = float(np.trace(S))
    try:
        c, lower = scipy.linalg.cho_factor(S, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise NumericalError(
            f"innovation covariance not positive definite (cond={np.linalg.cond(S):.3e})"
        ) from exc
    pivots = np.diag(c) ** 2
    if pivots.min() < 1e-14 * tr:
        raise NumericalError(
            f"innovation covariance near singular: min pivot {pivots.min():.3e}, "
            f"trace {tr:.3e}, cond={np.linalg.cond(S):.3e}"
        )
    return scipy.linalg.cho_solve((c, lower), PHt.T, check_finite=False).T


def joseph_update(
    P_minus: NDArray[np.float64],
    K: NDArray[np.float64],
    H: NDArray[np.float64],
    R: NDArray[np.float64],
) -> NDArray[np.float64]:
    """Joseph-form covariance update ``(I-KH) P (I-KH)ᵀ + K R Kᵀ``."""
    if K.shape != H.T.shape or R.shape != (H.shape[0], H.shape[0]):
        raise ValueError("shape mismatch between K, H and R")
    A = _I6 - K @ H
    return symmetrize(A @ P_minus @ A.T + K @ R @ K.T)


def error_update(
    K: NDArray[np.float64], y_obs: ArrayLike, y_pred: ArrayLike
) -> ErrorEstimate:
    dx = K @ (np.asarray(y_obs, dtype=float) - np.asarray(y_pred, dtype=float))
    return ErrorEstimate(dx[:3], dx[3:])


def error_dynamics(
    omega_meas: NDArray[np.float64], b_hat: NDArray[np.float64], model: ErrorModel
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Continuous error-state matrices ``(F, G)`` for noise ``[eta_v; eta_u]``.

    Classical::

        F = [[-[w_hat×], -I], [0, 0]]            G = [[-I, 0], [0, I]]

    Geometric (``db = b - A(alpha) b_hat`` with ``A ≈ I - [alpha×]``)::

        F = [[-[w_meas×], -I], [[b_hat×][w_meas×], [b_hat×]]]
        G = [[-I, 0], [[b_hat×], I]]

    where ``w_hat = w_meas - b_hat``. Both coincide when ``b_hat = 0``.
    """
    wx, wy, wz = omega_meas
    bx, by, bz = b_hat
    if model is ErrorModel.CLASSICAL:
        wx, wy, wz = wx - bx, wy - by, wz - bz
        F = np.array(
            [
                [0.0, wz, -wy, -1.0, 0.0, 0.0],
                [-wz, 0.0, wx, 0.0, -1.0, 0.0],
                [wy, -wx, 0.0, 0.0, 0.0, -1.0],
                [0.0] * 6,
                [0.0] * 6,
                [0.0] * 6,
            ]
        )
        return F, _G_CLASSICAL
    if model is not ErrorModel.GEOMETRIC:
        raise ValueError(f"unknown error model {model!r}")
    # [b×][w×] = w bᵀ - (b·w) I
    bw = bx * wx + by * wy + bz * wz
    F = np.array(
        [
            [0.0, wz, -wy, -1.0, 0.0, 0.0],
            [-wz, 0.0, wx, 0.0, -1.0, 0.0],
            [wy, -wx, 0.0, 0.0, 0.0, -1.0],
            [wx * bx - bw, wx * by, wx * bz, 0.0, -bz, by],
            [wy * bx, wy * by - bw, wy * bz, bz, 0.0, -bx],
            [wz * bx, wz * by, wz * bz - bw, -by, bx, 0.0],
        ]
    )
    G = np.array(
        [
            [-1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, -1.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, -1.0, 0.0, 0.0, 0.0],
            [0.0, -bz, by, 1.0, 0.0, 0.0],
            [bz, 0.0, -bx, 0.0, 1.0, 0.0],
            [-by, bx, 0.0, 0.0, 0.0, 1.0],
        ]
    )
    return F, G


def transition_matrix(F: NDArray[np.float64], dt: float) -> NDArray[np.float64]:
    """Second-order series for ``expm(F dt)``."""
    Fdt = F * dt
    return _I6 + Fdt + 0.5 * (Fdt @ Fdt)


def propagate(
    state: FilterState,
    P: NDArray[np.float64],
    gyro: GyroSample,
    noise: NoiseParams,
    error_model: ErrorModel,
) -> tuple[FilterState, NDArray[np.float64]]:
    """Time update over one gyro interval at constant estimated rate.

    The quaternion advances by the exact increment of ``(w_meas - b_hat) dt``;
    the bias estimate is held. ``P <- Phi P Phiᵀ + Qd`` with the process noise
    integrated trapezoidally, ``Qd = (Phi G Q Gᵀ Phiᵀ + G Q Gᵀ) dt / 2``.
    """
    dt = float(gyro.dt)
    if not dt > 0.0 or not math.isfinite(dt):
        raise ValueError(f"gyro interval must be positive, got {dt!r}")
    omega_meas = np.asarray(gyro.omega_meas, dtype=float)
    b_hat = state.b_hat
    q_next = rotate_quaternion(state.q_hat, (omega_meas - b_hat) * dt)

    F, G = error_dynamics(omega_meas, b_hat, error_model)
    Phi = transition_matrix(F, dt)
    sv2, su2 = noise.sigma_v**2, noise.sigma_u**2
    GQG = (G * (sv2, sv2, sv2, su2, su2, su2)) @ G.T
    # Phi P Phiᵀ + Qd, with the Phi-weighted half of Qd folded into P
    half = (0.5 * dt) * GQG
    P_next = symmetrize(Phi @ (P + half) @ Phi.T + half)
    return FilterState._trusted(q_next, b_hat), P_next
