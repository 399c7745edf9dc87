"""Truth model and sensor simulator.

Random numbers come from numpy's ``PCG64`` bit generator. A scenario seed
feeds a ``SeedSequence`` which is split with ``spawn`` into independent
streams in this fixed order: bias random walk, gyro noise, initial estimate
error, then one stream per vector sensor (in reference order). Identical
``(config, seed)`` pairs therefore give identical scenarios regardless of how
many scenarios are generated concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .attitude_math import (
    attitude_matrix,
    normalize,
    quat_conjugate,
    quat_multiply,
    rotate_quaternion,
    rotvec_to_quat,
)
from .filter_core import GyroSample, MeasurementSet, NoiseParams

DEG = math.pi / 180.0
DEG_PER_H = DEG / 3600.0


@dataclass(frozen=True)
class TruthState:
    q_true: NDArray[np.float64]
    b_true: NDArray[np.float64]
    t: float


@dataclass(frozen=True)
class RateProfile:
    """Body rate ``amplitude`` (constant) or ``amplitude * sin(2π f t)`` per axis, rad/s."""

    kind: str = "constant"
    amplitude: tuple[float, float, float] = (0.0, 0.0, 0.0)
    frequency: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        if self.kind not in ("constant", "sinusoidal"):
            raise ValueError(f"unknown rate profile {self.kind!r}")

    def __call__(self, t: float) -> NDArray[np.float64]:
        a = np.asarray(self.amplitude, dtype=float)
        if self.kind == "constant":
            return a.copy()
        return a * np.sin(2.0 * math.pi * np.asarray(self.frequency, dtype=float) * t)


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to generate a scenario, in SI units (rad, rad/s, s).

    The initial estimate is ``q_hat0 = dq(alpha0)⁻¹ ⊗ q_true0`` and
    ``b_hat0 = b_true0 - db0`` where ``alpha0``/``db0`` are the fixed
    ``initial_attitude_error``/``initial_bias_error`` plus, when
    ``randomize_initial_error`` is set, a draw from the initial covariance.
    """

    duration: float = 3600.0
    gyro_dt: float = 0.1
    meas_dt: float = 1.0
    rate_profile: RateProfile = field(
        default_factory=lambda: RateProfile(
            "sinusoidal", (0.1 * DEG, 0.05 * DEG, 0.075 * DEG), (0.005, 0.003, 0.004)
        )
    )
    initial_attitude: tuple[float, float, float] = (0.0, 0.0, 0.0)
    initial_bias: tuple[float, float, float] = (0.1 * DEG_PER_H,) * 3
    noise: NoiseParams = field(
        default_factory=lambda: NoiseParams(1e-5, 1e-8, (1e-3 * DEG,))
    )
    refs: tuple[tuple[float, float, float], ...] = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0))
    initial_attitude_error: tuple[float, float, float] = (0.0, 0.0, 0.0)
    initial_bias_error: tuple[float, float, float] = (0.0, 0.0, 0.0)
    initial_sigma_attitude: float = 0.05 * DEG
    initial_sigma_bias: float = 0.2 * DEG_PER_H
    randomize_initial_error: bool = True
    seed: int = 0

    @property
    def meas_ratio(self) -> int:
        return int(round(self.meas_dt / self.gyro_dt))

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.gyro_dt))

    @property
    def sigma_meas(self) -> NDArray[np.float64]:
        return np.broadcast_to(
            np.asarray(self.noise.sigma_meas, dtype=float), (len(self.refs),)
        ).copy()

    def validate(self) -> None:
        if not (self.gyro_dt > 0 and self.meas_dt > 0 and self.duration > 0):
            raise ValueError("duration, gyro_dt and meas_dt must be positive")
        ratio = self.meas_dt / self.gyro_dt
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio) or round(ratio) < 1:
            raise ValueError(
                f"meas_dt={self.meas_dt} is not an integer multiple of gyro_dt={self.gyro_dt}"
            )
        steps = self.duration / self.gyro_dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ValueError("duration is not an integer multiple of gyro_dt")
        if len(self.refs) < 1:
            raise ValueError("at least one reference vector is required")
        n_sig = len(self.noise.sigma_meas)
        if n_sig not in (1, len(self.refs)):
            raise ValueError("sigma_meas must be a scalar or one value per reference")
        if self.initial_sigma_attitude < 0 or self.initial_sigma_bias < 0:
            raise ValueError("initial standard deviations must be non-negative")

    @property
    def P0(self) -> NDArray[np.float64]:
        return np.diag(
            np.repeat([self.initial_sigma_attitude**2, self.initial_sigma_bias**2], 3)
        )


@dataclass(frozen=True)
class Scenario:
    """Truth trajectory, gyro stream and measurement epochs.

    ``q_true``/``b_true`` hold ``n_steps + 1`` samples at ``t``; ``gyro[k]``
    is the rate measured at ``t[k]`` and held over ``[t[k], t[k+1])``.
    Measurement ``j`` is taken at ``t[meas_index[j]]``.
    """

    config: ScenarioConfig
    t: NDArray[np.float64]
    q_true: NDArray[np.float64]
    b_true: NDArray[np.float64]
    gyro: NDArray[np.float64]
    meas_index: NDArray[np.int64]
    meas_obs: NDArray[np.float64]
    q0_hat: NDArray[np.float64]
    b0_hat: NDArray[np.float64]
    P0: NDArray[np.float64]

    def measurement(self, j: int, sigma_meas: ArrayLike) -> MeasurementSet:
        return MeasurementSet.from_sigmas(
            np.asarray(self.config.refs, dtype=float), self.meas_obs[j], sigma_meas
        )


def step_truth(
    s: TruthState,
    omega_true: ArrayLike,
    dt: float,
    noise: NoiseParams,
    rng: np.random.Generator,
) -> TruthState:
    """Advance attitude exactly at constant ``omega_true``; bias takes a random-walk step."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    q = rotate_quaternion(s.q_true, np.asarray(omega_true, dtype=float) * dt)
    b = s.b_true
    if noise.sigma_u > 0.0:
        b = b + noise.sigma_u * math.sqrt(dt) * rng.standard_normal(3)
    return TruthState(q, b, s.t + dt)


def gyro_measure(
    omega_true: ArrayLike,
    b_true: ArrayLike,
    noise: NoiseParams,
    rng: np.random.Generator,
    dt: float,
) -> GyroSample:
    """``w_meas = w + b + sigma_v / sqrt(dt) * n``."""
    w = np.asarray(omega_true, dtype=float) + np.asarray(b_true, dtype=float)
    if noise.sigma_v > 0.0:
        w = w + noise.sigma_v / math.sqrt(dt) * rng.standard_normal(3)
    return GyroSample(w, dt)


def vector_measure(
    q_true: ArrayLike,
    refs: ArrayLike,
    sigma_meas: float | ArrayLike,
    rngs: np.random.Generator | list[np.random.Generator],
) -> NDArray[np.float64]:
    """Body-frame observations ``A(q) r_i + sigma_i n_i`` (not renormalized).

    ``rngs`` is either one generator shared by all sensors or one per sensor.
    """
    refs = np.atleast_2d(np.asarray(refs, dtype=float))
    n = refs.shape[0]
    sig = np.broadcast_to(np.asarray(sigma_meas, dtype=float), (n,))
    obs = refs @ attitude_matrix(q_true).T
    if not isinstance(rngs, (list, tuple)):
        rngs = [rngs] * n
    for i in range(n):
        if sig[i] > 0.0:
            obs[i] += sig[i] * rngs[i].standard_normal(3)
    return obs


def generate_scenario(cfg: ScenarioConfig) -> Scenario:
    cfg.validate()
    n_refs = len(cfg.refs)
    children = np.random.SeedSequence(cfg.seed).spawn(3 + n_refs)
    rng_bias, rng_gyro, rng_init, *rng_vec = (
        np.random.Generator(np.random.PCG64(c)) for c in children
    )

    N = cfg.n_steps
    ratio = cfg.meas_ratio
    dt = cfg.gyro_dt
    refs = np.asarray(cfg.refs, dtype=float)
    sig_meas = cfg.sigma_meas

    t = np.arange(N + 1) * dt
    q_true = np.empty((N + 1, 4))
    b_true = np.empty((N + 1, 3))
    gyro = np.empty((N, 3))
    meas_index = np.arange(ratio, N + 1, ratio)
    meas_obs = np.empty((meas_index.size, n_refs, 3))

    s = TruthState(
        rotvec_to_quat(cfg.initial_attitude), np.asarray(cfg.initial_bias, float), 0.0
    )
    q_true[0], b_true[0] = s.q_true, s.b_true
    j = 0
    for k in range(N):
        w = cfg.rate_profile(t[k])
        gyro[k] = gyro_measure(w, s.b_true, cfg.noise, rng_gyro, dt).omega_meas
        s = step_truth(s, w, dt, cfg.noise, rng_bias)
        s = TruthState(s.q_true, s.b_true, t[k + 1])
        q_true[k + 1], b_true[k + 1] = s.q_true, s.b_true
        if (k + 1) % ratio == 0:
            meas_obs[j] = vector_measure(s.q_true, refs, sig_meas, rng_vec)
            j += 1

    alpha0 = np.asarray(cfg.initial_attitude_error, dtype=float)
    db0 = np.asarray(cfg.initial_bias_error, dtype=float)
    if cfg.randomize_initial_error:
        alpha0 = alpha0 + cfg.initial_sigma_attitude * rng_init.standard_normal(3)
        db0 = db0 + cfg.initial_sigma_bias * rng_init.standard_normal(3)
    q0_hat = normalize(quat_multiply(quat_conjugate(rotvec_to_quat(alpha0)), q_true[0]))
    b0_hat = b_true[0] - db0

    return Scenario(
        config=cfg,
        t=t,
        q_true=q_true,
        b_true=b_true,
        gyro=gyro,
        meas_index=meas_index,
        meas_obs=meas_obs,
        q0_hat=q0_hat,
        b0_hat=b0_hat,
        P0=cfg.P0,
    )

