"""YAML benchmark configuration.

Angles are given in degrees and angular rates in deg/h; gyro noise densities
follow the same units, ``sigma_v`` in deg/h^(1/2) and ``sigma_u`` in
deg/h^(3/2). Everything is converted to rad / rad/s on load. Schema::

    seed: 0
    scenario:
      duration: 3600.0                 # s
      gyro_dt: 0.1                     # s
      meas_dt: 1.0                     # s, integer multiple of gyro_dt
      rate_profile:
        kind: sinusoidal               # constant | sinusoidal
        amplitude_deg_h: [360, 180, 270]
        frequency_hz: [0.005, 0.003, 0.004]
      initial_attitude_deg: [0, 0, 0]  # true initial attitude, rotation vector
      initial_bias_deg_h: [0.1, 0.1, 0.1]
      refs: [[1, 0, 0], [0, 1, 0]]     # normalized on load
    truth_noise:
      sigma_v_deg_sqrt_h: 0.0343775
      sigma_u_deg_h_sqrt_h: 0.123759
      sigma_meas_deg: 0.001            # scalar or one per reference
    initial_estimate:
      attitude_error_deg: [0, 0, 0]
      bias_error_deg_h: [0, 0, 0]
      sigma_attitude_deg: 0.05
      sigma_bias_deg_h: 0.2
      randomize: true                  # add a draw from the initial covariance
    filter:
      sigma_v_deg_sqrt_h: 0.0343775
      sigma_u_deg_h_sqrt_h: 0.123759
      sigma_meas_deg: 0.001
      covariance_mod: "on"             # on | off | attitude
      mekf_attitude_reset: true

Every section and key is optional; omitted values take the defaults above.
"""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from ..filter_core import NoiseParams
from ..gmekf import CovarianceMod
from ..sim import DEG, DEG_PER_H, RateProfile, ScenarioConfig
from .runner import FilterConfig

# deg/h^(1/2) -> rad/s^(1/2) and deg/h^(3/2) -> rad/s^(3/2)
SIGMA_V_UNIT = DEG / 60.0
SIGMA_U_UNIT = DEG / 3600.0 / 60.0

DEFAULT_SIGMA_V = 1e-5
DEFAULT_SIGMA_U = 1e-8
DEFAULT_SIGMA_MEAS_DEG = 1e-3
DEFAULT_RATE_AMPLITUDE_DEG_H = (360.0, 180.0, 270.0)
DEFAULT_RATE_FREQUENCY_HZ = (0.005, 0.003, 0.004)

_COV_MOD = {
    "on": CovarianceMod.FULL,
    "full": CovarianceMod.FULL,
    "off": CovarianceMod.NONE,
    "none": CovarianceMod.NONE,
    "attitude": CovarianceMod.ATTITUDE,
}

_SECTIONS = {
    "seed": None,
    "scenario": {
        "duration",
        "gyro_dt",
        "meas_dt",
        "rate_profile",
        "initial_attitude_deg",
        "initial_bias_deg_h",
        "refs",
    },
    "truth_noise": {"sigma_v_deg_sqrt_h", "sigma_u_deg_h_sqrt_h", "sigma_meas_deg"},
    "initial_estimate": {
        "attitude_error_deg",
        "bias_error_deg_h",
        "sigma_attitude_deg",
        "sigma_bias_deg_h",
        "randomize",
    },
    "filter": {
        "sigma_v_deg_sqrt_h",
        "sigma_u_deg_h_sqrt_h",
        "sigma_meas_deg",
        "covariance_mod",
        "mekf_attitude_reset",
    },
}


class ConfigError(ValueError):
    """Invalid or inconsistent benchmark configuration."""


def _vec3(value: Any, scale: float, key: str) -> tuple[float, float, float]:
    arr = np.asarray(value, dtype=float)
    if arr.shape != (3,) or not np.all(np.isfinite(arr)):
        raise ConfigError(f"{key} must be a list of three finite numbers")
    return tuple(float(x) * scale for x in arr)


def _noise(section: dict[str, Any], where: str) -> NoiseParams:
    sv = float(section.get("sigma_v_deg_sqrt_h", DEFAULT_SIGMA_V / SIGMA_V_UNIT))
    su = float(section.get("sigma_u_deg_h_sqrt_h", DEFAULT_SIGMA_U / SIGMA_U_UNIT))
    sm = np.atleast_1d(
        np.asarray(section.get("sigma_meas_deg", DEFAULT_SIGMA_MEAS_DEG), dtype=float)
    )
    if not (np.isfinite(sv) and np.isfinite(su) and np.all(np.isfinite(sm))):
        raise ConfigError(f"{where}: noise parameters must be finite")
    try:
        return NoiseParams(sv * SIGMA_V_UNIT, su * SIGMA_U_UNIT, tuple(sm * DEG))
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def parse_config(raw: dict[str, Any] | None) -> tuple[ScenarioConfig, FilterConfig]:
    """Build scenario and filter configuration from a parsed YAML mapping."""
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError("top level of the config must be a mapping")
    for name, value in raw.items():
        if name not in _SECTIONS:
            raise ConfigError(f"unknown config section {name!r}")
        keys = _SECTIONS[name]
        if keys is None:
            continue
        if not isinstance(value, dict):
            raise ConfigError(f"section {name!r} must be a mapping")
        unknown = set(value) - keys
        if unknown:
            raise ConfigError(f"unknown keys in {name!r}: {sorted(unknown)}")

    sc = raw.get("scenario", {})
    init = raw.get("initial_estimate", {})
    filt = raw.get("filter", {})

    rp = sc.get("rate_profile", {})
    if not isinstance(rp, dict):
        raise ConfigError("scenario.rate_profile must be a mapping")
    try:
        profile = RateProfile(
            kind=str(rp.get("kind", "sinusoidal")),
            amplitude=_vec3(
                rp.get("amplitude_deg_h", DEFAULT_RATE_AMPLITUDE_DEG_H),
                DEG_PER_H,
                "amplitude_deg_h",
            ),
            frequency=_vec3(
                rp.get("frequency_hz", DEFAULT_RATE_FREQUENCY_HZ), 1.0, "frequency_hz"
            ),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    refs = np.asarray(sc.get("refs", [[1, 0, 0], [0, 1, 0]]), dtype=float)
    if refs.ndim != 2 or refs.shape[1] != 3 or refs.shape[0] < 1:
        raise ConfigError("scenario.refs must be a non-empty list of 3-vectors")
    norms = np.linalg.norm(refs, axis=1)
    if np.any(norms == 0) or not np.all(np.isfinite(norms)):
        raise ConfigError("scenario.refs must be non-zero finite vectors")
    refs = refs / norms[:, None]

    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed must be a non-negative integer")

    scenario = ScenarioConfig(
        duration=float(sc.get("duration", 3600.0)),
        gyro_dt=float(sc.get("gyro_dt", 0.1)),
        meas_dt=float(sc.get("meas_dt", 1.0)),
        rate_profile=profile,
        initial_attitude=_vec3(
            sc.get("initial_attitude_deg", [0, 0, 0]), DEG, "initial_attitude_deg"
        ),
        initial_bias=_vec3(
            sc.get("initial_bias_deg_h", [0.1] * 3), DEG_PER_H, "initial_bias_deg_h"
        ),
        noise=_noise(raw.get("truth_noise", {}), "truth_noise"),
        refs=tuple(tuple(float(x) for x in r) for r in refs),
        initial_attitude_error=_vec3(
            init.get("attitude_error_deg", [0, 0, 0]), DEG, "attitude_error_deg"
        ),
        initial_bias_error=_vec3(
            init.get("bias_error_deg_h", [0, 0, 0]), DEG_PER_H, "bias_error_deg_h"
        ),
        initial_sigma_attitude=float(init.get("sigma_attitude_deg", 0.05)) * DEG,
        initial_sigma_bias=float(init.get("sigma_bias_deg_h", 0.2)) * DEG_PER_H,
        randomize_initial_error=bool(init.get("randomize", True)),
        seed=seed,
    )
    try:
        scenario.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    mod_key = filt.get("covariance_mod", "on")
    if isinstance(mod_key, bool):  # YAML 1.1 reads a bare `on` as True
        mod_key = "on" if mod_key else "off"
    if str(mod_key) not in _COV_MOD:
        raise ConfigError(f"filter.covariance_mod must be one of {sorted(_COV_MOD)}")
    filter_noise = _noise(filt, "filter")
    if len(filter_noise.sigma_meas) not in (1, len(scenario.refs)):
        raise ConfigError(
            "filter.sigma_meas_deg must be a scalar or one value per reference"
        )
    if min(filter_noise.sigma_meas) <= 0:
        raise ConfigError("filter.sigma_meas_deg must be positive")
    filter_cfg = FilterConfig(
        noise=filter_noise,
        covariance_mod=_COV_MOD[str(mod_key)],
        mekf_attitude_reset=bool(filt.get("mekf_attitude_reset", True)),
    )
    return scenario, filter_cfg


def load_config(path: str | Path) -> tuple[ScenarioConfig, FilterConfig]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML in {path}: {exc}") from exc
    try:
        return parse_config(raw)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def with_seed(scenario: ScenarioConfig, seed: int) -> ScenarioConfig:
    return replace(scenario, seed=int(seed))


def parse_covariance_mod(value: str) -> CovarianceMod:
    try:
        return _COV_MOD[value]
    except KeyError:
        raise ConfigError(f"covariance mod must be one of {sorted(_COV_MOD)}") from None

