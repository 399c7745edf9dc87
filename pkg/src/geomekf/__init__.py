"""Spacecraft attitude estimation: MEKF, geometric MEKF and covariance-projection GEKF."""

from .attitude_math import (
    attitude_matrix,
    cross_matrix,
    quat_correct,
    reset_map,
    small_angle_dcm,
    xi,
)
from .filter_core import (
    ErrorEstimate,
    ErrorModel,
    FilterState,
    GyroSample,
    MeasurementSet,
    NoiseParams,
    NumericalError,
    propagate,
)
from .gekf import gekf_measurement_update
from .gmekf import CovarianceMod, gmekf_measurement_update
from .mekf import mekf_measurement_update

__version__ = "0.1.0"

__all__ = [
    "CovarianceMod",
    "ErrorEstimate",
    "ErrorModel",
    "FilterState",
    "GyroSample",
    "MeasurementSet",
    "NoiseParams",
    "NumericalError",
    "attitude_matrix",
    "cross_matrix",
    "gekf_measurement_update",
    "gmekf_measurement_update",
    "mekf_measurement_update",
    "propagate",
    "quat_correct",
    "reset_map",
    "small_angle_dcm",
    "xi",
]
