"""Shared oracles and random generators for the test-suite."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_quat(rng: np.random.Generator) -> np.ndarray:
    q = rng.standard_normal(4)
    return q / np.linalg.norm(q)


def random_unit(rng: np.random.Generator, n: int | None = None) -> np.ndarray:
    v = rng.standard_normal(3 if n is None else (n, 3))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def random_ball(rng: np.random.Generator, radius: float) -> np.ndarray:
    """Uniform draw from the 3-ball of the given radius."""
    return random_unit(rng) * radius * rng.uniform() ** (1.0 / 3.0)


def random_spd(rng: np.random.Generator, scales: np.ndarray) -> np.ndarray:
    """Random SPD matrix with standard deviations ``scales`` and random correlation."""
    n = len(scales)
    L = rng.standard_normal((n, n))
    C = L @ L.T + 0.5 * n * np.eye(n)
    d = 1.0 / np.sqrt(np.diag(C))
    corr = C * np.outer(d, d)
    return corr * np.outer(scales, scales)


def dcm_oracle(q: np.ndarray) -> np.ndarray:
    """Passive DCM of a scalar-last quaternion via scipy (active matrix transposed)."""
    return Rotation.from_quat(q).as_matrix().T


def rodrigues_passive(alpha: np.ndarray) -> np.ndarray:
    """Exact passive DCM of a rotation vector."""
    theta = float(np.linalg.norm(alpha))
    if theta == 0.0:
        return np.eye(3)
    n = alpha / theta
    K = np.array([[0, -n[2], n[1]], [n[2], 0, -n[0]], [-n[1], n[0], 0]])
    return math.cos(theta) * np.eye(3) - math.sin(theta) * K + (1 - math.cos(theta)) * np.outer(n, n)


def quat_product_oracle(q: np.ndarray, p: np.ndarray) -> np.ndarray:
    """``q ⊗ p`` with ``A(q ⊗ p) = A(q) A(p)``, via scipy.

    scipy composes active rotations, so the passive product ``q ⊗ p`` is the
    scipy composition ``R(p) * R(q)``. Returned with the sign of ``q ⊗ p``'s
    scalar part taken from the algebraic product.
    """
    out = (Rotation.from_quat(p) * Rotation.from_quat(q)).as_quat()
    w = q[3] * p[3] - q[:3] @ p[:3]
    return -out if out[3] * w < 0 else out


unit_quats = (
    st.lists(st.floats(-1, 1, allow_nan=False), min_size=4, max_size=4)
    .map(np.array)
    .filter(lambda v: np.linalg.norm(v) > 1e-3)
    .map(lambda v: v / np.linalg.norm(v))
)


def vec3(bound: float):
    return st.lists(
        st.floats(-bound, bound, allow_nan=False), min_size=3, max_size=3
    ).map(np.array)
