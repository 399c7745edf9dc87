"""Run filters over simulated scenarios and score them."""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence

import numpy as np
import scipy.linalg
from numpy.typing import NDArray
from scipy.stats import chi2

from ..attitude_math import attitude_error, cross_matrix, quat_discrepancy
from ..filter_core import (
    ErrorModel,
    FilterState,
    GyroSample,
    NoiseParams,
    NumericalError,
    propagate,
)
from ..gekf import gekf_measurement_update
from ..gmekf import CovarianceMod, gmekf_measurement_update
from ..mekf import mekf_measurement_update
from ..sim import Scenario, ScenarioConfig, generate_scenario

NEES_DOF = 6
NEES_BAND = tuple(chi2.ppf([0.025, 0.975], NEES_DOF))


class FilterKind(enum.Enum):
    MEKF = "mekf"
    GMEKF = "gmekf"
    GEKF = "gekf"

    @property
    def error_model(self) -> ErrorModel:
        if self is FilterKind.MEKF:
            return ErrorModel.CLASSICAL
        return ErrorModel.GEOMETRIC


@dataclass(frozen=True)
class FilterConfig:
    """Filter tuning, kept separate from the truth noise of the scenario."""

    noise: NoiseParams = field(
        default_factory=lambda: NoiseParams(1e-5, 1e-8, (math.radians(1e-3),))
    )
    covariance_mod: CovarianceMod = CovarianceMod.FULL
    mekf_attitude_reset: bool = True


@dataclass(frozen=True)
class RunRecord:
    t: float
    err_att: NDArray[np.float64]
    err_bias: NDArray[np.float64]
    p_diag: NDArray[np.float64]
    nees: float


@dataclass(frozen=True)
class EpochEstimate:
    index: int
    t: float
    state: FilterState
    P: NDArray[np.float64]


@dataclass(frozen=True)
class Summary:
    rmse_att: float
    rmse_bias: float
    mean_nees: float
    nees_coverage: float
    n: int


@dataclass(frozen=True)
class EquivalenceReport:
    t: NDArray[np.float64]
    dq_rad: NDArray[np.float64]
    db_norm: NDArray[np.float64]
    dP_rel: NDArray[np.float64]

    @property
    def max_dq(self) -> float:
        return float(self.dq_rad.max(initial=0.0))

    @property
    def max_db(self) -> float:
        return float(self.db_norm.max(initial=0.0))

    @property
    def max_dP(self) -> float:
        return float(self.dP_rel.max(initial=0.0))


def iter_filter(
    scenario: Scenario, kind: FilterKind, cfg: FilterConfig
) -> Iterator[EpochEstimate]:
    """Propagate at gyro rate and yield the estimate after each measurement update."""
    sc = scenario.config
    model = kind.error_model
    state = FilterState(scenario.q0_hat, scenario.b0_hat)
    P = scenario.P0.copy()
    sigma_meas = np.broadcast_to(
        np.asarray(cfg.noise.sigma_meas, dtype=float), (len(sc.refs),)
    )
    dt = sc.gyro_dt
    ratio = sc.meas_ratio
    j = 0
    for k in range(scenario.gyro.shape[0]):
        state, P = propagate(state, P, GyroSample(scenario.gyro[k], dt), cfg.noise, model)
        if (k + 1) % ratio:
            continue
        meas = scenario.measurement(j, sigma_meas)
        try:
            if kind is FilterKind.GMEKF:
                res = gmekf_measurement_update(state, P, meas, cfg.covariance_mod)
            elif kind is FilterKind.GEKF:
                res = gekf_measurement_update(state, P, meas)
            else:
                res = mekf_measurement_update(state, P, meas, cfg.mekf_attitude_reset)
        except NumericalError as exc:
            raise NumericalError(f"measurement epoch {j}: {exc}") from exc
        state, P = res.state_plus, res.P_plus_plus
        yield EpochEstimate(j, float(scenario.t[k + 1]), state, P)
        j += 1


def estimation_error(
    q_true: NDArray[np.float64],
    b_true: NDArray[np.float64],
    state: FilterState,
    model: ErrorModel,
) -> NDArray[np.float64]:
    """6-vector ``[alpha; db]`` under the filter's own bias-error definition.

    The geometric bias error uses the first-order form ``b - (I - [alpha×]) b_hat``.
    """
    alpha = attitude_error(q_true, state.q_hat)
    if model is ErrorModel.GEOMETRIC:
        db = b_true - state.b_hat + cross_matrix(alpha) @ state.b_hat
    else:
        db = b_true - state.b_hat
    return np.concatenate([alpha, db])


def nees(e: NDArray[np.float64], P: NDArray[np.float64]) -> float:
    """``eᵀ P⁻¹ e``; a singular ``P`` (e.g. a bias block pinned at zero) falls
    back to the pseudo-inverse, i.e. NEES over the support of ``P``."""
    try:
        c = scipy.linalg.cho_factor(P, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        return float(e @ np.linalg.pinv(P, rcond=1e-12, hermitian=True) @ e)
    return float(e @ scipy.linalg.cho_solve(c, e, check_finite=False))


def run_filter(scenario: Scenario, kind: FilterKind, cfg: FilterConfig) -> list[RunRecord]:
    model = kind.error_model
    records = []
    for est in iter_filter(scenario, kind, cfg):
        k = scenario.meas_index[est.index]
        e = estimation_error(scenario.q_true[k], scenario.b_true[k], est.state, model)
        v = nees(e, est.P)
        if not math.isfinite(v):
            raise NumericalError(f"measurement epoch {est.index}: non-finite NEES")
        records.append(RunRecord(est.t, e[:3], e[3:], np.diag(est.P).copy(), v))
    return records


def summarize(records: Sequence[RunRecord]) -> Summary:
    """RMSE of the attitude and bias error norms, mean NEES and the fraction of
    epochs whose NEES falls inside the two-sided 95% chi-square(6) band."""
    if not records:
        raise ValueError("cannot summarize an empty record list")
    att = np.array([r.err_att for r in records])
    bias = np.array([r.err_bias for r in records])
    v = np.array([r.nees for r in records])
    lo, hi = NEES_BAND
    return Summary(
        rmse_att=float(np.sqrt(np.mean(np.sum(att**2, axis=1)))),
        rmse_bias=float(np.sqrt(np.mean(np.sum(bias**2, axis=1)))),
        mean_nees=float(v.mean()),
        nees_coverage=float(np.mean((v >= lo) & (v <= hi))),
        n=len(records),
    )


def equivalence_report(scenario: Scenario, cfg: FilterConfig) -> EquivalenceReport:
    """Run GEKF and GMEKF side by side on identical inputs and compare each epoch."""
    t, dq, db, dP = [], [], [], []
    for a, b in zip(
        iter_filter(scenario, FilterKind.GMEKF, cfg),
        iter_filter(scenario, FilterKind.GEKF, cfg),
    ):
        t.append(a.t)
        dq.append(quat_discrepancy(a.state.q_hat, b.state.q_hat))
        db.append(float(np.linalg.norm(a.state.b_hat - b.state.b_hat)))
        dP.append(float(np.linalg.norm(a.P - b.P) / np.linalg.norm(a.P)))
    return EquivalenceReport(np.array(t), np.array(dq), np.array(db), np.array(dP))


@dataclass(frozen=True)
class MonteCarloResult:
    seeds: tuple[int, ...]
    t: NDArray[np.float64]
    nees: NDArray[np.float64]  # (runs, epochs)
    summaries: tuple[Summary, ...]

    @property
    def anees(self) -> NDArray[np.float64]:
        return self.nees.mean(axis=0)

    @property
    def anees_band(self) -> tuple[float, float]:
        """Two-sided 95% band of the run-averaged NEES, ``chi2(6N)/N``."""
        n = self.nees.shape[0]
        lo, hi = chi2.ppf([0.025, 0.975], NEES_DOF * n) / n
        return float(lo), float(hi)

    @property
    def anees_coverage(self) -> float:
        lo, hi = self.anees_band
        a = self.anees
        return float(np.mean((a >= lo) & (a <= hi)))

    @property
    def pooled_coverage(self) -> float:
        lo, hi = NEES_BAND
        return float(np.mean((self.nees >= lo) & (self.nees <= hi)))


def _mc_worker(
    args: tuple[ScenarioConfig, FilterConfig, FilterKind, int],
) -> tuple[int, list[RunRecord]]:
    scenario_cfg, filter_cfg, kind, seed = args
    scenario = generate_scenario(replace(scenario_cfg, seed=seed))
    return seed, run_filter(scenario, kind, filter_cfg)


def run_monte_carlo(
    scenario_cfg: ScenarioConfig,
    filter_cfg: FilterConfig,
    kind: FilterKind,
    seeds: Sequence[int],
    jobs: int = 1,
) -> tuple[MonteCarloResult, dict[int, list[RunRecord]]]:
    """Run one filter over independently seeded scenarios.

    Results are keyed and ordered by seed, so the outcome does not depend on
    ``jobs`` or on completion order.
    """
    if not seeds:
        raise ValueError("need at least one Monte Carlo seed")
    tasks = [(scenario_cfg, filter_cfg, kind, int(s)) for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            done = list(pool.map(_mc_worker, tasks))
    else:
        done = [_mc_worker(t) for t in tasks]
    by_seed = dict(sorted(done))
    ordered = sorted(by_seed)
    t = np.array([r.t for r in by_seed[ordered[0]]])
    nees_arr = np.array([[r.nees for r in by_seed[s]] for s in ordered])
    result = MonteCarloResult(
        seeds=tuple(ordered),
        t=t,
        nees=nees_arr,
        summaries=tuple(summarize(by_seed[s]) for s in ordered),
    )
    return result, by_seed
