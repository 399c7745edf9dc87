"""Command-line benchmark harness.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..filter_core import NumericalError
from ..sim import generate_scenario
from .config import ConfigError, load_config, parse_config, parse_covariance_mod
from .runner import (
    FilterKind,
    RunRecord,
    equivalence_report,
    run_filter,
    run_monte_carlo,
    summarize,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

RUN_COLUMNS = (
    ["t"]
    + [f"err_att_{a}" for a in "xyz"]
    + [f"err_bias_{a}" for a in "xyz"]
    + [f"P{i}{i}" for i in range(1, 7)]
    + ["nees"]
)
EQUIV_COLUMNS = ["t", "dq_rad", "db_norm", "dP_rel"]

log = logging.getLogger("geomekf")


def _fmt(x: float) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[float]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_run_csv(path: Path, records: Sequence[RunRecord]) -> None:
    _write_csv(
        path,
        RUN_COLUMNS,
        ([r.t, *r.err_att, *r.err_bias, *r.p_diag, r.nees] for r in records),
    )


def _load(args: argparse.Namespace):
    if args.config is None:
        scenario_cfg, filter_cfg = parse_config({})
    else:
        scenario_cfg, filter_cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        scenario_cfg = replace(scenario_cfg, seed=args.seed)
    if getattr(args, "covariance_mod", None) is not None:
        filter_cfg = replace(
            filter_cfg, covariance_mod=parse_covariance_mod(args.covariance_mod)
        )
    return scenario_cfg, filter_cfg


def cmd_run(args: argparse.Namespace) -> int:
    scenario_cfg, filter_cfg = _load(args)
    kind = FilterKind(args.filter)
    records = run_filter(generate_scenario(scenario_cfg), kind, filter_cfg)
    write_run_csv(Path(args.out), records)
    s = summarize(records)
    print(
        f"{kind.value}: {s.n} epochs, rmse_att={s.rmse_att:.4e} rad, "
        f"rmse_bias={s.rmse_bias:.4e} rad/s, mean_nees={s.mean_nees:.3f}, "
        f"nees_coverage={100 * s.nees_coverage:.1f}%"
    )
    return EXIT_OK


def cmd_equiv(args: argparse.Namespace) -> int:
    scenario_cfg, filter_cfg = _load(args)
    rep = equivalence_report(generate_scenario(scenario_cfg), filter_cfg)
    _write_csv(Path(args.out), EQUIV_COLUMNS, zip(rep.t, rep.dq_rad, rep.db_norm, rep.dP_rel))
    print(
        f"GEKF vs GMEKF over {rep.t.size} epochs: max dq={rep.max_dq:.3e} rad, "
        f"max db={rep.max_db:.3e} rad/s, max dP_rel={rep.max_dP:.3e}"
    )
    return EXIT_OK


def cmd_montecarlo(args: argparse.Namespace) -> int:
    scenario_cfg, filter_cfg = _load(args)
    if args.runs < 1:
        raise ConfigError("--runs must be at least 1")
    kind = FilterKind(args.filter)
    seeds = range(args.seed_base, args.seed_base + args.runs)
    result, by_seed = run_monte_carlo(scenario_cfg, filter_cfg, kind, seeds, args.jobs)
    out = Path(args.out)
    for seed, records in by_seed.items():
        write_run_csv(out / f"run_{seed:04d}.csv", records)
    _write_csv(
        out / "summary.csv",
        ["seed", "rmse_att", "rmse_bias", "mean_nees", "nees_coverage"],
        (
            [seed, s.rmse_att, s.rmse_bias, s.mean_nees, s.nees_coverage]
            for seed, s in zip(result.seeds, result.summaries)
        ),
    )
    lo, hi = result.anees_band
    _write_csv(
        out / "anees.csv",
        ["t", "anees", "lower", "upper"],
        ([t, a, lo, hi] for t, a in zip(result.t, result.anees)),
    )
    print(
        f"{kind.value}: {len(result.seeds)} runs, ANEES band [{lo:.3f}, {hi:.3f}], "
        f"ANEES coverage {100 * result.anees_coverage:.1f}%, "
        f"pooled NEES coverage {100 * result.pooled_coverage:.1f}%"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="geomekf", description="Attitude filter benchmark (MEKF / GMEKF / GEKF)."
    )
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--config", type=Path, help="YAML config (defaults if omitted)")
        sp.add_argument(
            "--covariance-mod",
            choices=["on", "off", "attitude"],
            help="GMEKF covariance modification after the reset (overrides config)",
        )

    run = sub.add_parser("run", help="run one filter over one scenario")
    common(run)
    run.add_argument("--filter", choices=[k.value for k in FilterKind], default="gmekf")
    run.add_argument("--seed", type=int)
    run.add_argument("--out", required=True, type=Path)
    run.set_defaults(func=cmd_run)

    eq = sub.add_parser("equiv", help="GEKF vs GMEKF lockstep equivalence report")
    common(eq)
    eq.add_argument("--seed", type=int)
    eq.add_argument("--out", required=True, type=Path)
    eq.set_defaults(func=cmd_equiv)

    mc = sub.add_parser("montecarlo", help="Monte Carlo NEES consistency run")
    common(mc)
    mc.add_argument("--filter", choices=[k.value for k in FilterKind], default="gmekf")
    mc.add_argument("--runs", type=int, required=True)
    mc.add_argument("--seed-base", type=int, default=0)
    mc.add_argument("--jobs", type=int, default=1)
    mc.add_argument("--out", required=True, type=Path)
    mc.set_defaults(func=cmd_montecarlo)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
