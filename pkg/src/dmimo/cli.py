"""Command-line front end.

Subcommands
-----------
simulate      run one campaign and write manifest.json, samples.csv, cdf.csv, summary.json
sweep         one campaign per value of a parameter, plus sweep.csv
oracle-check  compare the eigenvector MPA solver against the bisection oracle
validate      load and check a config file without running anything

Exit codes: 0 success, 1 runtime failure, 2 invalid input.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import logging
import math
import platform
import subprocess
import sys
import warnings
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .engine import SWEEP_PARAMETERS, CampaignResult, default_workers, run_campaign, sweep_config
from .errors import ConfigError, DmimoError
from .kernels import BACKEND
from .metrics import AVAILABILITY_LEVELS
from .power import MpaInstance, estimated_sinr, mpa_oracle, mpa_solve, random_instance
from .scenario import config_to_dict, default_config, load_config

log = logging.getLogger("dmimo")

DEFAULT_DROPS = 100_000
CDF_POINTS = 10_000
EXIT_OK, EXIT_RUNTIME, EXIT_INPUT = 0, 1, 2

ASSUMPTIONS = {
    "pooling": "all (drop, AC) SINR samples pooled into one distribution",
    "quantile_estimator": "lower order statistic at 1-based index ceil(p*n), no interpolation",
    "power_budget": "single total budget p_ap shared by all APs (SAT and JT)",
    "mpa_objective": "max-min of SINR estimated from channel estimates; metrics use true channels",
    "ac_positions": "redrawn every drop",
    "pilot_noise": "thermal noise including the receiver noise figure, no impulsive component",
}


def _level_key(p: float) -> str:
    return f"{p:.0e}".replace("e-0", "e-")


def _source_revision() -> str | None:
    try:
        out = subprocess.run(["git", "rev-parse", "--short", "HEAD"], cwd=Path(__file__).parent,
                             capture_output=True, text=True, timeout=5)
    except (OSError, subprocess.SubprocessError):
        return None
    return out.stdout.strip() or None if out.returncode == 0 else None


def _json_dump(obj: Any, path: Path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def summarize(res: CampaignResult) -> dict[str, Any]:
    """Deterministic summary of a campaign (no timestamps or timings)."""
    dist = res.distribution
    avail: dict[str, float | None] = {}
    for p in AVAILABILITY_LEVELS:
        if p * dist.n < 1.0 - 1e-12:
            avail[_level_key(p)] = None
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            avail[_level_key(p)] = 10.0 * math.log10(dist.quantile(p))
    cond = res.diagnostics["zf_condition_number"]
    return {
        "n_samples": int(dist.n),
        "availability_db": avail,
        "median_db": dist.median_db(),
        "mean_db": dist.mean_db(),
        "config": config_to_dict(res.config),
        "run": {
            "master_seed": res.master_seed,
            "n_drops": res.n_drops,
            "tool_version": __version__,
            "source_revision": _source_revision(),
            "failed_drops": len(res.failed_drops),
            "ill_conditioned_drops": int(np.count_nonzero(cond > 1e12)),
            "max_condition_number": float(np.nanmax(cond)) if np.any(np.isfinite(cond)) else None,
        },
        "assumptions": ASSUMPTIONS,
    }


def write_outputs(res: CampaignResult, out: Path, workers: int) -> dict[str, Any]:
    """Write the four result files of one campaign into ``out``."""
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "config": config_to_dict(res.config),
        "master_seed": res.master_seed,
        "n_drops": res.n_drops,
        "tool_version": __version__,
        "source_revision": _source_revision(),
        "kernel_backend": BACKEND,
        "workers": workers,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "wall_time_s": round(res.wall_time, 3),
    }
    _json_dump(manifest, out / "manifest.json")

    dist = res.distribution
    cols = np.column_stack([dist.drop_id, dist.ac_id, dist.sinr_db, dist.sinr_linear])
    np.savetxt(out / "samples.csv", cols, fmt=["%d", "%d", "%.6f", "%.9e"], delimiter=",",
               header="drop_id,ac_id,sinr_db,sinr_linear", comments="")
    x, F = dist.cdf_points(CDF_POINTS)
    np.savetxt(out / "cdf.csv", np.column_stack([x, F]), fmt=["%.6f", "%.9g"], delimiter=",",
               header="sinr_db,empirical_cdf", comments="")
    summary = summarize(res)
    _json_dump(summary, out / "summary.json")
    return summary


def _load(path: str | None):
    return default_config() if path in (None, "", "default") else load_config(path)


def _check_drops(drops: int, K: int) -> None:
    if drops < 1:
        raise ConfigError("drops must be >= 1", "drops")
    if drops * K * min(AVAILABILITY_LEVELS) < 10:
        log.warning("drops*K*1e-5 = %g < 10: the 1e-5 availability is unstable; "
                    "use --drops >= %d", drops * K * 1e-5, math.ceil(10 / (K * 1e-5)))


def cmd_simulate(args) -> int:
    cfg = _load(args.config)
    _check_drops(args.drops, cfg.K)
    workers = default_workers() if args.workers is None else args.workers
    res = run_campaign(cfg, args.drops, args.seed, workers, skip_failed=args.skip_failed)
    summary = write_outputs(res, Path(args.out), workers)
    av = summary["availability_db"]
    print(f"n_samples={summary['n_samples']} median_db={summary['median_db']:.3f} "
          + " ".join(f"avail@{k}={'n/a' if v is None else f'{v:.3f}'}" for k, v in av.items()))
    return EXIT_OK


def _parse_values(param: str, text: str) -> list[Any]:
    raw = [v.strip() for v in text.split(",") if v.strip()]
    if not raw:
        raise ConfigError("empty value list", "values")
    if param in ("K", "J"):
        try:
            return [int(v) for v in raw]
        except ValueError:
            raise ConfigError(f"{param} values must be integers", "values") from None
    if param == "epsilon":
        try:
            return [float(v) for v in raw]
        except ValueError:
            raise ConfigError("epsilon values must be numbers", "values") from None
    return raw


def cmd_sweep(args) -> int:
    if args.param not in SWEEP_PARAMETERS:
        raise ConfigError(f"unsupported sweep parameter {args.param!r}; "
                          f"choose from {', '.join(SWEEP_PARAMETERS)}", "param")
    base = _load(args.config)
    values = _parse_values(args.param, args.values)
    workers = default_workers() if args.workers is None else args.workers
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows, rejected = [], 0
    for v in values:
        try:
            cfg = sweep_config(base, args.param, v)
            _check_drops(args.drops, cfg.K)
        except ConfigError as exc:
            log.error("%s=%s rejected: %s", args.param, v, exc)
            rows.append([v, "", "", ""])
            rejected += 1
            continue
        res = run_campaign(cfg, args.drops, args.seed, workers, skip_failed=args.skip_failed)
        s = write_outputs(res, out / f"{args.param}={v}", workers)
        a = s["availability_db"]
        rows.append([v] + ["" if x is None else f"{x:.6f}"
                           for x in (a["1e-5"], a["1e-4"], s["median_db"])])
        print(f"{args.param}={v}: " + ", ".join(
            f"{h}={x or 'n/a'}" for h, x in zip(("avail@1e-5", "avail@1e-4", "median"), rows[-1][1:])))
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["value", "availability_db@1e-5", "availability_db@1e-4", "median_db"])
        w.writerows(rows)
    return EXIT_INPUT if rejected else EXIT_OK


def _discrepancy(inst: MpaInstance, oracle_tol: float) -> tuple[float, np.ndarray, np.ndarray]:
    p = mpa_solve(inst)
    po = mpa_oracle(inst, tol=oracle_tol)
    s1 = float(np.min(estimated_sinr(inst.R, inst.f, p)))
    s2 = float(np.min(estimated_sinr(inst.R, inst.f, po)))
    return abs(s1 - s2) / s1, p, po


def cmd_oracle_check(args) -> int:
    if args.instances < 1 or args.kmax < 1:
        raise ConfigError("--instances and --kmax must be >= 1", "instances")
    if args.instance:
        with open(args.instance) as fh:
            try:
                instances = [MpaInstance.from_dict(json.load(fh))]
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"bad instance file: {exc}", "instance") from None
    else:
        rng = np.random.default_rng(args.seed)
        kmin = min(2, args.kmax)
        instances = [random_instance(rng, int(rng.integers(kmin, args.kmax + 1)),
                                     zero_r=args.zero_r)
                     for _ in range(args.instances)]
    worst, worst_i = -1.0, -1
    for i, inst in enumerate(instances):
        d, _, _ = _discrepancy(inst, args.oracle_tol)
        if d > worst:
            worst, worst_i = d, i
    print(f"instances={len(instances)} max_rel_min_sinr_discrepancy={worst:.3e} tol={args.tol:g}")
    if worst < args.tol:
        return EXIT_OK
    inst = instances[worst_i]
    _, p, po = _discrepancy(inst, args.oracle_tol)
    dump = dict(inst.to_dict(), p_eigen=p.tolist(), p_oracle=po.tolist(),
                rel_discrepancy=worst)
    _json_dump(dump, Path(args.dump))
    print(f"instance {worst_i} exceeds tol; written to {args.dump}", file=sys.stderr)
    return EXIT_RUNTIME


def cmd_validate(args) -> int:
    cfg = _load(args.config)
    print(json.dumps(config_to_dict(cfg), indent=2, sort_keys=True))
    return EXIT_OK


def _int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dmimo", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def campaign_flags(p):
        p.add_argument("config", nargs="?", help="JSON config file (omit for the baseline scenario)")
        p.add_argument("--drops", type=_int, default=DEFAULT_DROPS)
        p.add_argument("--seed", type=_int, default=0)
        p.add_argument("--out", default="dmimo_out")
        p.add_argument("--workers", type=_int, default=None,
                       help="worker processes (default: $DMIMO_WORKERS or 1)")
        p.add_argument("--skip-failed", action="store_true",
                       help="drop numerically failing drops instead of aborting")

    p = sub.add_parser("simulate", help="run one campaign")
    campaign_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="one campaign per parameter value")
    campaign_flags(p)
    p.add_argument("--param", required=True, help=f"one of {', '.join(SWEEP_PARAMETERS)}")
    p.add_argument("--values", required=True, help="comma-separated list")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle-check", help="eigenvector MPA vs bisection oracle")
    p.add_argument("--instances", type=_int, default=100)
    p.add_argument("--kmax", type=_int, default=4)
    p.add_argument("--seed", type=_int, default=0)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--oracle-tol", type=float, default=1e-12,
                   help="relative bisection bracket of the oracle")
    p.add_argument("--zero-r", action="store_true", help="interference-free instances (R = 0)")
    p.add_argument("--instance", help="check one instance from a JSON file instead")
    p.add_argument("--dump", default="oracle_failure.json")
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("validate", help="check a config file")
    p.add_argument("config", nargs="?")
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (DmimoError, ArithmeticError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
