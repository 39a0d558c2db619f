"""Command-line entry point.

    pfmpc run --scenario case2.yaml --controller mpc-pf --out runs/
    pfmpc run --suite --out runs/                 # the bundled regression suite
    pfmpc compare --suite scenarios/ --out cmp/   # tracking-pid vs mpc vs mpc-pf
"""

import argparse
import csv
import datetime as _dt
import io
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

from .baseline import TrackingPID
from .config import ConfigError, default_config, load_config
from .mpc import SafetyController
from .sim import ScenarioError, dumps_record, format_log, load_scenario, load_suite, metrics_record, run

log = logging.getLogger("pfmpc")

VARIANTS = ("tracking-pid", "mpc", "mpc-pf")
BUILTIN = "builtin"

EXIT_OK, EXIT_INPUT, EXIT_ABORTED = 0, 2, 3


def builtin_suite_dir() -> Path:
    return Path(str(resources.files("pfmpc").joinpath("data/scenarios")))


def make_controller(variant: str, config):
    """Variants share one pipeline and differ only in config: mpc is mpc-pf with K_o = K_c = 0."""
    if variant == "tracking-pid":
        return TrackingPID(config), config
    if variant == "mpc":
        cfg = config.with_pf_zeroed()
        return SafetyController(cfg, name="mpc"), cfg
    if variant == "mpc-pf":
        return SafetyController(config, name="mpc-pf"), config
    raise ValueError(f"unknown controller variant {variant!r}")


def _run_one(job):
    scenario, variant, config, seed = job
    controller, cfg = make_controller(variant, config)
    return run(scenario, controller, seed=seed, config=cfg, controller_name=variant)


def _run_all(jobs, workers):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_one, jobs))
    return [_run_one(j) for j in jobs]


def _write_run(result, out: Path, config, timestamps: bool) -> dict:
    stem = f"{result.scenario}_{result.controller}"
    (out / f"{stem}.csv").write_text(format_log(result.log, config.sim.log_precision))
    rec = metrics_record(result, timestamps)
    if timestamps:
        rec["written_at"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    (out / f"{stem}.json").write_text(dumps_record(rec))
    return rec


def _table(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(v):
    return f"{v:.6f}" if isinstance(v, float) else v


def summary_table(records, timestamps: bool) -> str:
    header = ["name", "controller", "seed", "route_completion", "infraction_score", "driving_score",
              "collisions", "deadlock", "completed", "valid", "min_obstacle_distance"]
    if timestamps:
        header.append("wall_time")
    rows = []
    for r in sorted(records, key=lambda r: (r["name"], r["controller"])):
        rows.append([_fmt(r.get(k)) if r.get(k) is not None else "" for k in header])
    return _table(header, rows)


def compare_table(records, variants) -> str:
    header = ["controller", "runs", "mean_rc", "mean_is", "mean_ds", "collisions", "deadlocks"]
    rows = []
    for v in variants:
        sub = [r for r in records if r["controller"] == v]
        n = len(sub)
        mean = (lambda k: sum(r[k] for r in sub) / n) if n else (lambda k: float("nan"))
        rows.append([v, n, _fmt(mean("route_completion")), _fmt(mean("infraction_score")),
                     _fmt(mean("driving_score")), sum(r["collisions"] for r in sub),
                     sum(bool(r["deadlock"]) for r in sub)])
    return _table(header, rows)


def _load_scenarios(args):
    if args.scenario:
        return [load_scenario(args.scenario)]
    directory = builtin_suite_dir() if args.suite == BUILTIN else Path(args.suite)
    return load_suite(directory)


def _common(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", help="scenario YAML file")
    src.add_argument("--suite", nargs="?", const=BUILTIN,
                     help="directory of scenario files (omit the value for the bundled suite)")
    p.add_argument("--config", help="config YAML (defaults to the packaged default_config.yaml)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="runs", help="output directory (created if missing)")
    p.add_argument("--no-timestamps", action="store_true",
                   help="omit wall-clock fields so identical inputs give identical files")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes for suites")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pfmpc", description="Potential-field MPC safety controller scenarios")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario or a suite with one controller")
    _common(p_run)
    p_run.add_argument("--controller", choices=VARIANTS, default="mpc-pf")

    p_cmp = sub.add_parser("compare", help="run every scenario with several controllers")
    _common(p_cmp)
    p_cmp.add_argument("--controller", choices=VARIANTS, action="append", dest="controllers",
                       help="variant to include (repeatable; default: all three)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config) if args.config else default_config()
        scenarios = _load_scenarios(args)
    except (ScenarioError, ConfigError) as exc:
        print(f"pfmpc: error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    variants = [args.controller] if args.command == "run" else (args.controllers or list(VARIANTS))
    variants = list(dict.fromkeys(variants))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    timestamps = not args.no_timestamps

    jobs = [(sc, v, config, args.seed) for sc in scenarios for v in variants]
    results = _run_all(jobs, max(1, args.workers))
    records = [_write_run(r, out, config, timestamps) for r in results]

    if args.command == "compare":
        table = compare_table(records, variants)
        (out / "compare.csv").write_text(table)
        (out / "summary.csv").write_text(summary_table(records, timestamps))
        print(table, end="")
    elif len(scenarios) > 1:
        table = summary_table(records, timestamps)
        (out / "summary.csv").write_text(table)
        print(table, end="")
    else:
        r = records[0]
        print(f"{r['name']} [{r['controller']}] RC={r['route_completion']:.3f} "
              f"IS={r['infraction_score']:.3f} DS={r['driving_score']:.3f} collisions={r['collisions']} "
              f"deadlock={r['deadlock']}")

    aborted = [r for r in records if not r["valid"]]
    for r in aborted:
        print(f"pfmpc: run aborted: {r['name']} [{r['controller']}]: {r.get('error')}", file=sys.stderr)
    return EXIT_ABORTED if aborted else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
