"""Command line entry point: ``sll run | classify | sweep | report | scenarios``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ScenarioConfig, bundled_scenarios
from .errors import ConfigError, ContractViolation, SocialLearningError
from .weights import LambdaSchedule, as_fraction, classify_schedule

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

log = logging.getLogger("sociallearn")


def _load(args) -> ScenarioConfig:
    cfg = ScenarioConfig.load(args.config)
    for ov in args.override or ():
        cfg.override(ov)
    if args.seed is not None:
        cfg.override(f"seed={args.seed}")
    if args.horizon is not None:
        cfg.override(f"horizon={args.horizon}")
    if args.record_every is not None:
        cfg.override(f"record_every={args.record_every}")
    return cfg


def _default_out(cfg, args):
    if args.out:
        return Path(args.out)
    return Path("runs") / (cfg.get("name") or Path(cfg.source).stem)


def cmd_run(args) -> int:
    from .runner import execute_run

    cfg = _load(args)
    res = execute_run(cfg, _default_out(cfg, args))
    final = res.trajectory.beliefs[-1]
    print(f"wrote {res.out} (manifest {res.config_hash[:12]})")
    for i, row in enumerate(final, start=1):
        cells = " ".join(f"{h}={b:.6f}" for h, b in zip(res.trajectory.hypotheses, row))
        print(f"  agent {i:>3}: {cells}")
    if res.first_learned is not None:
        print(f"all agents above 0.99 on the optimum from k={res.first_learned}")
    return EXIT_OK


def cmd_classify(args) -> int:
    if args.config:
        cfg = ScenarioConfig.load(args.config)
        plan = cfg.validate()
        lam = plan.lam
        B = args.B or plan.B
        if B is None:
            raise ConfigError("graph sequence is not B-connected for any B <= 64; pass --B", None, cfg.source)
        horizon = cfg.horizon
    else:
        try:
            if args.schedule == "constant":
                lam = LambdaSchedule.constant(args.c if args.c is not None else 0.5)
            elif args.schedule == "power":
                lam = LambdaSchedule.power(as_fraction(args.rho or "1"), args.c if args.c is not None else 1.0)
            else:
                lam = LambdaSchedule.table([float(v) for v in (args.values or "").replace(",", " ").split()])
        except (SocialLearningError, ValueError, ZeroDivisionError) as exc:
            raise ConfigError(str(exc), None, "--lambda") from exc
        B = args.B or 1
        horizon = args.horizon
    try:
        verdict = classify_schedule(lam, B, horizon)
    except SocialLearningError as exc:
        raise ConfigError(str(exc), None, "classify") from exc
    if args.format in ("text", "both"):
        print(verdict.to_text())
    if args.format == "both":
        print()
    if args.format in ("kv", "both"):
        print(verdict.to_kv())
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .runner import execute_sweep

    cfg = _load(args)
    out = Path(args.out) if args.out else Path("sweeps") / (cfg.get("name") or "sweep")
    rows = execute_sweep(cfg, args.grid, out, args.jobs)
    failed = 0
    for idx, params, seed, status, msg, first in rows:
        desc = " ".join(f"{k}={v}" for k, v in params.items())
        extra = f" first_all_learned_k={first}" if status == "ok" else f" {msg}"
        print(f"cell_{idx:03d} [{desc}] seed={seed}: {status}{extra}")
        failed += status != "ok"
    print(f"{len(rows) - failed}/{len(rows)} cells succeeded; summary in {out / 'sweep.csv'}")
    return EXIT_OK if not failed else EXIT_RUNTIME


def cmd_report(args) -> int:
    from .plotting import render_report

    agents = tuple(int(a) for a in args.agents.split(",")) if args.agents else None
    for d in args.run_dirs:
        if not (Path(d) / "beliefs.csv").is_file():
            raise ConfigError("no beliefs.csv in run directory", None, str(d))
    kwargs = {"agents": agents} if agents else {}
    for p in render_report(args.run_dirs, args.out, fmt=args.format, **kwargs):
        print(f"wrote {p}")
    return EXIT_OK


def cmd_scenarios(args) -> int:
    for name in bundled_scenarios():
        print(name)
    return EXIT_OK


def _add_run_flags(p):
    p.add_argument("--config", required=True, help="scenario file or bundled scenario name")
    p.add_argument("--seed", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--record-every", dest="record_every", help='integer or "geometric:RATIO"')
    p.add_argument("--override", action="append", metavar="KEY=VALUE", help="repeatable")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sll", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one scenario and write CSV output")
    _add_run_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("classify", help="classify a lambda schedule against the learning conditions")
    p.add_argument("--lambda", dest="schedule", choices=("constant", "power", "table"), default="power")
    p.add_argument("--c", type=float)
    p.add_argument("--rho", help="decay exponent, e.g. 1/3")
    p.add_argument("--values", help="table schedule values")
    p.add_argument("--B", type=int, help="connectivity window length")
    p.add_argument("--horizon", type=int, help="horizon for table schedules")
    p.add_argument("--config", help="take the schedule and B from a scenario file")
    p.add_argument("--format", choices=("text", "kv", "both"), default="both")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("sweep", help="run a parameter grid over a scenario template")
    _add_run_flags(p)
    p.add_argument("--grid", action="append", metavar="KEY=V1,V2", help="repeatable; Cartesian product")
    p.add_argument("--jobs", type=int, help="parallel cells (capped by SLL_THREADS)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="render figures from run directories")
    p.add_argument("run_dirs", nargs="+")
    p.add_argument("--out", help="figure path (default: beliefs.png in the first run dir)")
    p.add_argument("--agents", help="comma list of 1-based agents (default 1,3,5,7,10)")
    p.add_argument("--format", default="png")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("scenarios", help="list bundled scenarios")
    p.set_defaults(func=cmd_scenarios)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ContractViolation, SocialLearningError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
