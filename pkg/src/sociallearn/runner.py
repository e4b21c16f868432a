"""Run a scenario to disk: manifest first, then streamed CSV data."""

from __future__ import annotations

import copy
import json
import logging
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from itertools import product
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .beliefs import GENERATOR_ID, run_simulation
from .config import ScenarioConfig
from .errors import ConfigError
from .weights import classify_schedule

log = logging.getLogger(__name__)

LEARN_THRESHOLD = 0.99


@dataclass
class RunResult:
    out: Path
    config_hash: str
    trajectory: object
    first_learned: Optional[int]


def _write_json(path: Path, data: dict) -> None:
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    os.replace(tmp, path)


def verdict_text(plan, verdict) -> str:
    parts = []
    if verdict is None:
        parts.append("no window length up to 64 makes the graph sequence strongly connected")
    else:
        parts += [verdict.to_text(), "", "[verdict]", verdict.to_kv()]
    rep = plan.report.as_dict()
    parts += [
        "",
        "[identifiability]",
        "global_opt=" + ",".join(rep["global_opt"]),
        "local_opts=" + ";".join(",".join(s) for s in rep["local_opts"]),
        "objective=" + ",".join(f"{v:.12g}" for v in rep["objective"]),
        f"no_conflict={str(rep['no_conflict']).lower()}",
        f"conflicting={str(rep['conflicting']).lower()}",
    ]
    cert = plan.connectivity
    if cert is not None:
        parts += ["", "[connectivity]", f"B={cert.B}", f"windows_checked={cert.windows_checked}"]
    return "\n".join(parts) + "\n"


def execute_run(cfg: ScenarioConfig, out) -> RunResult:
    """Validate ``cfg``, then write ``manifest.json``, ``verdict.txt``,
    ``beliefs.csv`` and ``diagnostics.csv`` into ``out``.

    Raises ``ConfigError`` before touching the output directory when the
    configuration is invalid.
    """
    plan = cfg.validate()
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory: {exc}", None, str(out)) from exc

    verdict = classify_schedule(plan.lam, plan.B, plan.horizon) if plan.B else None
    chash = cfg.config_hash()
    manifest = {
        "config_hash": chash,
        "config_source": cfg.source,
        "config": cfg.resolved(),
        "library_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "seed": plan.seed,
        "generator": GENERATOR_ID,
        "identifiability": plan.report.as_dict(),
        "verdict": verdict.as_dict() if verdict else None,
        "connectivity_B": plan.B,
        "started_at": datetime.now(timezone.utc).isoformat(),
        "status": "running",
    }
    _write_json(out / "manifest.json", manifest)
    (out / "verdict.txt").write_text(verdict_text(plan, verdict))

    labels = plan.scenario.hypotheses
    header = f"# manifest={chash}\n"
    t0 = time.perf_counter()
    with open(out / "beliefs.csv", "w", newline="") as fb, open(out / "diagnostics.csv", "w", newline="") as fd:
        fb.write(header + "k,agent,hypothesis,belief\n")
        fd.write(header + "k,pi,row_spread,delta_estimate\n")

        def emit(k, state, y, diag):
            probs = np.exp(state.log_beliefs)
            rows = []
            for i, row in enumerate(probs, start=1):
                for label, b in zip(labels, row):
                    rows.append(f"{k},{i},{label},{b:.17g}\n")
            fb.write("".join(rows))
            if diag is not None:
                fd.write(f"{k},{diag.pi:.17g},{diag.row_spread:.17g},{diag.delta_estimate:.17g}\n")

        traj = run_simulation(
            plan.scenario, plan.graph, plan.lam, plan.policy, plan.rule,
            horizon=plan.horizon, seed=plan.seed, record_every=plan.record_every,
            prior=plan.prior, callback=emit, track_diagnostics=True, B=plan.B,
        )

    first = None
    opt = plan.report.as_dict()["global_opt"]
    if len(opt) == 1:
        first = traj.first_time_all_above(opt[0], LEARN_THRESHOLD)
    manifest.update(
        status="complete",
        wall_clock_seconds=round(time.perf_counter() - t0, 6),
        first_all_learned_k=first,
    )
    _write_json(out / "manifest.json", manifest)
    return RunResult(out, chash, traj, first)


def parse_grid(specs) -> list:
    """``["a=1,2", "b=x,y"]`` -> Cartesian list of ``{a: .., b: ..}`` dicts."""
    keys, values = [], []
    for spec in specs or ():
        key, eq, raw = spec.partition("=")
        vals = [v.strip() for v in raw.split(",") if v.strip()]
        if not eq or not key.strip() or not vals:
            raise ConfigError(f"grid entry must be KEY=V1,V2,..., got {spec!r}", None, "--grid")
        keys.append(key.strip())
        values.append(vals)
    if not keys:
        raise ConfigError("parameter grid is empty", None, "--grid")
    return [dict(zip(keys, combo)) for combo in product(*values)]


def _run_cell(args):
    index, cfg, params, out = args
    try:
        for key, val in params.items():
            cfg.override(f"{key}={val}")
        res = execute_run(cfg, out)
        return index, "ok", "", res.first_learned
    except Exception as exc:  # reported per cell
        return index, "failed", f"{type(exc).__name__}: {exc}", None


def execute_sweep(cfg: ScenarioConfig, grid_specs, out, jobs: Optional[int] = None) -> list:
    """One run per grid point in ``out/cell_NNN``; seeds are base seed + index
    unless the grid sets ``seed`` itself.

    Returns a list of ``(index, params, seed, status, message, first_learned)``.
    """
    grid = parse_grid(grid_specs)
    cfg.validate()  # fail fast on the template itself
    base_seed = cfg.seed
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    cap = os.environ.get("SLL_THREADS")
    jobs = jobs or os.cpu_count() or 1
    if cap:
        try:
            jobs = min(jobs, max(1, int(cap)))
        except ValueError:
            raise ConfigError(f"SLL_THREADS must be an integer, got {cap!r}", None, "environment")
    tasks, seeds = [], []
    for idx, params in enumerate(grid):
        cell = copy.deepcopy(cfg)
        cell.override(f"seed={base_seed + idx}")
        seeds.append(params.get("seed", str(base_seed + idx)))
        tasks.append((idx, cell, params, out / f"cell_{idx:03d}"))
    if jobs <= 1 or len(tasks) == 1:
        results = [_run_cell(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            results = list(pool.map(_run_cell, tasks))
    rows = []
    keys = list(grid[0])
    with open(out / "sweep.csv", "w") as fh:
        fh.write(",".join(["cell"] + keys + ["seed", "status", "first_all_learned_k", "message"]) + "\n")
        for (idx, status, msg, first), params in zip(sorted(results), grid):
            seed = seeds[idx]
            rows.append((idx, params, seed, status, msg, first))
            msg_csv = '"' + msg.replace('"', "'") + '"' if msg else ""
            fh.write(",".join([f"cell_{idx:03d}"] + [params[k] for k in keys]
                              + [str(seed), status, "" if first is None else str(first), msg_csv]) + "\n")
    return rows
