"""Figures rendered from a run directory's CSV output."""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

DEFAULT_AGENTS = (1, 3, 5, 7, 10)
# first agent blue, last red, matching the usual presentation
PALETTE = ("tab:blue", "tab:green", "black", "gold", "tab:red", "tab:purple", "tab:orange")


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(line for line in fh if not line.startswith("#")))


def load_beliefs(path):
    """``(k, labels, beliefs)`` where ``beliefs[label][agent]`` is an array over k."""
    rows = _rows(path)
    ks = sorted({int(r["k"]) for r in rows})
    index = {k: i for i, k in enumerate(ks)}
    labels = list(dict.fromkeys(r["hypothesis"] for r in rows))
    data = defaultdict(lambda: defaultdict(lambda: np.full(len(ks), np.nan)))
    for r in rows:
        data[r["hypothesis"]][int(r["agent"])][index[int(r["k"])]] = float(r["belief"])
    return np.array(ks), labels, data


def load_diagnostics(path):
    rows = _rows(path)
    if not rows:
        return None
    return {key: np.array([float(r[key]) for r in rows]) for key in rows[0]}


def plot_beliefs(run_dirs, out, agents=DEFAULT_AGENTS):
    """One row per run, one column per hypothesis, log-scaled iteration axis."""
    run_dirs = [Path(d) for d in run_dirs]
    loaded = [load_beliefs(d / "beliefs.csv") for d in run_dirs]
    ncols = max(len(lbl) for _, lbl, _ in loaded)
    fig, axes = plt.subplots(len(run_dirs), ncols, figsize=(3.2 * ncols, 2.4 * len(run_dirs)),
                             squeeze=False, sharey=True)
    for row, (d, (ks, labels, data)) in enumerate(zip(run_dirs, loaded)):
        mask = ks >= 1
        present = sorted({a for lbl in labels for a in data[lbl]})
        chosen = [a for a in agents if a in present] or present[:5]
        for col, label in enumerate(labels):
            ax = axes[row, col]
            for c, agent in enumerate(chosen):
                ax.plot(ks[mask], data[label][agent][mask], color=PALETTE[c % len(PALETTE)],
                        lw=1.2, label=f"agent {agent}")
            ax.set_xscale("log")
            ax.set_ylim(0, 1)
            if row == 0:
                ax.set_title(f"belief on {label}")
            if col == 0:
                ax.set_ylabel(d.name)
            if row == len(run_dirs) - 1:
                ax.set_xlabel("iteration")
    axes[0, -1].legend(fontsize=7, loc="best")
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return Path(out)


def plot_diagnostics(run_dir, out):
    diag = load_diagnostics(Path(run_dir) / "diagnostics.csv")
    if diag is None:
        return None
    k = diag["k"]
    mask = k >= 1
    fig, ax = plt.subplots(figsize=(4.5, 3.0))
    floor = 1e-16  # both quantities are nonnegative; clip exact zeros for the log axis
    ax.plot(k[mask], np.maximum(diag["pi"][mask], floor), label="ergodicity coefficient")
    ax.plot(k[mask], np.maximum(diag["row_spread"][mask], floor), label="row spread", ls="--")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("iteration")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return Path(out)


def render_report(run_dirs, out=None, agents=DEFAULT_AGENTS, fmt="png"):
    """Write ``beliefs.<fmt>`` for all runs (to ``out`` or the first run
    dir) and ``diagnostics.<fmt>`` into each run dir. Returns written paths."""
    run_dirs = [Path(d) for d in run_dirs]
    target = Path(out) if out else run_dirs[0] / f"beliefs.{fmt}"
    written = [plot_beliefs(run_dirs, target, agents)]
    for d in run_dirs:
        p = plot_diagnostics(d, d / f"diagnostics.{fmt}")
        if p is not None:
            written.append(p)
    return written
