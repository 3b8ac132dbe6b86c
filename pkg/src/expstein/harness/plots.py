"""Figures drawn from the harness CSV files (needs matplotlib).

Plots only read CSV output, so the numbers in a figure are exactly the
numbers in the file.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..errors import EmptyInput


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _read(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise EmptyInput(f"{path} has no data rows")
    return rows


def plot_sweep(csv_path, out, loglog: bool = True):
    """Bound and distance against the swept parameter, one panel per metric."""
    rows = _read(csv_path)
    param = next(iter(rows[0]))
    metrics = sorted({r["metric"] for r in rows})
    plt = _pyplot()
    fig, axes = plt.subplots(1, len(metrics), figsize=(4.5 * len(metrics), 3.5), squeeze=False)
    for ax, metric in zip(axes[0], metrics):
        sub = [r for r in rows if r["metric"] == metric]
        # rows for the same value and method come in a fixed order (one per target),
        # so the occurrence index separates the series
        series, seen = {}, {}
        for r in sub:
            key = (r[param], r["distance_method"])
            j = seen[key] = seen.get(key, -1) + 1
            series.setdefault((r["distance_method"], j), []).append((float(r[param]), float(r["distance_value"])))
        drawn = set()
        for (m, j), pts in sorted(series.items()):
            pts = tuple(sorted(pts))
            if (m, pts) in drawn:  # same distance repeated for another bound
                continue
            drawn.add((m, pts))
            x, y = np.array(pts).T
            ax.plot(x, y, "o-", label=m if j == 0 else f"{m} ({j + 1})")
        # the tightest bound per parameter value
        best = {}
        for r in sub:
            v = float(r[param])
            best[v] = min(best.get(v, np.inf), float(r["bound_value"]))
        x = np.array(sorted(best))
        ax.plot(x, [best[v] for v in x], "k--", label="bound")
        if loglog:
            ax.set_xscale("log")
            ax.set_yscale("log")
        ax.set_xlabel(param)
        ax.set_ylabel(metric)
        ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return Path(out)


def plot_samples(csv_path, out, bins: int = 60):
    """Histogram of the ``value`` column with the Exp(1) density, and the two CDFs."""
    rows = _read(csv_path)
    x = np.sort(np.array([float(r["value"]) for r in rows]))
    plt = _pyplot()
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(9, 3.5))
    top = max(float(x[-1]), 5.0)
    a1.hist(x, bins=bins, range=(0, top), density=True, color="0.7")
    t = np.linspace(0, top, 400)
    a1.plot(t, np.exp(-t), "k-", lw=1)
    a1.set_xlabel("value")
    a1.set_ylabel("density")
    a2.step(x, np.arange(1, x.size + 1) / x.size, where="post", label="empirical")
    a2.plot(t, 1 - np.exp(-t), "k--", lw=1, label="Exp(1)")
    a2.set_xlim(0, top)
    a2.set_xlabel("value")
    a2.set_ylabel("CDF")
    a2.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return Path(out)
