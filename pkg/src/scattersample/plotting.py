"""Figures written next to sweep CSVs. The CSVs stay the source of truth."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _finish(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_accuracy_curves(summary: Iterable[dict], out: str | Path, group_by: str = "sampler",
                         title: str | None = None) -> Path:
    """Mean test accuracy (± std) against label budget ratio, one line per group."""
    curves: dict[str, list[tuple[float, float, float]]] = {}
    for row in summary:
        curves.setdefault(str(row[group_by]), []).append(
            (float(row["budget_ratio"]), float(row["mean_accuracy"]), float(row["std_accuracy"]))
        )
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for name, pts in sorted(curves.items()):
        pts.sort()
        x, y, s = map(np.array, zip(*pts))
        ax.errorbar(100 * x, y, yerr=s, marker="o", capsize=3, label=f"{group_by}={name}")
    ax.set_xlabel("labeled nodes / training nodes (%)")
    ax.set_ylabel("test accuracy")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    return _finish(fig, Path(out))


def plot_simulation(rows: Iterable[dict], out: str | Path) -> Path:
    """Seed-averaged per-cluster MSE for both arms at each p_inter."""
    acc: dict[tuple[str, str], list[tuple[float, float]]] = {}
    for r in rows:
        if r["method"] == "error":
            continue
        acc.setdefault((r["p_inter"], r["method"]), []).append((float(r["mse_c1"]), float(r["mse_c2"])))
    ps = sorted({p for p, _ in acc}, key=float)
    methods = sorted({m for _, m in acc})
    fig, axes = plt.subplots(1, len(ps), figsize=(3.2 * len(ps), 3), squeeze=False)
    for ax, p in zip(axes[0], ps):
        width = 0.8 / max(1, len(methods))
        for i, m in enumerate(methods):
            vals = np.mean(acc.get((p, m), [(np.nan, np.nan)]), axis=0)
            ax.bar(np.arange(2) + i * width, vals, width, label=m)
        ax.set_xticks(np.arange(2) + width * (len(methods) - 1) / 2, ["cluster 1", "cluster 2"])
        ax.set_yscale("log")
        ax.set_title(f"p_inter={p}")
    axes[0][0].set_ylabel("MSE")
    axes[0][-1].legend(fontsize=8)
    return _finish(fig, Path(out))
