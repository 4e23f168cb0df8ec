"""Figures written next to the CSV outputs (PNG, non-interactive backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

DPI = 120


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def heatmap(L_sorted, labels_sorted, path, title="balance structure, ordered by community"):
    """Heatmap of the reordered balance matrix with community boundaries."""
    fig, ax = plt.subplots(figsize=(5, 4.5))
    im = ax.imshow(L_sorted, cmap="Greys", interpolation="nearest", aspect="equal")
    cuts = np.flatnonzero(np.diff(labels_sorted)) + 0.5
    for c in cuts:
        ax.axhline(c, color="tab:red", lw=0.6)
        ax.axvline(c, color="tab:red", lw=0.6)
    ax.set_xticks([])
    ax.set_yticks([])
    ax.set_title(title, fontsize=10)
    fig.colorbar(im, ax=ax, fraction=0.046, pad=0.04)
    return _save(fig, path)


def anomaly_boxplot(within_negative, cross_positive, path):
    fig, ax = plt.subplots(figsize=(4.5, 4))
    data = [np.asarray(within_negative, float), np.asarray(cross_positive, float)]
    # matplotlib rejects empty groups; draw them as gaps
    shown = [d if d.size else np.array([np.nan]) for d in data]
    ax.boxplot(shown, widths=0.5)
    ax.set_xticks([1, 2])
    ax.set_xticklabels(
        [f"same community, y=-1\n(n={data[0].size})", f"different, y=+1\n(n={data[1].size})"],
        fontsize=8,
    )
    ax.axhline(0.0, color="0.6", lw=0.8, ls="--")
    ax.set_ylabel("thresholded anomaly score")
    return _save(fig, path)


def objective_trace(trace, path):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(np.arange(len(trace)), trace, lw=1.2)
    ax.set_xlabel("iteration")
    ax.set_ylabel("negative log-likelihood")
    return _save(fig, path)


def selection_curve(ms, scores, chosen, path):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(ms, scores, "o-")
    if chosen is not None:
        ax.axvline(chosen, color="tab:red", ls="--", lw=0.8)
    ax.set_xlabel("number of communities m")
    ax.set_ylabel("BIC")
    return _save(fig, path)


def benchmark_panels(summary, path):
    """Mean +/- se against n, one line per anomaly rate, for error and FDP."""
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.6))
    rates = sorted({row["a_n"] for row in summary})
    for a in rates:
        rows = sorted((r for r in summary if r["a_n"] == a), key=lambda r: r["n"])
        ns = [r["n"] for r in rows]
        for ax, key in zip(axes, ("community_error", "fdp")):
            mean = np.array([r[f"{key}_mean"] for r in rows], float)
            se = np.array([r[f"{key}_se"] if r[f"{key}_se"] is not None else 0.0
                           for r in rows], float)
            if key == "fdp" and a == 0:
                continue
            ax.errorbar(ns, mean, yerr=se, marker="o", capsize=3, label=f"a_n={a:g}")
    axes[0].set_ylabel("community detection error")
    axes[1].set_ylabel("false discovery proportion")
    for ax in axes:
        ax.set_xlabel("n")
        ax.legend(fontsize=8)
    return _save(fig, path)
