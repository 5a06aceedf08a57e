"""Figure rendering for the CLI report paths.

Every report the CLI writes as CSV/JSON can optionally be rendered as a
PNG next to it. Figures are written to files only (Agg backend); nothing
here opens a window.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .classify import ConfusionMatrix, PermutationResult

_SAVE_OPTS = {"dpi": 150, "bbox_inches": "tight", "metadata": {"Software": "roomecho"}}


def save_confusion_matrix(cm: ConfusionMatrix, path) -> None:
    """Row-normalized confusion matrix as a heat map with count annotations."""
    norm = cm.row_normalized()
    n = len(cm.labels)
    fig, ax = plt.subplots(figsize=(1.0 + 0.6 * n, 0.8 + 0.6 * n))
    ax.imshow(norm, cmap="Blues", vmin=0.0, vmax=1.0)
    for i in range(n):
        for j in range(n):
            if cm.counts[i, j]:
                ax.text(j, i, str(cm.counts[i, j]), ha="center", va="center",
                        fontsize=8, color="black" if norm[i, j] < 0.6 else "white")
    ax.set_xticks(range(n), cm.labels, rotation=45, ha="right", fontsize=8)
    ax.set_yticks(range(n), cm.labels, fontsize=8)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    ax.set_title(f"overall accuracy {100.0 * cm.overall_accuracy():.1f}%")
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)


def save_window_sweep(rows: list[dict], path) -> None:
    """Accuracy against analysis-window length; one line per accuracy kind."""
    windows = [r["t_window_s"] for r in rows]
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    ax.plot(windows, [100.0 * r["overall_accuracy"] for r in rows],
            "o-", label="overall")
    ax.plot(windows, [100.0 * r["min_class_accuracy"] for r in rows],
            "s--", label="minimum per class")
    ax.set_xlabel("window length (s)")
    ax.set_ylabel("accuracy (%)")
    ax.set_ylim(0, 105)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)


def save_permutation_summary(results: dict[str, PermutationResult], path) -> None:
    """Observed JS per feature against the permutation null (mean +/- 4 std)."""
    names = list(results)
    observed = np.array([results[n].observed_js for n in names])
    null_mean = np.array([results[n].null_js.mean() for n in names])
    null_std = np.array([results[n].null_js.std() for n in names])
    x = np.arange(len(names))
    fig, ax = plt.subplots(figsize=(1.5 + 0.45 * len(names), 4.0))
    ax.errorbar(x, null_mean, yerr=4.0 * null_std, fmt="none", ecolor="gray",
                capsize=3, label="permutation null (mean ± 4σ)")
    ax.plot(x, observed, "r*", markersize=9, label="observed")
    ax.set_xticks(x, names, rotation=90, fontsize=7)
    ax.set_ylabel("JS divergence (nats)")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)


def save_sffs_trace(trace: list[dict], path) -> None:
    """Criterion value after each accepted add/remove step."""
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    steps = np.arange(1, len(trace) + 1)
    ax.plot(steps, [100.0 * t["criterion"] for t in trace], "o-")
    for step, t in zip(steps, trace):
        marker = "+" if t["action"] == "add" else "-"
        ax.annotate(f"{marker}{t['feature']}", (step, 100.0 * t["criterion"]),
                    textcoords="offset points", xytext=(0, 6), fontsize=7,
                    ha="center")
    ax.set_xlabel("accepted step")
    ax.set_ylabel("CV misclassification (%)")
    ax.grid(True, alpha=0.3)
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
