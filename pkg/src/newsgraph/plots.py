"""Figure rendering for run reports.

Each helper draws one figure and writes it straight to a file, next to
the CSV holding the same numbers.  The Agg backend is forced so the
renderers work headless.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .graph import NodeId, NodeKind

__all__ = [
    "plot_roc", "plot_history", "plot_topic_eval", "plot_sweep_heatmap",
    "plot_param_lines", "plot_ablation_bars", "plot_degree_hist",
]


def _save(fig, path: str) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_roc(path: str, roc, auc: float | None = None) -> None:
    fpr = [row[1] for row in roc]
    tpr = [row[2] for row in roc]
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    label = "model" if auc is None else f"model (AUC {auc:.3f})"
    ax.plot(fpr, tpr, marker=".", label=label)
    ax.plot([0, 1], [0, 1], linestyle="--", color="grey", label="chance")
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.legend(loc="lower right")
    _save(fig, path)


def plot_history(path: str, history) -> None:
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(6, 5), sharex=True)
    for phase in sorted({h["phase"] for h in history}):
        rows = [h for h in history if h["phase"] == phase]
        top.plot([h["epoch"] for h in rows], [h["loss"] for h in rows],
                 label=f"phase {phase}")
    top.set_ylabel("training loss")
    top.legend()
    scored = [h for h in history if "val_f1" in h]
    if scored:
        bottom.plot([h["epoch"] for h in scored],
                    [h["val_acc"] for h in scored], label="val accuracy")
        bottom.plot([h["epoch"] for h in scored],
                    [h["val_f1"] for h in scored], label="val macro F1")
        bottom.legend()
    bottom.set_xlabel("epoch")
    _save(fig, path)


def plot_topic_eval(path: str, rows) -> None:
    """``rows`` holds (k, perplexity, coherence) triples."""
    ks = [r[0] for r in rows]
    fig, left = plt.subplots(figsize=(5.5, 4))
    left.plot(ks, [r[1] for r in rows], marker="o", color="tab:blue")
    left.set_xlabel("topic count k")
    left.set_ylabel("held-out perplexity", color="tab:blue")
    right = left.twinx()
    right.plot(ks, [r[2] for r in rows], marker="s", color="tab:orange")
    right.set_ylabel("coherence", color="tab:orange")
    _save(fig, path)


def plot_sweep_heatmap(path: str, wl_values, r_values, acc_grid) -> None:
    """``acc_grid[i][j]`` is the accuracy at wl_values[i], r_values[j]."""
    grid = np.asarray(acc_grid, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    image = ax.imshow(grid, origin="lower", aspect="auto", cmap="viridis")
    ax.set_xticks(range(len(r_values)), [str(r) for r in r_values])
    ax.set_yticks(range(len(wl_values)), [str(w) for w in wl_values])
    ax.set_xlabel("restart probability")
    ax.set_ylabel("walk length")
    fig.colorbar(image, ax=ax, label="test accuracy")
    _save(fig, path)


def plot_param_lines(path: str, name: str, values, metric_rows) -> None:
    """``metric_rows`` holds (acc, m_pre, m_rec, m_f1, auc) per value."""
    fig, ax = plt.subplots(figsize=(5.5, 4))
    labels = ("accuracy", "macro F1", "AUC")
    columns = (0, 3, 4)
    for label, col in zip(labels, columns):
        ys = [row[col] for row in metric_rows]
        ax.plot(values, ys, marker="o", label=label)
    ax.set_xlabel(name)
    ax.set_ylabel("test metric")
    ax.legend()
    _save(fig, path)


def plot_ablation_bars(path: str, rows) -> None:
    """``rows`` holds (variant, acc, m_pre, m_rec, m_f1, auc) tuples."""
    names = [r[0] for r in rows]
    accs = [r[1] for r in rows]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(range(len(names)), accs, color="tab:blue")
    ax.set_xticks(range(len(names)), names, rotation=30, ha="right")
    ax.set_ylabel("test accuracy")
    ax.set_ylim(0.0, 1.0)
    _save(fig, path)


def plot_degree_hist(path: str, graph) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for kind in NodeKind:
        degrees = [len(graph.adj.get(NodeId(kind, i), ()))
                   for i in range(graph.count(kind))]
        if degrees:
            ax.hist(degrees, bins=15, alpha=0.55, label=kind.name.lower())
    ax.set_xlabel("degree")
    ax.set_ylabel("node count")
    ax.legend()
    _save(fig, path)
