"""Matplotlib figure rendering for the report artifacts.

Every function writes one figure to `path`; the format follows the file
extension (.svg by default from the CLI)."""

import numpy as np


def _plt():
    import matplotlib
    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt
    return plt


def plot_training_curve(report, path):
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(range(1, len(report.rmse) + 1), report.rmse, lw=1.5)
    ax.set_xlabel("epoch")
    ax.set_ylabel("RMSE")
    ax.set_title(f"training error (stopped: {report.stop_reason})")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_roc(curve, path):
    plt = _plt()
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot(curve.points[:, 0], curve.points[:, 1], lw=1.5,
            label=f"AUC = {curve.auc:.4f}")
    ax.plot([0, 1], [0, 1], "k--", lw=0.8, alpha=0.5)
    ax.set_xlabel("false alarm rate")
    ax.set_ylabel("detection rate")
    ax.set_title("ROC")
    ax.legend(loc="lower right")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_dropout_traces(cmp, path):
    plt = _plt()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for trace, label, style in (
            (cmp.train_sse_dropout, f"train, dropout p={cmp.keep_p}", "-"),
            (cmp.test_sse_dropout, f"test, dropout p={cmp.keep_p}", "--"),
            (cmp.train_sse_plain, "train, no dropout", "-"),
            (cmp.test_sse_plain, "test, no dropout", "--")):
        ax.plot(range(1, len(trace) + 1), trace, style, lw=1.3, label=label)
    ax.set_xlabel("epoch")
    ax.set_ylabel("SSE")
    ax.set_title("rule dropout comparison")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_dataset(ds, path, concept_centers=None, concept_sigma=None):
    """Scatter of the first two feature dimensions, colored by bag label."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 6))
    for label, color, name in ((1.0, "tab:red", "positive bags"),
                               (0.0, "tab:blue", "negative bags")):
        pts = [b.instances for b in ds.bags if (b.label >= 0.5) == (label >= 0.5)]
        if pts:
            pts = np.vstack(pts)
            ax.scatter(pts[:, 0], pts[:, 1], s=8, alpha=0.6, c=color, label=name)
    if concept_centers is not None and concept_sigma is not None:
        for cx, cy in concept_centers:
            ax.add_patch(plt.Circle((cx, cy), concept_sigma, fill=False,
                                    color="k", lw=1.2))
    ax.set_xlabel("f1")
    ax.set_ylabel("f2")
    ax.set_title("instances by bag label")
    ax.legend(loc="upper left")
    ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_membership_grid(model, path, span=3.0):
    """Grid of the per-rule, per-dimension Gaussian membership curves."""
    plt = _plt()
    r, d = model.n_rules, model.dim
    fig, axes = plt.subplots(r, d, figsize=(2.2 * d + 1, 1.6 * r + 1),
                             squeeze=False)
    for i in range(r):
        for j in range(d):
            c = model.centers[i, j]
            s = model.sigmas[i, j]
            xs = np.linspace(c - span * s, c + span * s, 120)
            axes[i][j].plot(xs, np.exp(-0.5 * ((xs - c) / s) ** 2), lw=1.2)
            axes[i][j].set_ylim(0, 1.05)
            axes[i][j].set_yticks([])
            if j == 0:
                axes[i][j].set_ylabel(f"rule {i + 1}", fontsize=8)
            if i == r - 1:
                axes[i][j].set_xlabel(f"f{j + 1}", fontsize=8)
    fig.suptitle("membership functions")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
