"""The five figure kinds, each a plain function from CSVs to a Figure.

Builders return the matplotlib Figure so tests can read the plotted
arrays straight off the artists and compare them with the CSV values;
:func:`render` is the thin file-writing wrapper the command line uses.
Nothing here recomputes anything: a figure is the CSV, drawn.
"""

from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import SchemaError, read_correlation, read_curve, read_metrics

KINDS = (
    "loss_curve",
    "recall_curve",
    "logodds_curve",
    "logodds_compare",
    "heatmap",
)

# One fixed color per slice so overlaid runs stay readable: the second
# run reuses the slice color with a dashed line.
_SLICE_COLORS = ("tab:blue", "tab:orange", "tab:green", "tab:red",
                 "tab:purple")


@dataclass(frozen=True)
class PlotJob:
    """One rendering request: figure kind, input CSV(s), output path."""

    kind: str
    inputs: tuple
    out: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(
                f"unknown figure kind '{self.kind}', expected one of "
                + ", ".join(KINDS)
            )
        wants_two = self.kind == "logodds_compare"
        if wants_two and len(self.inputs) != 2:
            raise SchemaError(
                f"{self.kind} compares two runs and needs --in and --in2"
            )
        if not wants_two and self.kind in ("logodds_curve", "heatmap") and len(
            self.inputs
        ) != 1:
            raise SchemaError(f"{self.kind} takes exactly one input CSV")
        if self.kind in ("loss_curve", "recall_curve") and not 1 <= len(
            self.inputs
        ) <= 2:
            raise SchemaError(
                f"{self.kind} takes one metrics CSV, or two to overlay"
            )


def _metrics_figure(paths, column, ylabel):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for which, path in enumerate(paths):
        slices, mode = read_metrics(path)
        style = "-" if which == 0 else "--"
        for i, (name, entry) in enumerate(slices.items()):
            ax.plot(
                entry["rounds"],
                entry[column],
                style,
                color=_SLICE_COLORS[i % len(_SLICE_COLORS)],
                marker="o" if which == 0 else "s",
                markersize=3,
                label=f"{name} ({mode})",
            )
    ax.set_xlabel("federation round")
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


def loss_curve(paths):
    """Training loss over rounds, one line per slice, second run dashed."""
    return _metrics_figure(paths, "train_loss", "training loss")


def recall_curve(paths):
    """Held-out mean recall over rounds, same layout as the loss curve."""
    return _metrics_figure(paths, "mean_recall", "held-out mean recall")


def logodds_curve(paths):
    """Masked log-odds against the masking percentage, one run."""
    p_values, thetas = read_curve(paths[0])
    fig, ax = plt.subplots(figsize=(5.6, 4.0))
    ax.plot(p_values, thetas, "-o", color="tab:blue")
    ax.axhline(0.0, color="gray", linewidth=0.8, alpha=0.6)
    ax.set_xlabel("top-p% features masked")
    ax.set_ylabel("log-odds score")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    return fig


def logodds_compare(paths):
    """Two runs' masked log-odds curves on shared axes.

    Pass the constrained run first and the comparison run second; the
    labels follow that order.
    """
    fig, ax = plt.subplots(figsize=(5.6, 4.0))
    for path, label, style in zip(paths, ("constrained", "vanilla"),
                                  ("-o", "--s")):
        p_values, thetas = read_curve(path)
        ax.plot(p_values, thetas, style, label=label)
    ax.axhline(0.0, color="gray", linewidth=0.8, alpha=0.6)
    ax.set_xlabel("top-p% features masked")
    ax.set_ylabel("log-odds score")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=9)
    fig.tight_layout()
    return fig


def heatmap(paths):
    """The correlation matrix as an annotated grid, values in the cells."""
    labels, matrix = read_correlation(paths[0])
    n = len(labels)
    fig, ax = plt.subplots(figsize=(1.1 * n + 1.6, 1.1 * n + 1.2))
    image = ax.imshow(matrix, vmin=-1.0, vmax=1.0, cmap="RdBu_r")
    ax.set_xticks(np.arange(n), labels=labels, rotation=45,
                  ha="right", fontsize=8)
    ax.set_yticks(np.arange(n), labels=labels, fontsize=8)
    for i in range(n):
        for j in range(n):
            ax.text(j, i, f"{matrix[i, j]:+.2f}", ha="center",
                    va="center", fontsize=7)
    fig.colorbar(image, ax=ax, shrink=0.8)
    fig.tight_layout()
    return fig


_BUILDERS = {
    "loss_curve": loss_curve,
    "recall_curve": recall_curve,
    "logodds_curve": logodds_curve,
    "logodds_compare": logodds_compare,
    "heatmap": heatmap,
}


def render(job):
    """Build the figure for a job, write it to job.out, return the path."""
    fig = _BUILDERS[job.kind](job.inputs)
    try:
        fig.savefig(job.out, dpi=150)
    finally:
        plt.close(fig)
    return job.out
