"""Figure rendering for xfedslice run artifacts.

A pure view layer: every number in a figure comes straight out of a CSV
written by the simulator, so this package computes nothing and can be
installed, upgraded or deleted without touching any result.

Five figure kinds cover the run artifacts: ``loss_curve`` and
``recall_curve`` over federation rounds (optionally overlaying a second
run for constrained-vs-vanilla comparisons), ``logodds_curve`` over the
masking fraction, ``logodds_compare`` for two runs' curves side by
side, and ``heatmap`` for the attribution correlation matrix.

The ``plots`` command wraps :func:`sliceplots.render.render`::

    plots loss_curve --in runs/desk/metrics.csv --out loss.png
"""

from .io import SchemaError, read_correlation, read_curve, read_metrics
from .render import KINDS, PlotJob, render

__version__ = "0.1.0"

__all__ = [
    "KINDS",
    "PlotJob",
    "SchemaError",
    "read_correlation",
    "read_curve",
    "read_metrics",
    "render",
    "__version__",
]
