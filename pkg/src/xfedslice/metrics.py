"""Constraint metrics: recall, masked log-odds, attribution correlation.

The log-odds score asks how much the model's confidence in its own
prediction survives when the top-p percent most attributed features are
zeroed out:

    theta = (1/D) sum_i log( Pr_i(y_hat | x_masked) / Pr_i(y_hat | x) )

with y_hat frozen from the unmasked pass and probabilities read from
the clamped forward output, so both logarithms are finite.  Faithful
attributions make theta strongly negative; theta at p = 0 is exactly
zero because nothing is masked.  More negative is better, which is why
the constraint has the form theta <= beta with beta < 0.

Recall gets two readings: the hard 0.5-threshold count used for
reporting and constraint checks, and a soft surrogate (mean predicted
probability over the positives, minus the floor alpha) whose gradient
exists, used only by the descent side of the training game.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, UndefinedRecallError
from .nn import forward_batch

CORRELATION_COLUMNS = (
    "attr_prb",
    "attr_latency",
    "attr_channel",
    "pred",
    "true",
)

LOGODDS_CURVE_HEADER = "top_p,log_odds"


def masked_count(p, n_features):
    """How many coordinates a top-p mask removes: ceil(p/100 * Q)."""
    if not 0.0 <= p <= 100.0:
        raise InputError(f"top-p must lie in [0, 100], got {p}")
    return math.ceil(p / 100.0 * n_features)


def top_p_mask(x, attributions, p):
    """Zero the ceil(p/100 * Q) coordinates with largest |attribution|.

    Ties resolve to the lower index (stable order), so masking is a
    pure function of its inputs.  p = 0 returns an untouched copy and
    p = 100 zeroes everything.
    """
    x = np.asarray(x, dtype=np.float64)
    a = np.asarray(attributions, dtype=np.float64)
    if x.shape != a.shape or x.ndim != 1:
        raise InputError(
            f"sample {x.shape} and attributions {a.shape} must be equal "
            "1-d shapes"
        )
    count = masked_count(p, x.size)
    out = x.copy()
    if count:
        order = np.argsort(-np.abs(a), kind="stable")
        out[order[:count]] = 0.0
    return out


def top_p_mask_batch(X, attributions, p):
    """Row-wise top_p_mask for matching (rows, Q) matrices."""
    X = np.asarray(X, dtype=np.float64)
    A = np.asarray(attributions, dtype=np.float64)
    if X.shape != A.shape or X.ndim != 2:
        raise InputError(
            f"samples {X.shape} and attributions {A.shape} must be equal "
            "2-d shapes"
        )
    count = masked_count(p, X.shape[1])
    out = X.copy()
    if count:
        order = np.argsort(-np.abs(A), axis=1, kind="stable")
        rows = np.arange(X.shape[0])[:, None]
        out[rows, order[:, :count]] = 0.0
    return out


def log_odds_from_probs(probs, masked_probs):
    """theta given clamped probabilities of both passes.

    The predicted class is frozen from the unmasked probabilities; the
    masked pass is scored on that same class.
    """
    probs = np.asarray(probs, dtype=np.float64)
    masked_probs = np.asarray(masked_probs, dtype=np.float64)
    if probs.shape != masked_probs.shape or probs.ndim != 1:
        raise InputError("probability vectors must share one 1-d shape")
    if probs.size == 0:
        raise InputError("cannot average log-odds over zero samples")
    predicted_positive = probs >= 0.5
    pr = np.where(predicted_positive, probs, 1.0 - probs)
    pr_masked = np.where(predicted_positive, masked_probs, 1.0 - masked_probs)
    return float(np.mean(np.log(pr_masked) - np.log(pr)))


def log_odds(weights, features, attributions, p):
    """Masked log-odds of a model over a feature matrix (or dataset)."""
    X = getattr(features, "features", features)
    X = np.asarray(X, dtype=np.float64)
    values = getattr(attributions, "values", attributions)
    probs = forward_batch(weights, X)
    masked = top_p_mask_batch(X, values, p)
    return log_odds_from_probs(probs, forward_batch(weights, masked))


def log_odds_curve(weights, features, attributions, p_values):
    """theta at several masking levels, attributions computed once."""
    return [(float(p), log_odds(weights, features, attributions, p)) for p in p_values]


def save_logodds_curve_csv(path, curve):
    lines = [LOGODDS_CURVE_HEADER]
    for p, theta in curve:
        lines.append("%.17g,%.17g" % (p, theta))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def recall(predicted_labels, true_labels):
    """TP / (TP + FN); undefined (and an error) without positives."""
    pred = np.asarray(predicted_labels)
    true = np.asarray(true_labels)
    if pred.shape != true.shape or pred.ndim != 1:
        raise InputError("label vectors must share one 1-d shape")
    positives = true == 1
    if not positives.any():
        raise UndefinedRecallError(
            "recall is undefined: no positive labels in this batch"
        )
    return float(np.mean(pred[positives] == 1))


def recall_surrogate(soft_predictions, true_labels, alpha):
    """Differentiable stand-in for the recall constraint.

    Psi = sum_i y_i min(p_i, 1) / sum_i y_i - alpha, which is positive
    when the soft recall clears the floor.  Hard recall at threshold
    0.5 can only exceed its soft counterpart's pessimism on confident
    models, so pushing Psi up pushes real recall up.
    """
    p = np.asarray(soft_predictions, dtype=np.float64)
    y = np.asarray(true_labels, dtype=np.float64)
    if p.shape != y.shape or p.ndim != 1:
        raise InputError("prediction and label vectors must share one 1-d shape")
    total = y.sum()
    if total == 0:
        raise UndefinedRecallError(
            "soft recall is undefined: no positive labels in this batch"
        )
    return float(np.sum(y * np.minimum(p, 1.0)) / total - alpha)


@dataclass(frozen=True)
class ConstraintScores:
    """Original (non-surrogate) per-batch constraint readings."""

    recall: float
    log_odds: float


@dataclass(frozen=True)
class CorrelationReport:
    """Pearson matrix over attribution columns, predictions and labels."""

    matrix: np.ndarray
    columns: tuple = CORRELATION_COLUMNS
    degenerate: tuple = ()


def correlation_matrix(attributions, soft_predictions, true_labels):
    """Pearson correlations between the three attribution columns, the
    predicted probability, and the true label.

    Zero-variance columns produce undefined correlations; they are
    reported by name in .degenerate and their off-diagonal entries are
    set to zero rather than NaN.
    """
    values = getattr(attributions, "values", attributions)
    values = np.asarray(values, dtype=np.float64)
    p = np.asarray(soft_predictions, dtype=np.float64)
    y = np.asarray(true_labels, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] != 3:
        raise InputError(f"attributions must be (rows, 3), got {values.shape}")
    rows = values.shape[0]
    if p.shape != (rows,) or y.shape != (rows,):
        raise InputError("column lengths disagree")
    if rows < 2:
        raise InputError("need at least two rows to correlate")

    table = np.column_stack([values, p, y])
    stds = table.std(axis=0)
    degenerate = tuple(
        name for name, s in zip(CORRELATION_COLUMNS, stds) if s == 0.0
    )
    n = len(CORRELATION_COLUMNS)
    matrix = np.eye(n)
    live = np.flatnonzero(stds > 0.0)
    if live.size >= 2:
        sub = np.corrcoef(table[:, live], rowvar=False)
        matrix[np.ix_(live, live)] = sub
    # Guard against rounding pushing |r| past 1, keep exact symmetry.
    matrix = np.clip((matrix + matrix.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(matrix, 1.0)
    return CorrelationReport(matrix=matrix, degenerate=degenerate)


def save_correlation_csv(report, path):
    """Matrix with one header row and named rows, loadable by eye."""
    lines = ["," + ",".join(report.columns)]
    for name, row in zip(report.columns, report.matrix):
        lines.append(name + "," + ",".join("%.17g" % v for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
