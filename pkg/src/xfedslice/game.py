"""Two-player game that trains under recall and faithfulness constraints.

Local training is framed as a game between the model and a multiplier
player.  The model player descends a weighted objective

    L_W = lam_0 * loss + R * (lam_1 * psi_1 + lam_2 * psi_2)

where psi_1 = alpha - soft_recall and psi_2 = theta - beta are smooth
stand-ins for the two constraint violations and R bounds the multiplier
radius.  The multiplier player maximises the same shape built from the
original, non-smooth violations g_m; only the descent side needs the
surrogates.  Its state is a column-stochastic switch matrix A over the
objective and the constraints, nudged multiplicatively each epoch:

    A <- normalize_columns(A * exp(eta * delta) applied row-wise),
    lam = the stationary distribution of A (top eigenvector),

which is the classic low-regret recipe for this kind of game: an
external-regret algorithm would only find a fixed weighting, while the
swap-regret matrix lets the multiplier rethink each coordinate
separately, and that is what the feasibility guarantees lean on.

One oracle call of the model player is realised as a single SGD step,
and local_train returns the average of the post-step iterates, which
is the object the guarantees speak about, rather than the last one.

With R = 0 the game is inert: lam degenerates to (1, 0, 0), no
attributions or constraint metrics are computed, and the loop is an
ordinary mini-batch SGD on the cross entropy, bit for bit.  The
unconstrained baseline is exactly this degenerate case.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    ConfigurationError,
    InputError,
    NumericError,
    UndefinedRecallError,
)
from .explain import integrated_gradients_batch
from .metrics import (
    log_odds_from_probs,
    recall,
    recall_surrogate,
    top_p_mask_batch,
)
from .nn import (
    ModelWeights,
    _backprop_logit,
    _forward_cached,
    _sigmoid,
    add_scaled,
    apply_step,
    bce_loss,
    clamp_grad_mask,
    forward_batch,
    zeros_like_weights,
    CLAMP_EPS,
)

N_CONSTRAINTS = 2

# Multiplier of the inert game: all mass on the objective.
PLAIN_LAMBDA = (1.0, 0.0, 0.0)

DEFAULT_ETA_LAMBDA = 0.02
DEFAULT_BATCH_SIZE = 64
DEFAULT_IG_STEPS = 300


@dataclass(frozen=True)
class ConstraintSpec:
    """Per-slice constraint levels: recall floor alpha (hard recall at
    threshold 0.5 must reach it), log-odds ceiling beta (theta under
    top_p masking must not exceed it)."""

    alpha: float
    beta: float
    top_p: float

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigurationError(
                f"alpha must lie in (0, 1], got {self.alpha}"
            )
        if not np.isfinite(self.beta):
            raise ConfigurationError(f"beta must be finite, got {self.beta}")
        if not 0.0 <= self.top_p <= 100.0:
            raise ConfigurationError(
                f"top_p must lie in [0, 100], got {self.top_p}"
            )


@dataclass(frozen=True)
class TrainingBatch:
    """One mini-batch, with masked features frozen for the step.

    The mask is a function of the attributions at the step's starting
    weights; during the step (and its gradient) it is a constant.
    """

    features: np.ndarray
    labels: np.ndarray
    masked_features: Optional[np.ndarray] = None


@dataclass
class EpochRecord:
    """Per-epoch trace row; constraint fields stay None in plain mode."""

    epoch: int
    loss: float
    recall: Optional[float] = None
    log_odds: Optional[float] = None
    g_recall: Optional[float] = None
    g_logodds: Optional[float] = None
    lam: Optional[tuple] = None

    @property
    def feasible(self):
        if self.g_recall is None or self.g_logodds is None:
            return None
        return self.g_recall <= 0.0 and self.g_logodds <= 0.0


def constraint_violations(scores, spec):
    """(g1, g2) in the <= 0 is feasible convention."""
    return (spec.alpha - scores.recall, scores.log_odds - spec.beta)


def surrogate_violations(soft_predictions, labels, theta, spec):
    """Smooth violations for the descent side.

    psi_1 negates the soft-recall score so that, like g, positive means
    infeasible; psi_2 equals g_2 because theta is already smooth in the
    weights once the mask is frozen.
    """
    psi_recall = -recall_surrogate(soft_predictions, labels, spec.alpha)
    return (psi_recall, theta - spec.beta)


def weight_lagrangian(loss, surrogates, lam, r_lambda):
    """lam_0 * loss + R * sum_m lam_m * psi_m."""
    lam = np.asarray(lam, dtype=np.float64)
    return float(
        lam[0] * loss
        + r_lambda * (lam[1] * surrogates[0] + lam[2] * surrogates[1])
    )


def multiplier_gradient(loss, violations, r_lambda):
    """Ascent direction for the multiplier player: the payoff of each
    of its pure actions (objective, constraint 1, constraint 2)."""
    return np.array(
        [loss, r_lambda * violations[0], r_lambda * violations[1]]
    )


def initial_switch_matrix(n_constraints=N_CONSTRAINTS):
    """Uniform column-stochastic start, entries 1 / (M + 1)."""
    size = n_constraints + 1
    return np.full((size, size), 1.0 / size)


def check_column_stochastic(A, tol=1e-9):
    """Raise NumericError unless A has non-negative columns summing to 1."""
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NumericError(f"switch matrix must be square, got {A.shape}")
    if np.any(A < 0.0):
        raise NumericError("switch matrix has negative entries")
    sums = A.sum(axis=0)
    if np.max(np.abs(sums - 1.0)) > tol:
        raise NumericError(
            f"switch matrix columns sum to {sums}, expected 1 within {tol}"
        )
    return A


def exponentiated_update(A, delta, eta):
    """Multiplicative-weights step on the switch matrix.

    Row i is scaled by exp(eta * delta_i) and each column renormalised,
    so the result stays column stochastic.  The largest exponent is
    subtracted first; that cancels in the normalisation and keeps exp
    finite for any payoff scale.
    """
    A = np.asarray(A, dtype=np.float64)
    delta = np.asarray(delta, dtype=np.float64)
    if delta.shape != (A.shape[0],):
        raise ConfigurationError(
            f"payoff vector {delta.shape} does not match matrix {A.shape}"
        )
    exponents = eta * delta
    scale = np.exp(exponents - exponents.max())
    scaled = A * scale[:, None]
    return scaled / scaled.sum(axis=0, keepdims=True)


def top_eigenvector(A, tol=1e-10, max_iter=1000):
    """Stationary distribution of a column-stochastic matrix by power
    iteration, normalised to sum 1.

    Starts uniform and stops when an iteration moves no coordinate by
    more than tol.  A positive column-stochastic matrix has a unique
    such distribution, so failing to settle means the matrix is broken,
    which is reported instead of returned.
    """
    A = np.asarray(A, dtype=np.float64)
    v = np.full(A.shape[0], 1.0 / A.shape[0])
    for _ in range(max_iter):
        nxt = A @ v
        total = nxt.sum()
        if total <= 0.0 or not np.all(np.isfinite(nxt)):
            raise NumericError(
                f"power iteration left the simplex; matrix was\n{A!r}"
            )
        nxt = nxt / total
        if np.max(np.abs(nxt - v)) <= tol:
            return nxt
        v = nxt
    raise NumericError(
        f"power iteration did not settle in {max_iter} steps; "
        f"matrix was\n{A!r}"
    )


def _lagrangian_dlogit(weights, batch, lam, r_lambda):
    """Forward pass plus the fused upstream gradient at the logit.

    Returns everything the weight gradient needs: activations for both
    passes and the per-sample dL/dlogit vectors.  Terms whose
    coefficient is exactly zero are skipped outright, which is what
    makes the inert game identical to plain SGD at the bit level.
    """
    X = batch.features
    y = np.asarray(batch.labels, dtype=np.float64)
    coef_loss = float(lam[0])
    coef_recall = float(r_lambda) * float(lam[1])
    coef_logodds = float(r_lambda) * float(lam[2])

    logits, activations = _forward_cached(weights, X)
    s = _sigmoid(logits)
    p = np.clip(s, CLAMP_EPS, 1.0 - CLAMP_EPS)
    mask = clamp_grad_mask(s)
    count = X.shape[0]

    dlogit = coef_loss * (p - y) * mask / count

    if coef_recall != 0.0:
        total_pos = y.sum()
        if total_pos == 0:
            raise UndefinedRecallError(
                "constrained step needs at least one positive in the batch"
            )
        dlogit = dlogit + coef_recall * (
            -(y / total_pos) * s * (1.0 - s) * mask
        )

    masked = None
    if coef_logodds != 0.0:
        if batch.masked_features is None:
            raise ConfigurationError(
                "log-odds term is active but the batch has no masked features"
            )
        predicted_positive = s >= 0.5
        sign = np.where(predicted_positive, 1.0 - s, -s)
        dlogit = dlogit + coef_logodds * (-sign * mask) / count

        logits_m, activations_m = _forward_cached(
            weights, batch.masked_features
        )
        s_m = _sigmoid(logits_m)
        mask_m = clamp_grad_mask(s_m)
        sign_m = np.where(predicted_positive, 1.0 - s_m, -s_m)
        dlogit_m = coef_logodds * (sign_m * mask_m) / count
        masked = (activations_m, dlogit_m)

    return activations, dlogit, masked, (s, p)


def lagrangian_grad_weights(weights, batch, lam, spec, r_lambda):
    """Exact gradient of the frozen-mask Lagrangian w.r.t. parameters."""
    activations, dlogit, masked, _ = _lagrangian_dlogit(
        weights, batch, lam, r_lambda
    )
    grads = _backprop_logit(weights, batch.features, dlogit, activations)
    if masked is not None:
        activations_m, dlogit_m = masked
        extra = _backprop_logit(
            weights, batch.masked_features, dlogit_m, activations_m
        )
        grads = [
            (dW + eW, db + eb)
            for (dW, db), (eW, eb) in zip(grads, extra)
        ]
    return grads


def batch_lagrangian(weights, batch, lam, spec, r_lambda):
    """Value of the same frozen-mask objective, for gradient checks."""
    probs = forward_batch(weights, batch.features)
    loss = bce_loss(batch.labels, probs)
    if float(r_lambda) * float(lam[2]) != 0.0 and batch.masked_features is None:
        raise ConfigurationError(
            "log-odds term is active but the batch has no masked features"
        )
    if batch.masked_features is None:
        theta = 0.0
        psi_recall = (
            -recall_surrogate(probs, batch.labels, spec.alpha)
            if float(r_lambda) * float(lam[1]) != 0.0
            else 0.0
        )
    else:
        theta = log_odds_from_probs(
            probs, forward_batch(weights, batch.masked_features)
        )
        psi_recall = -recall_surrogate(probs, batch.labels, spec.alpha)
    return weight_lagrangian(
        loss, (psi_recall, theta - spec.beta), lam, r_lambda
    )


def sgd_step(weights, batch, lam, spec, lr, r_lambda):
    """One oracle call of the model player: a single SGD step on the
    frozen-mask Lagrangian.  Returns new weights, never mutates."""
    if lr <= 0.0:
        raise ConfigurationError(f"learning rate must be positive, got {lr}")
    grads = lagrangian_grad_weights(weights, batch, lam, spec, r_lambda)
    stepped = apply_step(weights, grads, lr)
    try:
        stepped.check_finite()
    except NumericError as exc:
        raise NumericError(
            f"SGD step diverged (lr={lr}, r_lambda={r_lambda}): {exc}"
        ) from exc
    return stepped


def draw_stratified_batch(rng, labels, batch_size):
    """Indices of a class-stratified mini-batch.

    The positive share mirrors the dataset (never below one sample), so
    the soft recall term is always defined.  Classes with fewer members
    than requested are drawn with replacement.
    """
    if batch_size < 1:
        raise ConfigurationError(
            f"batch_size must be at least 1, got {batch_size}"
        )
    y = np.asarray(labels)
    positives = np.flatnonzero(y == 1)
    negatives = np.flatnonzero(y == 0)
    if positives.size == 0:
        raise UndefinedRecallError(
            "cannot stratify a dataset with no positive labels"
        )
    if negatives.size == 0:
        n_pos = batch_size
    else:
        share = int(round(batch_size * positives.size / y.size))
        n_pos = min(max(share, 1), batch_size)
    picked = [
        rng.choice(positives, size=n_pos, replace=positives.size < n_pos)
    ]
    n_neg = batch_size - n_pos
    if n_neg:
        picked.append(
            rng.choice(negatives, size=n_neg, replace=negatives.size < n_neg)
        )
    return np.concatenate(picked)


def local_train(
    weights,
    dataset,
    spec,
    epochs,
    *,
    lr,
    r_lambda,
    eta_lambda=DEFAULT_ETA_LAMBDA,
    ig_steps=DEFAULT_IG_STEPS,
    batch_size=DEFAULT_BATCH_SIZE,
    seed=None,
    rng=None,
):
    """Run the local game for a number of epochs on one station's data.

    Each epoch draws a stratified batch and, when R > 0, prices the
    constraints: attributions and the mask are rebuilt at the current
    weights, the multiplier comes out of the switch matrix, the model
    takes its step, and the matrix absorbs the observed payoffs.  The
    returned model is the running average of the post-step iterates;
    the per-epoch records trace what the game saw.
    """
    if epochs < 1:
        raise ConfigurationError(f"epochs must be at least 1, got {epochs}")
    if r_lambda < 0.0:
        raise ConfigurationError(
            f"r_lambda must be non-negative, got {r_lambda}"
        )
    if rng is None:
        rng = np.random.default_rng(seed)
    features = dataset.features
    labels = dataset.labels
    constrained = r_lambda > 0.0

    switch = initial_switch_matrix()
    accumulator = zeros_like_weights(weights)
    records = []
    current = weights

    for epoch in range(epochs):
        idx = draw_stratified_batch(rng, labels, batch_size)
        X = features[idx]
        y = labels[idx]

        if constrained:
            probs = forward_batch(current, X)
            loss = bce_loss(y, probs)
            attrs = integrated_gradients_batch(current, X, steps=ig_steps)
            masked = top_p_mask_batch(X, attrs, spec.top_p)
            theta = log_odds_from_probs(probs, forward_batch(current, masked))
            rho = recall((probs >= 0.5).astype(np.int64), y)
            g_recall = spec.alpha - rho
            g_logodds = theta - spec.beta

            lam = top_eigenvector(switch)
            current = sgd_step(
                current,
                TrainingBatch(X, y, masked),
                lam,
                spec,
                lr,
                r_lambda,
            )
            payoff = multiplier_gradient(loss, (g_recall, g_logodds), r_lambda)
            switch = exponentiated_update(switch, payoff, eta_lambda)
            records.append(
                EpochRecord(
                    epoch=epoch,
                    loss=loss,
                    recall=rho,
                    log_odds=theta,
                    g_recall=g_recall,
                    g_logodds=g_logodds,
                    lam=tuple(lam),
                )
            )
        else:
            probs = forward_batch(current, X)
            loss = bce_loss(y, probs)
            current = sgd_step(
                current, TrainingBatch(X, y), PLAIN_LAMBDA, spec, lr, 0.0
            )
            records.append(EpochRecord(epoch=epoch, loss=loss))

        add_scaled(accumulator, current, 1.0)

    averaged = ModelWeights(
        [(W / epochs, b / epochs) for W, b in accumulator]
    )
    return averaged.check_finite(), records
