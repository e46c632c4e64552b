"""Shared oracle utilities for the test suite.

Finite differences are the independent check for every hand-derived
gradient in the package: flatten the parameters, nudge one coordinate
at a time, and compare.  Tolerances live with the individual tests.
"""

import numpy as np

from xfedslice.nn import ModelWeights


def flatten_weights(weights):
    """Concatenate all parameters into one vector (layer order, W then b)."""
    parts = []
    for W, b in weights.layers:
        parts.append(np.asarray(W).ravel())
        parts.append(np.asarray(b).ravel())
    return np.concatenate(parts)


def unflatten_weights(vector, template):
    """Inverse of flatten_weights, shapes taken from a template model."""
    layers = []
    cursor = 0
    for W, b in template.layers:
        dW = vector[cursor : cursor + W.size].reshape(W.shape)
        cursor += W.size
        db = vector[cursor : cursor + b.size]
        cursor += b.size
        layers.append((dW, db))
    return ModelWeights(layers)


def flatten_grads(grads):
    parts = []
    for dW, db in grads:
        parts.append(dW.ravel())
        parts.append(db.ravel())
    return np.concatenate(parts)


def central_difference(scalar_fn, vector, step=1e-5):
    """Central finite differences of a scalar function of a vector."""
    grad = np.zeros_like(vector)
    for i in range(vector.size):
        bumped = vector.copy()
        bumped[i] += step
        upper = scalar_fn(bumped)
        bumped[i] -= 2.0 * step
        lower = scalar_fn(bumped)
        grad[i] = (upper - lower) / (2.0 * step)
    return grad


def relative_error(analytic, numeric, floor=1e-6):
    """Elementwise |a - n| / max(|a|, |n|, floor)."""
    analytic = np.asarray(analytic)
    numeric = np.asarray(numeric)
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / scale


# Verdict lines from the end-to-end acceptance tests; conftest echoes
# them after the summary so a plain `pytest -v` run shows them even
# with output capture on.
VERDICTS = []


def verdict(name, ok, detail, soft=False):
    """Record and print one acceptance verdict line.

    Soft criteria report REVERSED instead of FAIL when the direction
    does not hold; the caller then skips the assert.
    """
    status = "PASS" if ok else ("REVERSED" if soft else "FAIL")
    line = f"[acceptance] {name}: {status} ({detail})"
    VERDICTS.append(line)
    print(line)
    return ok
