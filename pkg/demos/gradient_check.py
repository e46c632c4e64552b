"""
Gradient checking the hand-written backprop
===========================================

The training loop trusts two gradients: the loss gradient with respect
to every weight (backprop) and the raw-output gradient with respect to
the input (the integrand of the attribution method).  Both are plain
chain-rule code, so both are checked here against central differences.
"""

import numpy as np

from xfedslice.nn import (
    bce_loss,
    forward_batch,
    grad_input,
    grad_weights,
    init_weights,
    raw_output_batch,
)

rng = np.random.default_rng(42)
net = init_weights([3, 10, 10, 1], seed=42)
X = rng.normal(size=(8, 3))
y = rng.integers(0, 2, size=8).astype(float)

# Analytic loss gradient, flattened into one long vector.
grads = grad_weights(net, X, y)
analytic = np.concatenate([np.r_[g.ravel(), gb] for g, gb in grads])

# Central differences over every one of the 161 parameters.
step = 1e-5
flat = np.concatenate([np.r_[W.ravel(), b] for W, b in net.layers])


def rebuild(vector):
    layers, at = [], 0
    for W, b in net.layers:
        W2 = vector[at:at + W.size].reshape(W.shape)
        at += W.size
        b2 = vector[at:at + b.size]
        at += b.size
        layers.append((W2, b2))
    from xfedslice.nn import ModelWeights
    return ModelWeights(layers)


numeric = np.empty_like(flat)
for i in range(flat.size):
    bumped = flat.copy()
    bumped[i] += step
    up = bce_loss(y, forward_batch(rebuild(bumped), X))
    bumped[i] -= 2 * step
    down = bce_loss(y, forward_batch(rebuild(bumped), X))
    numeric[i] = (up - down) / (2 * step)

rel = np.abs(analytic - numeric) / np.maximum(np.abs(numeric), 1e-6)
print(f"weight gradient: {flat.size} parameters, max rel err {rel.max():.2e}")

# Same treatment for the input gradient of the raw (pre-sigmoid) output.
x = X[0].copy()
analytic_in = grad_input(net, x)
numeric_in = np.empty(3)
for i in range(3):
    bumped = x.copy()
    bumped[i] += step
    up = float(raw_output_batch(net, bumped))
    bumped[i] -= 2 * step
    down = float(raw_output_batch(net, bumped))
    numeric_in[i] = (up - down) / (2 * step)

rel_in = np.abs(analytic_in - numeric_in) / np.maximum(np.abs(numeric_in), 1e-6)
print(f"input gradient:  3 coordinates, max rel err {rel_in.max():.2e}")
