"""Small dense network used as the per-slice drop classifier.

The model is deliberately tiny (default 3-10-10-1, ReLU inside, sigmoid
out) and everything is written against plain numpy with exact, hand
derived gradients.  Two gradient flavours are exposed:

* ``grad_weights``  - mean binary cross entropy w.r.t. the parameters,
* ``grad_input``    - the raw sigmoid output w.r.t. the input features,
  which is what the attribution code integrates along a path.

Output probabilities are clamped to [CLAMP_EPS, 1 - CLAMP_EPS] before
they reach a logarithm.  Inside the clamped region the derivative of
the clamp is zero and the backward passes honour that, so gradients
stay finite everywhere.  ReLU uses the zero subgradient at its kink.

Weights are an immutable value type; a training step returns a new
``ModelWeights`` rather than mutating in place, which keeps federated
averaging and the running iterate averages trivially safe to write.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import ConfigurationError, NumericError, ParseError

CLAMP_EPS = 1e-7

_XFSW_MAGIC = b"XFSW"
_XFSW_VERSION = 1


class ModelWeights:
    """An ordered stack of (weight matrix, bias vector) pairs.

    Weight matrices are stored as (fan_out, fan_in); a layer maps
    ``a -> a @ W.T + b``.  Arrays are copied on construction and marked
    read only, so instances can be shared freely.
    """

    __slots__ = ("layers",)

    def __init__(self, layers):
        frozen = []
        prev_out = None
        for index, (W, b) in enumerate(layers):
            W = np.array(W, dtype=np.float64)
            b = np.array(b, dtype=np.float64)
            if W.ndim != 2 or b.ndim != 1:
                raise ConfigurationError(
                    f"layer {index}: expected a 2-d weight matrix and a "
                    f"1-d bias, got shapes {W.shape} and {b.shape}"
                )
            if W.shape[0] != b.shape[0]:
                raise ConfigurationError(
                    f"layer {index}: weight rows ({W.shape[0]}) do not "
                    f"match bias length ({b.shape[0]})"
                )
            if prev_out is not None and W.shape[1] != prev_out:
                raise ConfigurationError(
                    f"layer {index}: expects {W.shape[1]} inputs but the "
                    f"previous layer produces {prev_out}"
                )
            prev_out = W.shape[0]
            W.setflags(write=False)
            b.setflags(write=False)
            frozen.append((W, b))
        if not frozen:
            raise ConfigurationError("a model needs at least one layer")
        object.__setattr__(self, "layers", tuple(frozen))

    def __setattr__(self, name, value):
        raise AttributeError("ModelWeights is immutable")

    @property
    def layer_sizes(self):
        """[n_inputs, hidden..., n_outputs] for this stack."""
        sizes = [self.layers[0][0].shape[1]]
        sizes.extend(W.shape[0] for W, _ in self.layers)
        return sizes

    @property
    def n_inputs(self):
        return self.layers[0][0].shape[1]

    def check_finite(self, context=""):
        """Raise NumericError if any parameter is NaN or infinite."""
        for index, (W, b) in enumerate(self.layers):
            if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
                where = f" ({context})" if context else ""
                raise NumericError(
                    f"non-finite parameters in layer {index}{where}"
                )
        return self

    def __eq__(self, other):
        if not isinstance(other, ModelWeights):
            return NotImplemented
        if len(self.layers) != len(other.layers):
            return False
        return all(
            Wa.shape == Wb.shape
            and np.array_equal(Wa, Wb)
            and np.array_equal(ba, bb)
            for (Wa, ba), (Wb, bb) in zip(self.layers, other.layers)
        )

    def __hash__(self):
        return hash(tuple(W.shape for W, _ in self.layers))

    def __repr__(self):
        return f"ModelWeights(layer_sizes={self.layer_sizes})"


def init_weights(layer_sizes, seed):
    """Glorot-uniform weights, zero biases, for the given architecture.

    Each matrix is drawn from U(-r, r) with r = sqrt(6 / (fan_in +
    fan_out)).  The draw order is fixed (layer by layer, row major) so
    a seed pins the model exactly.
    """
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2 or any(s < 1 for s in sizes):
        raise ConfigurationError(
            f"layer_sizes needs at least two positive entries, got {sizes}"
        )
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        radius = np.sqrt(6.0 / (fan_in + fan_out))
        W = rng.uniform(-radius, radius, size=(fan_out, fan_in))
        layers.append((W, np.zeros(fan_out)))
    return ModelWeights(layers)


def _sigmoid(z):
    """Numerically stable logistic function."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _as_batch(X, n_inputs):
    X = np.asarray(X, dtype=np.float64)
    squeeze = X.ndim == 1
    if squeeze:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != n_inputs:
        raise ConfigurationError(
            f"input has shape {X.shape}, model expects (*, {n_inputs})"
        )
    return X, squeeze


def _forward_cached(weights, X):
    """Run the stack and keep per-layer activations for backprop.

    Returns (logits, activations) where activations[0] is the input and
    activations[i] is the post-ReLU output of hidden layer i.
    """
    activations = [X]
    a = X
    for W, b in weights.layers[:-1]:
        a = np.maximum(a @ W.T + b, 0.0)
        activations.append(a)
    W_out, b_out = weights.layers[-1]
    logits = (a @ W_out.T + b_out)[:, 0]
    return logits, activations


def raw_output_batch(weights, X):
    """Sigmoid output before clamping, one value per row of X.

    This is the function the path-integral attributions explain; its
    gradient is smooth everywhere the ReLUs are.
    """
    X, squeeze = _as_batch(X, weights.n_inputs)
    logits, _ = _forward_cached(weights, X)
    s = _sigmoid(logits)
    return s[0] if squeeze else s


def forward_batch(weights, X):
    """Clamped probability of the positive class per row of X."""
    s = raw_output_batch(weights, X)
    return np.clip(s, CLAMP_EPS, 1.0 - CLAMP_EPS)


def forward(weights, x):
    """Clamped probability and hard 0.5-threshold label for one sample."""
    p = forward_batch(weights, np.asarray(x, dtype=np.float64))
    p = float(p if np.ndim(p) == 0 else p[0])
    return p, int(p >= 0.5)


def bce_loss(labels, probs):
    """Mean binary cross entropy; probs are assumed already clamped."""
    y = np.asarray(labels, dtype=np.float64)
    p = np.asarray(probs, dtype=np.float64)
    if y.shape != p.shape:
        raise ConfigurationError(
            f"labels {y.shape} and probabilities {p.shape} differ in shape"
        )
    if y.size == 0:
        raise ConfigurationError("cannot average a loss over zero samples")
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def _backprop_logit(weights, X, dlogit, activations):
    """Exact gradients of sum_i dlogit[i] * logit_i w.r.t. parameters.

    dlogit carries whatever chain-rule factor the caller accumulated
    past the logit (loss derivative, clamp mask, multipliers...).
    """
    grads = [None] * len(weights.layers)
    delta = np.asarray(dlogit, dtype=np.float64)[:, None]
    for index in reversed(range(len(weights.layers))):
        W, _ = weights.layers[index]
        a_prev = activations[index]
        dW = delta.T @ a_prev
        db = delta.sum(axis=0)
        grads[index] = (dW, db)
        if index > 0:
            # Propagate through the ReLU that produced a_prev; the mask
            # is zero exactly at the kink, matching the chosen
            # subgradient.
            delta = (delta @ W) * (a_prev > 0.0)
    return grads


def clamp_grad_mask(sigmoid_out):
    """1.0 where the output clamp is inactive, 0.0 where it saturates."""
    s = np.asarray(sigmoid_out, dtype=np.float64)
    return ((s > CLAMP_EPS) & (s < 1.0 - CLAMP_EPS)).astype(np.float64)


def grad_weights(weights, X, labels):
    """Gradient of the mean BCE loss w.r.t. every parameter.

    Returns a list of (dW, db) pairs in layer order, shaped like the
    model.  The clamp contributes zero derivative where it is active.
    """
    X, _ = _as_batch(X, weights.n_inputs)
    y = np.asarray(labels, dtype=np.float64)
    if y.shape != (X.shape[0],):
        raise ConfigurationError(
            f"labels have shape {y.shape}, expected ({X.shape[0]},)"
        )
    logits, activations = _forward_cached(weights, X)
    s = _sigmoid(logits)
    p = np.clip(s, CLAMP_EPS, 1.0 - CLAMP_EPS)
    dlogit = (p - y) * clamp_grad_mask(s) / X.shape[0]
    return _backprop_logit(weights, X, dlogit, activations)


def grad_input_batch(weights, X):
    """Gradient of the raw (pre-clamp) sigmoid output w.r.t. each input row."""
    X, squeeze = _as_batch(X, weights.n_inputs)
    logits, activations = _forward_cached(weights, X)
    s = _sigmoid(logits)
    delta = (s * (1.0 - s))[:, None]
    for index in reversed(range(len(weights.layers))):
        W, _ = weights.layers[index]
        delta = delta @ W
        if index > 0:
            delta = delta * (activations[index] > 0.0)
    return delta[0] if squeeze else delta


def grad_input(weights, x):
    """Single-sample convenience wrapper around grad_input_batch."""
    return grad_input_batch(weights, np.asarray(x, dtype=np.float64))


def zeros_like_weights(weights):
    """Mutable list of zero arrays shaped like the model, for accumulators."""
    return [
        (np.zeros_like(W), np.zeros_like(b)) for W, b in weights.layers
    ]


def add_scaled(accumulator, weights, scale):
    """accumulator += scale * weights, in place, for (dW, db) lists."""
    for (aW, ab), (W, b) in zip(accumulator, weights.layers):
        aW += scale * W
        ab += scale * b
    return accumulator


def apply_step(weights, grads, lr):
    """One explicit gradient step; returns new ModelWeights."""
    layers = [
        (W - lr * dW, b - lr * db)
        for (W, b), (dW, db) in zip(weights.layers, grads)
    ]
    return ModelWeights(layers)


def save_weights(weights, path):
    """Serialize a model to the .xfsw binary snapshot format.

    Layout: 16-byte header (magic "XFSW", u32 version, u32 layer count,
    u32 reserved, all little endian) followed by the raw float64 stream
    W1 row-major, b1, W2, b2, ... in layer order.
    """
    header = _XFSW_MAGIC + struct.pack(
        "<III", _XFSW_VERSION, len(weights.layers), 0
    )
    chunks = [header]
    for W, b in weights.layers:
        chunks.append(np.ascontiguousarray(W, dtype="<f8").tobytes())
        chunks.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(chunks))


def load_weights(path, layer_sizes=(3, 10, 10, 1)):
    """Read a .xfsw snapshot back, validating it against an architecture.

    The file stores no shapes of its own, only a layer count, so the
    caller supplies the expected layer_sizes (the defaults match the
    desk model).  Mismatches raise ConfigurationError; a corrupt or
    truncated file raises ParseError.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 16 or blob[:4] != _XFSW_MAGIC:
        raise ParseError("not a model snapshot (bad magic)", path=path)
    version, layer_count, _ = struct.unpack("<III", blob[4:16])
    if version != _XFSW_VERSION:
        raise ParseError(f"unsupported snapshot version {version}", path=path)
    sizes = [int(s) for s in layer_sizes]
    if layer_count != len(sizes) - 1:
        raise ConfigurationError(
            f"snapshot holds {layer_count} layers, architecture "
            f"{sizes} needs {len(sizes) - 1}"
        )
    expected = sum(
        fan_out * fan_in + fan_out
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:])
    )
    values = np.frombuffer(blob[16:], dtype="<f8")
    if values.size != expected:
        raise ParseError(
            f"snapshot holds {values.size} parameters, architecture "
            f"{sizes} needs {expected}",
            path=path,
        )
    layers = []
    cursor = 0
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        W = values[cursor : cursor + fan_out * fan_in].reshape(fan_out, fan_in)
        cursor += fan_out * fan_in
        b = values[cursor : cursor + fan_out]
        cursor += fan_out
        layers.append((W, b))
    return ModelWeights(layers).check_finite(context=str(path))
