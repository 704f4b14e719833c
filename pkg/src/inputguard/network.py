"""Dense feed-forward networks with hand-derived gradients.

Everything is float64 and deterministic for a fixed seed. A network is an
ordered list of dense layers; the first `trunk_size` layers form the trunk
(copied from the subject classifier and frozen inside the embedders), the
rest form the trainable head. Checkpoints are JSON documents with weights
stored as decimal strings so that a save/load round trip is lossless.
"""

import copy
import json

import numpy as np

from ._validation import as_float_matrix
from .errors import DimensionError, FormatError, NumericError

RELU = "relu"
IDENTITY = "identity"
_ACTIVATIONS = (RELU, IDENTITY)

CHECKPOINT_VERSION = 1


class DenseLayer:
    """One fully connected layer: act(x @ W.T + b), W shaped (out, in)."""

    def __init__(self, weights, bias, activation=IDENTITY):
        weights = np.asarray(weights, dtype=np.float64)
        bias = np.asarray(bias, dtype=np.float64).ravel()
        if weights.ndim != 2:
            raise DimensionError(f"weights must be 2-D, got shape {weights.shape}")
        if bias.shape[0] != weights.shape[0]:
            raise DimensionError(
                f"bias length {bias.shape[0]} != output size {weights.shape[0]}"
            )
        if activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.weights = weights
        self.bias = bias
        self.activation = activation

    @property
    def in_size(self):
        return self.weights.shape[1]

    @property
    def out_size(self):
        return self.weights.shape[0]

    def copy(self):
        return DenseLayer(self.weights.copy(), self.bias.copy(), self.activation)


class FeedForwardNet:
    """A chain of dense layers with forward, cached forward, and backward."""

    def __init__(self, layers, trunk_size=0):
        layers = list(layers)
        if not layers:
            raise ValueError("a network needs at least one layer")
        for prev, nxt in zip(layers, layers[1:]):
            if prev.out_size != nxt.in_size:
                raise DimensionError(
                    f"layer output size {prev.out_size} does not feed "
                    f"layer input size {nxt.in_size}"
                )
        if not 0 <= trunk_size <= len(layers):
            raise ValueError(f"trunk_size {trunk_size} out of range")
        self.layers = layers
        self.trunk_size = trunk_size

    @property
    def input_size(self):
        return self.layers[0].in_size

    @property
    def output_size(self):
        return self.layers[-1].out_size

    def trunk_net(self):
        """The frozen feature extractor as its own network (shared arrays)."""
        if self.trunk_size == 0:
            raise ValueError("network has no trunk layers")
        return FeedForwardNet(self.layers[: self.trunk_size])

    def head_net(self):
        """The trainable head as its own network (shared arrays)."""
        if self.trunk_size >= len(self.layers):
            raise ValueError("network has no head layers")
        return FeedForwardNet(self.layers[self.trunk_size :])

    def forward(self, batch):
        """Map a batch (N, in) to outputs (N, out); pure in (weights, batch)."""
        out, _ = self.forward_cached(batch, keep_cache=False)
        return out

    def forward_cached(self, batch, keep_cache=True):
        """Forward pass returning (output, cache) for a later backward call."""
        x = as_float_matrix(batch, "batch")
        if x.shape[1] != self.input_size:
            raise DimensionError(
                f"batch has {x.shape[1]} features, network expects {self.input_size}"
            )
        pre_acts = []
        inputs = [x]
        for layer in self.layers:
            z = x @ layer.weights.T + layer.bias
            x = np.maximum(z, 0.0) if layer.activation == RELU else z
            if keep_cache:
                pre_acts.append(z)
                inputs.append(x)
        cache = (inputs, pre_acts) if keep_cache else None
        return x, cache

    def backward(self, cache, upstream_grad):
        """Backpropagate an upstream gradient (N, out) to all parameters.

        Returns (param_grads, input_grad) where param_grads aligns with
        `parameters()`: [dW0, db0, dW1, db1, ...].
        """
        inputs, pre_acts = cache
        grad = as_float_matrix(upstream_grad, "upstream_grad")
        if grad.shape != (inputs[0].shape[0], self.output_size):
            raise DimensionError(
                f"upstream gradient shape {grad.shape} does not match output "
                f"({inputs[0].shape[0]}, {self.output_size})"
            )
        param_grads = [None] * (2 * len(self.layers))
        for i in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[i]
            dz = grad * (pre_acts[i] > 0.0) if layer.activation == RELU else grad
            param_grads[2 * i] = dz.T @ inputs[i]
            param_grads[2 * i + 1] = dz.sum(axis=0)
            grad = dz @ layer.weights
        return param_grads, grad

    def parameters(self):
        """Flat parameter list [W0, b0, W1, b1, ...] (live arrays)."""
        params = []
        for layer in self.layers:
            params.append(layer.weights)
            params.append(layer.bias)
        return params

    def parameter_names(self):
        names = []
        for i in range(len(self.layers)):
            names.append(f"layer{i}.weights")
            names.append(f"layer{i}.bias")
        return names

    def copy(self):
        return FeedForwardNet([l.copy() for l in self.layers], self.trunk_size)


def init_network(sizes, activations, trunk_size, rng):
    """Uniform fan-in-scaled init: W, b ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in))."""
    if len(activations) != len(sizes) - 1:
        raise ValueError("need one activation per layer")
    layers = []
    for fan_in, fan_out, act in zip(sizes, sizes[1:], activations):
        bound = 1.0 / np.sqrt(fan_in)
        w = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        b = rng.uniform(-bound, bound, size=fan_out)
        layers.append(DenseLayer(w, b, act))
    return FeedForwardNet(layers, trunk_size)


# ---------------------------------------------------------------------------
# Optimizers
# ---------------------------------------------------------------------------


def _check_grads(params, grads, names):
    if len(params) != len(grads):
        raise DimensionError(
            f"got {len(grads)} gradients for {len(params)} parameters"
        )
    for i, (p, g) in enumerate(zip(params, grads)):
        if p.shape != np.shape(g):
            name = names[i] if names else f"param{i}"
            raise DimensionError(
                f"gradient shape {np.shape(g)} != parameter shape {p.shape} for {name}"
            )
        if not np.all(np.isfinite(g)):
            name = names[i] if names else f"param{i}"
            raise NumericError(f"non-finite gradient for {name}")


class SGDOptimizer:
    """Plain gradient descent; the hand-checkable mode."""

    def __init__(self, learning_rate=1e-3):
        if learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        self.learning_rate = learning_rate
        self.step_count = 0

    def step(self, params, grads, names=None):
        _check_grads(params, grads, names)
        for p, g in zip(params, grads):
            p -= self.learning_rate * g
        self.step_count += 1


class AdamOptimizer:
    """Adaptive-moment gradient descent with bias-corrected estimates."""

    def __init__(self, learning_rate=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        if learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self._m = None
        self._v = None

    def step(self, params, grads, names=None):
        _check_grads(params, grads, names)
        if self._m is None:
            self._m = [np.zeros_like(p) for p in params]
            self._v = [np.zeros_like(p) for p in params]
        self.step_count += 1
        t = self.step_count
        lr_t = self.learning_rate * np.sqrt(1.0 - self.beta2**t) / (1.0 - self.beta1**t)
        for p, g, m, v in zip(params, grads, self._m, self._v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(g)
            p -= lr_t * m / (np.sqrt(v) + self.eps)


def make_optimizer(kind, learning_rate):
    if kind == "adam":
        return AdamOptimizer(learning_rate)
    if kind == "sgd":
        return SGDOptimizer(learning_rate)
    raise ValueError(f"unknown optimizer {kind!r}")


# ---------------------------------------------------------------------------
# Softmax head utilities
# ---------------------------------------------------------------------------


def softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits, labels):
    """Mean cross entropy and its gradient w.r.t. the logits."""
    probs = softmax(logits)
    n = logits.shape[0]
    rows = np.arange(n)
    loss = -np.log(probs[rows, labels] + 1e-300).mean()
    dlogits = probs.copy()
    dlogits[rows, labels] -= 1.0
    dlogits /= n
    return loss, dlogits


# ---------------------------------------------------------------------------
# JSON checkpoints (decimal-string weights, lossless round trip)
# ---------------------------------------------------------------------------


def _floats_to_strings(arr):
    return [repr(float(v)) for v in np.asarray(arr, dtype=np.float64).ravel()]


def _strings_to_floats(values, shape, where):
    try:
        arr = np.array([float(v) for v in values], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"bad weight string in {where}") from exc
    if arr.size != int(np.prod(shape)):
        raise FormatError(
            f"{where}: expected {int(np.prod(shape))} values, got {arr.size}"
        )
    return arr.reshape(shape)


def network_to_dict(net, kind, meta=None):
    doc = {
        "format_version": CHECKPOINT_VERSION,
        "kind": kind,
        "trunk_size": net.trunk_size,
        "layers": [
            {
                "activation": layer.activation,
                "out_size": layer.out_size,
                "in_size": layer.in_size,
                "weights": _floats_to_strings(layer.weights),
                "bias": _floats_to_strings(layer.bias),
            }
            for layer in net.layers
        ],
    }
    if meta:
        doc["meta"] = meta
    return doc


def network_from_dict(doc):
    if not isinstance(doc, dict) or "layers" not in doc:
        raise FormatError("checkpoint document has no layers")
    version = doc.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise FormatError(f"unsupported checkpoint format_version {version!r}")
    layers = []
    for i, spec in enumerate(doc["layers"]):
        where = f"layer {i}"
        try:
            out_size = int(spec["out_size"])
            in_size = int(spec["in_size"])
            activation = spec["activation"]
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{where}: malformed layer spec") from exc
        if activation not in _ACTIVATIONS:
            raise FormatError(f"{where}: unknown activation {activation!r}")
        w = _strings_to_floats(spec["weights"], (out_size, in_size), where)
        b = _strings_to_floats(spec["bias"], (out_size,), where)
        layers.append(DenseLayer(w, b, activation))
    net = FeedForwardNet(layers, int(doc.get("trunk_size", 0)))
    return net, doc.get("kind", "network"), doc.get("meta", {})


def save_network(path, net, kind, meta=None):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(network_to_dict(net, kind, meta), fh, sort_keys=True)
        fh.write("\n")


def load_network(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path} is not valid JSON: {exc}") from exc
    return network_from_dict(doc)


def clone_trunk(net):
    """Deep-copied trunk layers of a trained network."""
    return [copy.deepcopy(l) for l in net.layers[: net.trunk_size]]
