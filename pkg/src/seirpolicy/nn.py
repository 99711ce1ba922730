"""Small dense network in numpy: relu hidden layers, linear output, Adam.

Weights are stored ``(out, in)`` so a layer computes ``x @ W.T + b`` on a
batch of row vectors.
"""

from dataclasses import dataclass

import numba
import numpy as np

CHECKPOINT_MAGIC = "seirpolicy-mlp"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class NetworkSpec:
    input_size: int = 25
    hidden_sizes: tuple = (64, 128, 128)
    output_size: int = 4
    hidden_activation: str = "relu"
    output_activation: str = "linear"

    def __post_init__(self):
        if min((self.input_size, self.output_size) + tuple(self.hidden_sizes)) < 1:
            raise ValueError("all layer sizes must be >= 1")
        if self.hidden_activation not in ("relu", "linear"):
            raise ValueError(f"unsupported hidden activation {self.hidden_activation!r}")
        if self.output_activation != "linear":
            raise ValueError("only a linear output layer is supported")

    @property
    def sizes(self):
        return (self.input_size, *self.hidden_sizes, self.output_size)


class NetworkParams:
    """Per-layer weights and biases, all views into one flat float64 buffer."""

    def __init__(self, spec, weights, biases):
        self.spec = spec
        shapes = []
        for w, b in zip(weights, biases):
            shapes.extend((np.shape(w), np.shape(b)))
        self.flat = np.concatenate([np.ravel(a) for pair in zip(weights, biases) for a in pair]).astype(float)
        self._shapes = shapes
        self._bind()

    def _bind(self):
        views = []
        pos = 0
        for shape in self._shapes:
            size = int(np.prod(shape))
            views.append(self.flat[pos:pos + size].reshape(shape))
            pos += size
        self.weights = views[0::2]
        self.biases = views[1::2]

    def copy(self):
        return NetworkParams(self.spec, self.weights, self.biases)

    def arrays(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def checksum(self):
        return float(np.abs(self.flat).sum())


def init_params(spec, rng):
    """Glorot-uniform weights, zero biases."""
    weights, biases = [], []
    sizes = spec.sizes
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return NetworkParams(spec, weights, biases)


@dataclass
class ForwardCache:
    inputs: list   # input to each layer
    preacts: list  # pre-activation of each layer
    batched: bool


def forward(params, x, return_cache=False):
    """Network output for one input vector or a batch of row vectors."""
    x = np.asarray(x, dtype=float)
    batched = x.ndim == 2
    h = x if batched else x[None, :]
    if h.shape[1] != params.spec.input_size:
        raise ValueError(f"input has {h.shape[1]} features, network expects {params.spec.input_size}")
    relu = params.spec.hidden_activation == "relu"
    last = len(params.weights) - 1
    inputs, preacts = [], []
    for k, (w, b) in enumerate(zip(params.weights, params.biases)):
        inputs.append(h)
        z = h @ w.T + b
        preacts.append(z)
        h = np.maximum(z, 0.0) if (k < last and relu) else z
    if not np.all(np.isfinite(h)):
        raise FloatingPointError("network produced a non-finite output")
    out = h if batched else h[0]
    if return_cache:
        return out, ForwardCache(inputs, preacts, batched)
    return out


def mse_loss(predicted, target):
    """Mean squared error over all entries and its gradient w.r.t. ``predicted``."""
    p = np.asarray(predicted, dtype=float)
    t = np.asarray(target, dtype=float)
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {t.shape}")
    diff = p - t
    return float(np.mean(diff * diff)), 2.0 * diff / diff.size


def backward(params, cache, upstream):
    """Gradients of the loss w.r.t. every weight and bias.

    ``upstream`` is dLoss/dOutput with the same shape as the forward output.
    Returns ``(weight_grads, bias_grads)``.
    """
    if cache is None:
        raise ValueError("backward needs the cache from forward(..., return_cache=True)")
    g = np.asarray(upstream, dtype=float)
    if not cache.batched:
        g = g[None, :]
    relu = params.spec.hidden_activation == "relu"
    n_layers = len(params.weights)
    gw = [None] * n_layers
    gb = [None] * n_layers
    for k in range(n_layers - 1, -1, -1):
        if k < n_layers - 1 and relu:
            g = g * (cache.preacts[k] > 0.0)
        gw[k] = g.T @ cache.inputs[k]
        gb[k] = g.sum(axis=0)
        if k > 0:
            g = g @ params.weights[k]
    return gw, gb


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_params(cls, params, **kw):
        return cls(np.zeros_like(params.flat), np.zeros_like(params.flat), **kw)


def adam_update(params, grads, state):
    """One in-place Adam step with bias correction; returns ``(params, state)``."""
    gw, gb = grads
    if len(gw) != len(params.weights) or len(gb) != len(params.biases):
        raise ValueError("gradient list does not match parameters")
    for g, p in zip(list(gw) + list(gb), params.weights + params.biases):
        if np.shape(g) != p.shape:
            raise ValueError(f"gradient shape {np.shape(g)} does not match parameter {p.shape}")
    g = np.concatenate([np.ravel(a) for pair in zip(gw, gb) for a in pair])
    state.step += 1
    t = state.step
    ok = _adam_kernel(
        params.flat, g, state.m, state.v,
        state.learning_rate, state.beta1, state.beta2, state.epsilon,
        1.0 - state.beta1**t, 1.0 - state.beta2**t,
    )
    if not ok:
        raise FloatingPointError("non-finite Adam update")
    return params, state


_TINY = np.finfo(np.float64).tiny


@numba.njit(cache=True)
def _adam_kernel(theta, g, m, v, lr, b1, b2, eps, corr1, corr2):
    # fused single pass; a non-finite update poisons the running sum
    acc = 0.0
    step = lr / corr1
    inv2 = 1.0 / corr2
    for k in range(theta.shape[0]):
        gk = g[k]
        mk = b1 * m[k] + (1.0 - b1) * gk
        vk = b2 * v[k] + (1.0 - b2) * gk * gk
        # flush to zero: moments of dead units decay into subnormals, which
        # are two orders of magnitude slower on x86
        if abs(mk) < _TINY:
            mk = 0.0
        if vk < _TINY:
            vk = 0.0
        m[k] = mk
        v[k] = vk
        upd = step * mk / (np.sqrt(vk * inv2) + eps)
        acc += upd
        theta[k] -= upd
    return np.isfinite(acc)


def save_checkpoint(params, path):
    """Write a versioned text checkpoint.

    Layout: a header line ``seirpolicy-mlp 1``, a line ``layers <L>``, then per
    layer ``layer <k> <out> <in>`` followed by ``out`` lines of weights (row
    major) and one line of ``out`` biases.  Values use 17 significant digits,
    so a reload is exact.
    """
    lines = [f"{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}", f"layers {len(params.weights)}"]
    spec = params.spec
    lines.append(f"activation {spec.hidden_activation} {spec.output_activation}")
    for k, (w, b) in enumerate(zip(params.weights, params.biases)):
        lines.append(f"layer {k} {w.shape[0]} {w.shape[1]}")
        for row in w:
            lines.append(" ".join(f"{x:.17g}" for x in row))
        lines.append(" ".join(f"{x:.17g}" for x in b))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_checkpoint(path):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    magic, version = lines[0].split()
    if magic != CHECKPOINT_MAGIC or int(version) != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: not a version-{CHECKPOINT_VERSION} checkpoint")
    n_layers = int(lines[1].split()[1])
    _, hidden_act, out_act = lines[2].split()
    pos = 3
    weights, biases = [], []
    for k in range(n_layers):
        tag, idx, rows, cols = lines[pos].split()
        if tag != "layer" or int(idx) != k:
            raise ValueError(f"{path}:{pos + 1}: expected header for layer {k}")
        rows, cols = int(rows), int(cols)
        pos += 1
        w = np.array([[float(x) for x in lines[pos + j].split()] for j in range(rows)])
        pos += rows
        b = np.array([float(x) for x in lines[pos].split()])
        pos += 1
        if w.shape != (rows, cols) or b.shape != (rows,):
            raise ValueError(f"{path}: layer {k} has inconsistent shapes")
        weights.append(w)
        biases.append(b)
    spec = NetworkSpec(
        input_size=weights[0].shape[1],
        hidden_sizes=tuple(w.shape[0] for w in weights[:-1]),
        output_size=weights[-1].shape[0],
        hidden_activation=hidden_act,
        output_activation=out_act,
    )
    return NetworkParams(spec, weights, biases)
