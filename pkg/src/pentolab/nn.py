"""Dense-network primitives: affine layers, activations, losses, and the
batch standardization layer.

All forward functions return (output, cache); the matching backward
functions consume the cache and an upstream gradient.  Everything works
on float64 arrays with the batch along axis 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ACTIVATIONS = ("linear", "relu", "tanh", "sigmoid", "softmax")


@dataclass
class DenseParams:
    weights: np.ndarray  # (fan_in, fan_out)
    bias: np.ndarray     # (fan_out,)

    def __post_init__(self):
        if self.weights.ndim != 2 or self.bias.ndim != 1 \
                or self.weights.shape[1] != self.bias.shape[0]:
            raise ValueError("inconsistent dense layer shapes %r / %r"
                             % (self.weights.shape, self.bias.shape))

    def copy(self) -> "DenseParams":
        return DenseParams(self.weights.copy(), self.bias.copy())


def glorot_init(fan_in: int, fan_out: int, rng) -> DenseParams:
    """Uniform(-b, b) with b = sqrt(6 / (fan_in + fan_out)); zero bias."""
    if fan_in < 1 or fan_out < 1:
        raise ValueError("fan_in and fan_out must be >= 1")
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    w = rng.uniform_array((fan_in, fan_out), -bound, bound)
    return DenseParams(w, np.zeros(fan_out))


def affine_forward(x: np.ndarray, params: DenseParams):
    if x.shape[1] != params.weights.shape[0]:
        raise ValueError("input width %d does not match fan_in %d"
                         % (x.shape[1], params.weights.shape[0]))
    out = x @ params.weights + params.bias
    return out, (x, params)


def affine_backward(cache, grad_out: np.ndarray):
    """Returns (dx, dweights, dbias)."""
    x, params = cache
    dx = grad_out @ params.weights.T
    dw = x.T @ grad_out
    db = grad_out.sum(axis=0)
    return dx, dw, db


def softmax(x: np.ndarray) -> np.ndarray:
    """Row-wise softmax, shift-stabilized."""
    shifted = x - x.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def activation_forward(x: np.ndarray, kind: str):
    if kind == "linear":
        return x, (kind, None)
    if kind == "relu":
        out = np.maximum(x, 0.0)
    elif kind == "tanh":
        out = np.tanh(x)
    elif kind == "sigmoid":
        out = sigmoid(x)
    elif kind == "softmax":
        out = softmax(x)
    else:
        raise ValueError("unknown activation %r (want one of %s)"
                         % (kind, ", ".join(ACTIVATIONS)))
    return out, (kind, out)


def activation_backward(cache, grad_out: np.ndarray):
    kind, out = cache
    if kind == "linear":
        return grad_out
    if kind == "relu":
        return grad_out * (out > 0)
    if kind == "tanh":
        return grad_out * (1.0 - out * out)
    if kind == "sigmoid":
        return grad_out * out * (1.0 - out)
    # softmax rows: J^T g = y * (g - <g, y>)
    dot = (grad_out * out).sum(axis=1, keepdims=True)
    return out * (grad_out - dot)


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax_nll_forward(logits: np.ndarray, labels: np.ndarray):
    """Mean negative log-likelihood of integer labels under row softmax.

    Returns (loss, probs, cache).
    """
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.shape[0] != logits.shape[0]:
        raise ValueError("labels must be 1-D with one entry per row")
    if labels.min() < 0 or labels.max() >= logits.shape[1]:
        raise ValueError("label out of range for %d classes" % logits.shape[1])
    m = logits.max(axis=1, keepdims=True)
    shifted = logits - m
    lse = np.log(np.exp(shifted).sum(axis=1)) + m[:, 0]
    loss = float(np.mean(lse - logits[np.arange(len(labels)), labels]))
    probs = np.exp(shifted)
    probs /= probs.sum(axis=1, keepdims=True)
    return loss, probs, (probs, labels)


def softmax_nll_backward(cache):
    """Gradient of the mean NLL with respect to the logits."""
    probs, labels = cache
    g = probs.copy()
    g[np.arange(len(labels)), labels] -= 1.0
    g /= len(labels)
    return g


def sigmoid_bce_forward(logits: np.ndarray, targets: np.ndarray):
    """Mean binary cross-entropy on scalar logits (shape (B,)).

    Computed from logits as softplus(x) - x*t, which never evaluates
    log(0).  Returns (loss, probs, cache).
    """
    logits = np.asarray(logits, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if logits.shape != targets.shape or logits.ndim != 1:
        raise ValueError("logits and targets must both be 1-D and equal length")
    softplus = np.maximum(logits, 0.0) + np.log1p(np.exp(-np.abs(logits)))
    loss = float(np.mean(softplus - logits * targets))
    probs = sigmoid(logits)
    return loss, probs, (probs, targets)


def sigmoid_bce_backward(cache):
    probs, targets = cache
    return (probs - targets) / len(targets)


def standardize_forward(h: np.ndarray, eps: float):
    """Column standardization over the batch.

    mu_j is the column mean, sigma_j = sqrt(mean squared deviation + eps),
    output = (h - mu) / max(sigma, eps).  With eps = 0 an exactly constant
    column has sigma 0 and the division is an error the caller must
    prevent (use eps > 0 or guarantee non-constant columns).
    """
    if h.ndim != 2:
        raise ValueError("standardize expects a 2-D batch")
    if eps < 0:
        raise ValueError("eps must be >= 0")
    if eps == 0.0 and h.shape[0] < 2:
        raise ValueError("eps=0 standardization needs at least 2 rows")
    mu = h.mean(axis=0)
    centered = h - mu
    # a column of identical values must center to exactly zero, not to
    # mean-roundoff residue that a small denominator would then amplify
    const = h.max(axis=0) == h.min(axis=0)
    if const.any():
        centered[:, const] = 0.0
    sigma = np.sqrt(np.mean(centered * centered, axis=0) + eps)
    denom = np.maximum(sigma, eps)
    if eps == 0.0 and not denom.all():
        raise ZeroDivisionError(
            "constant column under eps=0 standardization (column %d)"
            % int(np.nonzero(denom == 0)[0][0]))
    out = centered / denom
    use_sigma = sigma >= eps  # which columns sit on the sigma branch
    return out, (out, denom, use_sigma)


def standardize_backward(cache, grad_out: np.ndarray):
    """Gradient through the batch statistics.

    For sigma-branch columns, d h = (g - mean(g) - out * mean(g * out)) / denom;
    for eps-branch (near-constant) columns the out term is absent because
    the denominator is the constant eps.  Means are over the batch.
    """
    out, denom, use_sigma = cache
    g_mean = grad_out.mean(axis=0)
    proj = (grad_out * out).mean(axis=0)
    return (grad_out - g_mean - use_sigma * out * proj) / denom


def add_l1_l2_grad(params: DenseParams, l1: float, l2: float, dw: np.ndarray) -> np.ndarray:
    """Adds d/dW of l1*|W|_1 + l2*|W|_2^2 to a weight gradient, in place.

    Penalties apply to weights only, never biases.
    """
    if l1:
        dw += l1 * np.sign(params.weights)
    if l2:
        dw += 2.0 * l2 * params.weights
    return dw


def l1_l2_penalty(layers, l1: float, l2: float) -> float:
    """Total penalty value for a list of DenseParams (weights only)."""
    total = 0.0
    for p in layers:
        if l1:
            total += l1 * float(np.abs(p.weights).sum())
        if l2:
            total += l2 * float((p.weights * p.weights).sum())
    return total


def gradient_check(loss_and_grads, params_list, delta: float = 1e-5,
                   max_entries: int = 40, seed: int = 0) -> float:
    """Max relative error between analytic and central-difference gradients.

    loss_and_grads() recomputes the loss and gradient list for the current
    parameter values; params_list holds the arrays being perturbed.  A
    deterministic sample of entries per array is checked.  Returns 0.0 for
    an empty parameter list.

    The denominator is floored at 1e-4 so that entries smaller than the
    resolution of float64 central differences on an O(1) loss are compared
    absolutely instead of producing spurious relative errors.
    """
    from .rng import SplitMix64

    loss0, grads = loss_and_grads()
    worst = 0.0
    rng = SplitMix64(seed)
    for arr, g in zip(params_list, grads):
        flat = arr.reshape(-1)
        gflat = np.asarray(g).reshape(-1)
        n = flat.size
        picks = range(n) if n <= max_entries else \
            sorted(rng.sample_without_replacement(n, max_entries).tolist())
        for i in picks:
            old = flat[i]
            flat[i] = old + delta
            lp = loss_and_grads()[0]
            flat[i] = old - delta
            lm = loss_and_grads()[0]
            flat[i] = old
            numeric = (lp - lm) / (2.0 * delta)
            denom = max(abs(numeric) + abs(gflat[i]), 1e-4)
            worst = max(worst, abs(numeric - gflat[i]) / denom)
    return worst
