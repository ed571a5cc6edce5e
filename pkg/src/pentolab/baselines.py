"""Reference baselines: a plain dense MLP on flattened inputs and a
Hamming-distance k-nearest-neighbors classifier.

Both consume flat binary feature matrices (uint8 rows of 0/1).  Images
flatten to 4096 features, symbolic encodings to 64*k.  The feature rows
are extremely sparse, so the MLP keeps the input matrix in CSR form for
the first layer and k-NN packs rows into 64-bit words and counts bits.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import nn
from .metrics import RunMetrics
from .optim import apply_update, make_optimizer
from .rng import SplitMix64, derive_seed
from .smlp import DivergenceError

_S_SHUFFLE = 21
_S_EVAL = 22


def flatten_images(ds) -> np.ndarray:
    return ds.images.reshape(len(ds), -1)


def flatten_symbolic(ds) -> np.ndarray:
    return ds.codes.reshape(len(ds), -1)


# ---------------------------------------------------------------------------
# MLP


@dataclass
class MLPConfig:
    hidden: tuple = (2048, 2048, 2048)
    activation: str = "tanh"
    optimizer: str = "sgd"
    lr: float = 0.05
    rho: float | None = None
    eps_opt: float | None = None
    tau: float | None = None
    l1: float = 1e-6
    l2: float = 1e-5
    batch_size: int = 200
    epochs: int = 8
    seed: int = 1234
    train_eval_limit: int = 8000
    eval_batch: int = 2048
    # Multiplier applied to the input features.  The flat inputs here are
    # extremely sparse bit vectors (a handful of ones among thousands of
    # zeros), far from the unit-variance features fan-in-based
    # initialization assumes; without rescaling, first-layer
    # preactivations start so close to zero that the network is stuck in
    # its linear regime and cannot pick up the purely higher-order
    # structure of the same/different task.
    input_scale: float = 1.0

    def __post_init__(self):
        if self.activation not in ("tanh", "relu", "sigmoid"):
            raise ValueError("unsupported MLP activation %r" % (self.activation,))
        if not self.hidden:
            raise ValueError("MLP needs at least one hidden layer")
        if not self.input_scale > 0:
            raise ValueError("input_scale must be positive")


def mlp_init(config: MLPConfig, n_features: int, rng: SplitMix64):
    sizes = [n_features, *config.hidden, 1]
    return [nn.glorot_init(a, b, rng) for a, b in zip(sizes[:-1], sizes[1:])]


def _mlp_forward(x_batch, layers, activation):
    """x_batch may be a scipy CSR block or a dense array."""
    h = x_batch @ layers[0].weights + layers[0].bias
    caches = []
    for layer in layers[1:]:
        a, c_act = nn.activation_forward(h, activation)
        caches.append((a, c_act))
        h = a @ layer.weights + layer.bias
    return h[:, 0], caches


def mlp_predict(layers, activation: str, x, batch: int = 2048) -> np.ndarray:
    """Class-1 probabilities for a feature matrix (sparse or dense)."""
    n = x.shape[0]
    probs = np.empty(n)
    for lo in range(0, n, batch):
        hi = min(lo + batch, n)
        logits, _ = _mlp_forward(x[lo:hi], layers, activation)
        probs[lo:hi] = nn.sigmoid(logits)
    return probs


def _mlp_eval(layers, activation, x, y, batch):
    n = x.shape[0]
    loss_sum, correct = 0.0, 0
    for lo in range(0, n, batch):
        hi = min(lo + batch, n)
        logits, _ = _mlp_forward(x[lo:hi], layers, activation)
        loss, probs, _ = nn.sigmoid_bce_forward(logits, y[lo:hi])
        loss_sum += loss * (hi - lo)
        correct += int(((probs >= 0.5) == (y[lo:hi] == 1.0)).sum())
    return 100.0 * (1.0 - correct / n), loss_sum / n


def _mlp_loss_and_grads(xs, ys, layers, config):
    """One batch; xs sparse or dense.  Returns (loss, grads flat list)."""
    pre = xs @ layers[0].weights + layers[0].bias
    acts = []   # (post, cache) per hidden boundary
    h = pre
    for layer in layers[1:]:
        a, c_act = nn.activation_forward(h, config.activation)
        acts.append((a, c_act))
        h = a @ layer.weights + layer.bias
    logits = h[:, 0]
    data_loss, _, c_bce = nn.sigmoid_bce_forward(logits, ys)
    grads = [None] * (2 * len(layers))
    g = nn.sigmoid_bce_backward(c_bce)[:, None]
    for li in range(len(layers) - 1, 0, -1):
        a, c_act = acts[li - 1]
        grads[2 * li] = a.T @ g
        grads[2 * li + 1] = g.sum(axis=0)
        g = nn.activation_backward(c_act, g @ layers[li].weights.T)
    dw0 = np.asarray(xs.T @ g) if sp.issparse(xs) else xs.T @ g
    grads[0] = dw0
    grads[1] = g.sum(axis=0)
    for li, layer in enumerate(layers):
        nn.add_l1_l2_grad(layer, config.l1, config.l2, grads[2 * li])
    total = data_loss + nn.l1_l2_penalty(layers, config.l1, config.l2)
    return total, data_loss, grads


def mlp_train(train_x: np.ndarray, train_y: np.ndarray, test_x: np.ndarray,
              test_y: np.ndarray, config: MLPConfig, metrics=None):
    """Minibatch training on flat binary features.

    Returns (layers, metrics); metrics rows follow the shared convention
    (epoch 0 is the initial state, train rows use a fixed subsample until
    the final epoch).  Pass a RunMetrics subclass as `metrics` to observe
    rows as they are appended.
    """
    t0 = time.perf_counter()
    if train_x.shape[1] != test_x.shape[1]:
        raise ValueError("train/test feature width mismatch")
    n = train_x.shape[0]
    rng = SplitMix64(config.seed)
    layers = mlp_init(config, train_x.shape[1], rng)
    flat = []
    for l in layers:
        flat += [l.weights, l.bias]
    opt = make_optimizer(config.optimizer, [p.shape for p in flat], config.lr,
                         rho=config.rho, eps_opt=config.eps_opt, tau=config.tau)
    shuffle_rng = SplitMix64(derive_seed(config.seed, _S_SHUFFLE))
    ys = train_y.astype(np.float64)
    test_ys = test_y.astype(np.float64)

    x_csr = sp.csr_matrix(train_x, dtype=np.float64)
    test_csr = sp.csr_matrix(test_x, dtype=np.float64)
    if config.input_scale != 1.0:
        x_csr = x_csr * config.input_scale
        test_csr = test_csr * config.input_scale
    if n <= config.train_eval_limit:
        eval_idx = np.arange(n)
    else:
        r = SplitMix64(derive_seed(config.seed, _S_EVAL))
        eval_idx = np.sort(r.sample_without_replacement(n, config.train_eval_limit))
    eval_csr = x_csr[eval_idx]

    if metrics is None:
        metrics = RunMetrics()

    def record(epoch, full_train=False):
        if full_train:
            tr = _mlp_eval(layers, config.activation, x_csr, ys, config.eval_batch)
        else:
            tr = _mlp_eval(layers, config.activation, eval_csr, ys[eval_idx],
                           config.eval_batch)
        te = _mlp_eval(layers, config.activation, test_csr, test_ys,
                       config.eval_batch)
        wall = time.perf_counter() - t0
        metrics.append(epoch, "train", tr[0], tr[1], wallclock_s=wall)
        metrics.append(epoch, "test", te[0], te[1], wallclock_s=wall)

    record(0)
    for epoch in range(1, config.epochs + 1):
        perm = shuffle_rng.permutation(n)
        for lo in range(0, n, config.batch_size):
            idx = perm[lo:lo + config.batch_size]
            total, _, grads = _mlp_loss_and_grads(x_csr[idx], ys[idx], layers, config)
            if not np.isfinite(total):
                raise DivergenceError("non-finite MLP loss at epoch %d" % epoch)
            apply_update(flat, grads, opt)
        record(epoch, full_train=(epoch == config.epochs))
    return layers, metrics


# ---------------------------------------------------------------------------
# k-nearest neighbors on Hamming distance


@dataclass
class KNNConfig:
    k: int = 2
    weighting: str = "uniform"
    seed: int = 1234

    def __post_init__(self):
        if self.weighting not in ("uniform", "distance"):
            raise ValueError("weighting must be 'uniform' or 'distance'")
        if self.k < 1:
            raise ValueError("k must be >= 1")


def pack_rows(x: np.ndarray) -> np.ndarray:
    """Pack binary uint8 rows into uint64 words for popcount distances."""
    if x.ndim != 2:
        raise ValueError("expected a 2-D feature matrix")
    packed = np.packbits(x, axis=1)
    pad = (-packed.shape[1]) % 8
    if pad:
        packed = np.pad(packed, ((0, 0), (0, pad)))
    return packed.view(np.uint64)


def hamming_distances(queries_packed: np.ndarray, train_packed: np.ndarray) -> np.ndarray:
    """(nq, nt) Hamming distance matrix between packed row sets."""
    x = np.bitwise_xor(queries_packed[:, None, :], train_packed[None, :, :])
    return np.bitwise_count(x).sum(axis=2, dtype=np.int32)


def knn_predict(train_x: np.ndarray, train_y: np.ndarray, queries: np.ndarray,
                k: int, weighting: str = "uniform", chunk: int = 16) -> np.ndarray:
    """Predicted binary labels for query rows.

    Neighbor ties at equal distance resolve to the lowest training index;
    vote ties resolve to class 0.  "distance" weighting uses 1/d with an
    exact match outweighing everything.
    """
    if weighting not in ("uniform", "distance"):
        raise ValueError("weighting must be 'uniform' or 'distance'")
    if k < 1 or k > train_x.shape[0]:
        raise ValueError("k=%d out of range for %d training rows"
                         % (k, train_x.shape[0]))
    if train_x.shape[1] != queries.shape[1]:
        raise ValueError("feature width mismatch")
    tp = pack_rows(train_x)
    qp = pack_rows(queries)
    labels = train_y.astype(np.int64)
    out = np.empty(queries.shape[0], dtype=np.uint8)
    for lo in range(0, queries.shape[0], chunk):
        hi = min(lo + chunk, queries.shape[0])
        dists = hamming_distances(qp[lo:hi], tp)
        for r in range(hi - lo):
            d = dists[r]
            if k == d.shape[0]:
                nearest = np.lexsort((np.arange(d.shape[0]), d))[:k]
            else:
                part = np.argpartition(d, k - 1)[:k]
                kth = int(d[part].max())
                cand = np.flatnonzero(d <= kth)
                nearest = cand[np.lexsort((cand, d[cand]))][:k]
            nd = d[nearest].astype(np.float64)
            ny = labels[nearest]
            if weighting == "uniform":
                votes = np.bincount(ny, minlength=2).astype(np.float64)
            else:
                with np.errstate(divide="ignore"):
                    w = 1.0 / nd
                votes = np.bincount(ny, weights=w, minlength=2)
            out[lo + r] = 1 if votes[1] > votes[0] else 0
    return out


def knn_error(train_x, train_y, queries, query_y, k, weighting="uniform") -> float:
    pred = knn_predict(train_x, train_y, queries, k, weighting)
    return 100.0 * float((pred != query_y).mean())
