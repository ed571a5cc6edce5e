"""Structured MLP: a shared per-patch classifier feeding a binary head.

The first stage (P1NN) applies one dense relu network to each of the 64
patches of an image with shared weights, producing d_o outputs per
patch.  The 64 outputs are concatenated, standardized over the batch,
and a second dense network (P2NN) maps them to a single same/different
logit trained with binary cross-entropy.

Three training regimes:

* train_hints: P1NN is first fit to per-patch shape labels (11-way
  softmax), then frozen; P2NN is fit on its standardized softmax
  outputs.
* train_nohints: the whole stack is trained end to end from the binary
  signal only, gradients flowing through the batch standardization.
* train_hint_init: a short hinted phase provides the starting point for
  end-to-end training; with hint_epochs=0 it is exactly train_nohints.

Implementation note: in any batch of images at most 3 patches per image
are nonempty, and every empty patch is the same all-zero input.  The
per-patch network is therefore evaluated densely only on nonempty patch
rows while the shared empty-patch activation is computed once; forward
and backward results are identical to the plain dense evaluation (unit
tested), just much cheaper.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from . import nn
from .metrics import RunMetrics
from .nn import DenseParams
from .optim import apply_update, make_optimizer
from .rng import SplitMix64, derive_seed

N_PATCHES = 64
PATCH_PIXELS = 64

# derive_seed stream tags so the independent RNG consumers never collide
_S_SHUFFLE = 11
_S_EVAL = 12
_S_P1_SHUFFLE = 13
_S_P2_SHUFFLE = 14


class DivergenceError(RuntimeError):
    """Raised when a training loss stops being finite."""


@dataclass
class SMLPConfig:
    # architecture
    d_h: int = 512                          # P1NN hidden units
    d_o: int = 11                           # P1NN outputs per patch
    intermediate_activation: str = "sigmoid"
    p2nn_hidden: int = 1200
    # standardization
    standardize: bool = True
    eps_std: float = 1e-8
    std_scope: str = "batch"                # "batch" or "dataset"
    # end-to-end optimization
    optimizer: str = "adadelta"
    lr: float = 0.1
    rho: float | None = None
    eps_opt: float | None = None
    tau: float | None = None
    l1: float = 0.0
    l2: float = 0.0
    batch_size: int = 100
    epochs: int = 20
    # hinted phase 1 (patch classifier)
    p1_lr: float = 0.75
    p1_l1: float = 1e-6
    p1_l2: float = 1e-5
    p1_epochs: int = 1
    # hinted phase 2 (head on frozen features)
    p2_lr: float = 0.1
    p2_l1: float = 1e-6
    p2_l2: float = 1e-6
    p2_epochs: int = 25
    # hint-then-joint
    hint_epochs: int = 1
    # evaluation
    eval_batch: int = 100
    train_eval_limit: int = 8000
    seed: int = 1234

    def __post_init__(self):
        if self.std_scope not in ("batch", "dataset"):
            raise ValueError("std_scope must be 'batch' or 'dataset'")
        if self.intermediate_activation not in nn.ACTIVATIONS:
            raise ValueError("unknown intermediate activation %r"
                             % (self.intermediate_activation,))
        if self.d_o < 1 or self.d_h < 1 or self.p2nn_hidden < 1:
            raise ValueError("layer sizes must be >= 1")


@dataclass
class SMLPParams:
    p1_hidden: DenseParams  # 64 -> d_h
    p1_out: DenseParams     # d_h -> d_o
    p2_hidden: DenseParams  # 64*d_o -> p2nn_hidden
    p2_out: DenseParams     # p2nn_hidden -> 1

    def layers(self):
        return [self.p1_hidden, self.p1_out, self.p2_hidden, self.p2_out]

    def flat(self):
        out = []
        for l in self.layers():
            out += [l.weights, l.bias]
        return out

    def copy(self) -> "SMLPParams":
        return SMLPParams(*[l.copy() for l in self.layers()])


def init_params(config: SMLPConfig, rng: SplitMix64) -> SMLPParams:
    """Glorot initialization; draw order is fixed for reproducibility."""
    return SMLPParams(
        p1_hidden=nn.glorot_init(PATCH_PIXELS, config.d_h, rng),
        p1_out=nn.glorot_init(config.d_h, config.d_o, rng),
        p2_hidden=nn.glorot_init(N_PATCHES * config.d_o, config.p2nn_hidden, rng),
        p2_out=nn.glorot_init(config.p2nn_hidden, 1, rng),
    )


def extract_patches(images: np.ndarray) -> np.ndarray:
    """Rows of the 8x8 block grid: (..., 64, 64) -> (..., 64 patches, 64 px).

    Patch p covers image rows 8*(p//8).. and columns 8*(p%8)..; pixels are
    row-major within the patch.
    """
    single = images.ndim == 2
    if single:
        images = images[None]
    b = images.shape[0]
    out = images.reshape(b, 8, 8, 8, 8).transpose(0, 1, 3, 2, 4).reshape(b, 64, 64)
    return out[0] if single else out


# ---------------------------------------------------------------------------
# shared-weight patch network, sparse-aware


def p1nn_linear_forward(flat_patches: np.ndarray, p1_hidden: DenseParams,
                        p1_out: DenseParams):
    """Per-row logits a = V relu(U x + b) + c for (R, 64) patch rows.

    All-zero rows share one activation computation; results equal the
    dense row-by-row evaluation.
    """
    r = flat_patches.shape[0]
    nonempty = np.flatnonzero(flat_patches.any(axis=1))
    x_ne = flat_patches[nonempty].astype(np.float64)
    h_ne = np.maximum(x_ne @ p1_hidden.weights + p1_hidden.bias, 0.0)
    h_empty = np.maximum(p1_hidden.bias, 0.0)
    a_ne = h_ne @ p1_out.weights + p1_out.bias
    a_empty = h_empty @ p1_out.weights + p1_out.bias
    a = np.empty((r, p1_out.weights.shape[1]))
    a[:] = a_empty
    a[nonempty] = a_ne
    cache = (x_ne, nonempty, h_ne, h_empty, p1_hidden, p1_out)
    return a, cache


def p1nn_linear_backward(cache, da: np.ndarray):
    """Gradients (dU, db, dV, dc) for the shared patch network.

    Empty rows contribute through their summed upstream gradient applied
    at the shared activation point.
    """
    x_ne, nonempty, h_ne, h_empty, p1_hidden, p1_out = cache
    da_ne = da[nonempty]
    da_empty_sum = da.sum(axis=0) - da_ne.sum(axis=0)
    dv = h_ne.T @ da_ne + np.outer(h_empty, da_empty_sum)
    dc = da.sum(axis=0)
    dh_ne = da_ne @ p1_out.weights.T
    dh_empty = da_empty_sum @ p1_out.weights.T
    dz_ne = dh_ne * (h_ne > 0)
    dz_empty = dh_empty * (h_empty > 0)
    du = x_ne.T @ dz_ne
    db = dz_ne.sum(axis=0) + dz_empty
    return du, db, dv, dc


def p1nn_forward_dense(flat_patches: np.ndarray, p1_hidden: DenseParams,
                       p1_out: DenseParams) -> np.ndarray:
    """Reference dense evaluation of the patch network (tests, small runs)."""
    x = flat_patches.astype(np.float64)
    h = np.maximum(x @ p1_hidden.weights + p1_hidden.bias, 0.0)
    return h @ p1_out.weights + p1_out.bias


def p1nn_features(images: np.ndarray, params: SMLPParams, activation: str,
                  chunk: int = 1024) -> np.ndarray:
    """Concatenated per-patch activations for a stack of images."""
    n = images.shape[0]
    d_o = params.p1_out.weights.shape[1]
    feats = np.empty((n, N_PATCHES * d_o))
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        flat = extract_patches(images[lo:hi]).reshape(-1, PATCH_PIXELS)
        a, _ = p1nn_linear_forward(flat, params.p1_hidden, params.p1_out)
        o, _ = nn.activation_forward(a, activation)
        feats[lo:hi] = o.reshape(hi - lo, -1)
    return feats


# ---------------------------------------------------------------------------
# full model


def smlp_forward(images: np.ndarray, params: SMLPParams, config: SMLPConfig):
    """(probs, logits, cache) for a batch of uint8 images.

    Batch standardization, when enabled, uses this batch's statistics.
    """
    b = images.shape[0]
    flat = extract_patches(images).reshape(b * N_PATCHES, PATCH_PIXELS)
    a, c_p1 = p1nn_linear_forward(flat, params.p1_hidden, params.p1_out)
    o, c_act = nn.activation_forward(a, config.intermediate_activation)
    feats = o.reshape(b, -1)
    if config.standardize:
        z, c_std = nn.standardize_forward(feats, config.eps_std)
    else:
        z, c_std = feats, None
    h2, c_h2 = nn.affine_forward(z, params.p2_hidden)
    r2, c_r2 = nn.activation_forward(h2, "relu")
    out, c_out = nn.affine_forward(r2, params.p2_out)
    logits = out[:, 0]
    probs = nn.sigmoid(logits)
    cache = (c_p1, c_act, c_std, c_h2, c_r2, c_out, b)
    return probs, logits, cache


def smlp_loss_and_grads(images: np.ndarray, targets: np.ndarray,
                        params: SMLPParams, config: SMLPConfig):
    """(total_loss, data_loss, grads) with grads parallel to params.flat()."""
    _, logits, cache = smlp_forward(images, params, config)
    c_p1, c_act, c_std, c_h2, c_r2, c_out, b = cache
    data_loss, _, c_bce = nn.sigmoid_bce_forward(logits, targets)
    dlogits = nn.sigmoid_bce_backward(c_bce)
    dr2, dw3, db3 = nn.affine_backward(c_out, dlogits[:, None])
    dh2 = nn.activation_backward(c_r2, dr2)
    dz, dw2, db2 = nn.affine_backward(c_h2, dh2)
    if config.standardize:
        dfeats = nn.standardize_backward(c_std, dz)
    else:
        dfeats = dz
    da = nn.activation_backward(c_act, dfeats.reshape(b * N_PATCHES, -1))
    du, db1, dv, dc1 = p1nn_linear_backward(c_p1, da)

    nn.add_l1_l2_grad(params.p1_hidden, config.l1, config.l2, du)
    nn.add_l1_l2_grad(params.p1_out, config.l1, config.l2, dv)
    nn.add_l1_l2_grad(params.p2_hidden, config.l1, config.l2, dw2)
    nn.add_l1_l2_grad(params.p2_out, config.l1, config.l2, dw3)
    total = data_loss + nn.l1_l2_penalty(params.layers(), config.l1, config.l2)
    return total, data_loss, [du, db1, dv, dc1, dw2, db2, dw3, db3]


def _p2_forward(z: np.ndarray, params: SMLPParams):
    h2, c_h2 = nn.affine_forward(z, params.p2_hidden)
    r2, c_r2 = nn.activation_forward(h2, "relu")
    out, c_out = nn.affine_forward(r2, params.p2_out)
    return out[:, 0], (c_h2, c_r2, c_out)


def evaluate(params: SMLPParams, images: np.ndarray, targets: np.ndarray,
             config: SMLPConfig):
    """(error_pct, mean_bce_loss) on a labeled image set.

    std_scope "batch" standardizes each eval_batch independently (the
    deployment mode of end-to-end training); "dataset" standardizes over
    the whole set (the hinted pipeline's convention).
    """
    n = images.shape[0]
    if n == 0:
        raise ValueError("cannot evaluate on an empty set")
    targets = np.asarray(targets, dtype=np.float64)
    loss_sum = 0.0
    correct = 0
    if config.standardize and config.std_scope == "dataset":
        feats = p1nn_features(images, params, config.intermediate_activation)
        z_all, _ = nn.standardize_forward(feats, config.eps_std)
        for lo in range(0, n, 1024):
            hi = min(lo + 1024, n)
            logits, _ = _p2_forward(z_all[lo:hi], params)
            loss, probs, _ = nn.sigmoid_bce_forward(logits, targets[lo:hi])
            loss_sum += loss * (hi - lo)
            correct += int(((probs >= 0.5) == (targets[lo:hi] == 1.0)).sum())
    else:
        step = config.eval_batch
        for lo in range(0, n, step):
            hi = min(lo + step, n)
            probs, logits, _ = smlp_forward(images[lo:hi], params, config)
            loss, _, _ = nn.sigmoid_bce_forward(logits, targets[lo:hi])
            loss_sum += loss * (hi - lo)
            correct += int(((probs >= 0.5) == (targets[lo:hi] == 1.0)).sum())
    error_pct = 100.0 * (1.0 - correct / n)
    return error_pct, loss_sum / n


def patch_accuracy(params: SMLPParams, images: np.ndarray,
                   patch_labels: np.ndarray, chunk: int = 2048):
    """(accuracy_pct, mean_nll) of the patch classifier over all patches."""
    n = images.shape[0]
    correct = 0
    loss_sum = 0.0
    total = 0
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        flat = extract_patches(images[lo:hi]).reshape(-1, PATCH_PIXELS)
        labels = patch_labels[lo:hi].reshape(-1)
        a, _ = p1nn_linear_forward(flat, params.p1_hidden, params.p1_out)
        loss, probs, _ = nn.softmax_nll_forward(a, labels)
        correct += int((probs.argmax(axis=1) == labels).sum())
        loss_sum += loss * len(labels)
        total += len(labels)
    return 100.0 * correct / total, loss_sum / total


def dump_intermediate(params: SMLPParams, images: np.ndarray,
                      config: SMLPConfig):
    """(raw, standardized) concatenated patch features for a batch."""
    feats = p1nn_features(images, params, config.intermediate_activation)
    z, _ = nn.standardize_forward(feats, config.eps_std)
    return feats, z


# ---------------------------------------------------------------------------
# training loops


def _eval_indices(config: SMLPConfig, n: int) -> np.ndarray:
    """Fixed subsample of train indices used for per-epoch train error."""
    if n <= config.train_eval_limit:
        return np.arange(n)
    r = SplitMix64(derive_seed(config.seed, _S_EVAL))
    return np.sort(r.sample_without_replacement(n, config.train_eval_limit))


def _record_task_rows(metrics, epoch, params, config, train_images, train_targets,
                      eval_idx, test_images, test_targets, t0, full_train=False):
    if full_train:
        tr_err, tr_loss = evaluate(params, train_images, train_targets, config)
    else:
        tr_err, tr_loss = evaluate(params, train_images[eval_idx],
                                   train_targets[eval_idx], config)
    te_err, te_loss = evaluate(params, test_images, test_targets, config)
    wall = time.perf_counter() - t0
    metrics.append(epoch, "train", tr_err, tr_loss, wallclock_s=wall)
    metrics.append(epoch, "test", te_err, te_loss, wallclock_s=wall)
    return te_err


def train_nohints(train_ds, test_ds, config: SMLPConfig,
                  initial: SMLPParams | None = None, start_epoch: int = 0,
                  metrics: RunMetrics | None = None):
    """End-to-end training from the binary signal only.

    Returns (params, metrics).  Rows: epoch start_epoch is the state
    before any update here, then one train/test pair per epoch.
    """
    t0 = time.perf_counter()
    rng = SplitMix64(config.seed)
    params = initial if initial is not None else init_params(config, rng)
    flat = params.flat()
    opt = make_optimizer(config.optimizer, [p.shape for p in flat], config.lr,
                         rho=config.rho, eps_opt=config.eps_opt, tau=config.tau)
    shuffle_rng = SplitMix64(derive_seed(config.seed, _S_SHUFFLE))
    n = len(train_ds)
    eval_idx = _eval_indices(config, n)
    metrics = metrics if metrics is not None else RunMetrics()
    targets = train_ds.targets.astype(np.float64)

    _record_task_rows(metrics, start_epoch, params, config, train_ds.images,
                      train_ds.targets, eval_idx, test_ds.images, test_ds.targets, t0)
    for epoch in range(1, config.epochs + 1):
        perm = shuffle_rng.permutation(n)
        for lo in range(0, n, config.batch_size):
            idx = perm[lo:lo + config.batch_size]
            total, _, grads = smlp_loss_and_grads(train_ds.images[idx],
                                                  targets[idx], params, config)
            if not np.isfinite(total):
                raise DivergenceError("non-finite loss at epoch %d batch %d"
                                      % (start_epoch + epoch, lo // config.batch_size))
            apply_update(flat, grads, opt)
        _record_task_rows(metrics, start_epoch + epoch, params, config,
                          train_ds.images, train_ds.targets, eval_idx,
                          test_ds.images, test_ds.targets, t0,
                          full_train=(epoch == config.epochs))
    return params, metrics


def train_hints(train_ds, test_ds, config: SMLPConfig):
    """Two-phase hinted training; P1NN is frozen during phase 2.

    Phase-1 rows carry patch accuracy; their error_pct is the patch
    classification error.  Phase-2 rows carry the binary task error.
    Epoch numbers run contiguously over both phases.

    Returns (params, metrics).
    """
    t0 = time.perf_counter()
    params = init_params(config, SplitMix64(config.seed))
    metrics = RunMetrics()
    n = len(train_ds)

    # phase 1: shared patch classifier on shape labels
    p1_flat = [params.p1_hidden.weights, params.p1_hidden.bias,
               params.p1_out.weights, params.p1_out.bias]
    opt1 = make_optimizer("sgd", [p.shape for p in p1_flat], config.p1_lr)
    shuffle1 = SplitMix64(derive_seed(config.seed, _S_P1_SHUFFLE))

    # epoch 0: the untrained patch classifier
    acc0, nll0 = patch_accuracy(params, train_ds.images, train_ds.patch_labels)
    acc0_t, nll0_t = patch_accuracy(params, test_ds.images, test_ds.patch_labels)
    wall0 = time.perf_counter() - t0
    metrics.append(0, "train", 100.0 - acc0, nll0, patch_acc_pct=acc0,
                   wallclock_s=wall0)
    metrics.append(0, "test", 100.0 - acc0_t, nll0_t, patch_acc_pct=acc0_t,
                   wallclock_s=wall0)

    patches = extract_patches(train_ds.images).reshape(-1, PATCH_PIXELS)
    patch_labels = train_ds.patch_labels.reshape(-1)
    n_patches = patches.shape[0]
    for epoch in range(1, config.p1_epochs + 1):
        perm = shuffle1.permutation(n_patches)
        for lo in range(0, n_patches, config.batch_size):
            idx = perm[lo:lo + config.batch_size]
            a, c_p1 = p1nn_linear_forward(patches[idx], params.p1_hidden,
                                          params.p1_out)
            loss, _, c_nll = nn.softmax_nll_forward(a, patch_labels[idx])
            if not np.isfinite(loss):
                raise DivergenceError("non-finite patch loss at epoch %d" % epoch)
            da = nn.softmax_nll_backward(c_nll)
            du, db1, dv, dc1 = p1nn_linear_backward(c_p1, da)
            nn.add_l1_l2_grad(params.p1_hidden, config.p1_l1, config.p1_l2, du)
            nn.add_l1_l2_grad(params.p1_out, config.p1_l1, config.p1_l2, dv)
            apply_update(p1_flat, [du, db1, dv, dc1], opt1)
        acc, nll = patch_accuracy(params, train_ds.images, train_ds.patch_labels)
        wall = time.perf_counter() - t0
        metrics.append(epoch, "train", 100.0 - acc, nll, patch_acc_pct=acc,
                       wallclock_s=wall)
        acc_t, nll_t = patch_accuracy(params, test_ds.images, test_ds.patch_labels)
        metrics.append(epoch, "test", 100.0 - acc_t, nll_t, patch_acc_pct=acc_t,
                       wallclock_s=wall)
    del patches, patch_labels

    # phase 2: binary head on frozen, whole-set standardized softmax outputs
    feats_train = p1nn_features(train_ds.images, params, "softmax")
    z_train, _ = nn.standardize_forward(feats_train, 0.0)
    del feats_train
    feats_test = p1nn_features(test_ds.images, params, "softmax")
    z_test, _ = nn.standardize_forward(feats_test, 0.0)
    del feats_test

    p1_frozen = (params.p1_hidden.weights.copy(), params.p1_out.weights.copy())
    p2_flat = [params.p2_hidden.weights, params.p2_hidden.bias,
               params.p2_out.weights, params.p2_out.bias]
    opt2 = make_optimizer("sgd", [p.shape for p in p2_flat], config.p2_lr)
    shuffle2 = SplitMix64(derive_seed(config.seed, _S_P2_SHUFFLE))
    eval_idx = _eval_indices(config, n)
    targets = train_ds.targets.astype(np.float64)
    test_targets = test_ds.targets.astype(np.float64)

    def head_metrics(z, t, idx=None):
        if idx is not None:
            z, t = z[idx], t[idx]
        loss_sum, correct = 0.0, 0
        for lo in range(0, len(z), 1024):
            hi = min(lo + 1024, len(z))
            logits, _ = _p2_forward(z[lo:hi], params)
            loss, probs, _ = nn.sigmoid_bce_forward(logits, t[lo:hi])
            loss_sum += loss * (hi - lo)
            correct += int(((probs >= 0.5) == (t[lo:hi] == 1.0)).sum())
        return 100.0 * (1.0 - correct / len(z)), loss_sum / len(z)

    for epoch in range(1, config.p2_epochs + 1):
        perm = shuffle2.permutation(n)
        for lo in range(0, n, config.batch_size):
            idx = perm[lo:lo + config.batch_size]
            logits, (c_h2, c_r2, c_out) = _p2_forward(z_train[idx], params)
            loss, _, c_bce = nn.sigmoid_bce_forward(logits, targets[idx])
            if not np.isfinite(loss):
                raise DivergenceError("non-finite head loss at epoch %d" % epoch)
            dr2, dw3, db3 = nn.affine_backward(c_out,
                                               nn.sigmoid_bce_backward(c_bce)[:, None])
            dh2 = nn.activation_backward(c_r2, dr2)
            _, dw2, db2 = nn.affine_backward(c_h2, dh2)
            nn.add_l1_l2_grad(params.p2_hidden, config.p2_l1, config.p2_l2, dw2)
            nn.add_l1_l2_grad(params.p2_out, config.p2_l1, config.p2_l2, dw3)
            apply_update(p2_flat, [dw2, db2, dw3, db3], opt2)
        ep = config.p1_epochs + epoch
        last = epoch == config.p2_epochs
        tr_err, tr_loss = head_metrics(z_train, targets,
                                       None if last else eval_idx)
        te_err, te_loss = head_metrics(z_test, test_targets)
        wall = time.perf_counter() - t0
        metrics.append(ep, "train", tr_err, tr_loss, wallclock_s=wall)
        metrics.append(ep, "test", te_err, te_loss, wallclock_s=wall)

    assert params.p1_hidden.weights.tobytes() == p1_frozen[0].tobytes()
    assert params.p1_out.weights.tobytes() == p1_frozen[1].tobytes()
    return params, metrics


def hints_eval_config(config: SMLPConfig) -> SMLPConfig:
    """Evaluation convention of the hinted pipeline: softmax intermediate,
    whole-set standardization with eps 0."""
    return replace(config, intermediate_activation="softmax", eps_std=0.0,
                   standardize=True, std_scope="dataset")


def train_hint_init(train_ds, test_ds, config: SMLPConfig,
                    metrics: RunMetrics | None = None):
    """hint_epochs of hinted training, then end-to-end training.

    Epoch 0 rows are the state right after the hinted phase (or the
    random initialization when hint_epochs is 0); epochs 1.. are joint.
    Returns (params, metrics).
    """
    if config.hint_epochs == 0:
        return train_nohints(train_ds, test_ds, config, metrics=metrics)
    hint_cfg = replace(config, p1_epochs=config.hint_epochs,
                       p2_epochs=config.hint_epochs)
    params, _ = train_hints(train_ds, test_ds, hint_cfg)
    return train_nohints(train_ds, test_ds, config, initial=params,
                         metrics=metrics)
