from dataclasses import replace

import numpy as np
import pytest
import scipy.sparse as sp

from pentolab import baselines, datagen, nn
from pentolab.baselines import (
    MLPConfig,
    flatten_images,
    hamming_distances,
    knn_predict,
    mlp_init,
    mlp_predict,
    mlp_train,
    pack_rows,
)
from pentolab.rng import SplitMix64


def random_bits(rng, n, d, density=0.1):
    return (rng.random_array(n * d).reshape(n, d) < density).astype(np.uint8)


# --- MLP ---

def test_mlp_sparse_and_dense_paths_agree():
    rng = SplitMix64(1)
    x = random_bits(rng, 12, 30)
    y = (rng.random_array(12) > 0.5).astype(np.float64)
    cfg = MLPConfig(hidden=(9, 7), l1=1e-3, l2=1e-3, seed=3)
    layers = mlp_init(cfg, 30, SplitMix64(5))
    xs = sp.csr_matrix(x, dtype=np.float64)
    t_sp, d_sp, g_sp = baselines._mlp_loss_and_grads(xs, y, layers, cfg)
    t_de, d_de, g_de = baselines._mlp_loss_and_grads(x.astype(np.float64), y,
                                                     layers, cfg)
    assert t_sp == pytest.approx(t_de, abs=1e-12)
    for a, b in zip(g_sp, g_de):
        assert np.max(np.abs(np.asarray(a) - np.asarray(b))) < 1e-12


def test_mlp_gradient_check():
    rng = SplitMix64(2)
    x = random_bits(rng, 8, 12, density=0.3)
    y = (rng.random_array(8) > 0.5).astype(np.float64)
    cfg = MLPConfig(hidden=(6, 5), l1=1e-3, l2=1e-3)
    layers = mlp_init(cfg, 12, SplitMix64(7))
    r = SplitMix64(99)
    flat = []
    for l in layers:
        l.weights += r.uniform_array(l.weights.shape, -0.05, 0.05)
        l.bias += r.uniform_array(l.bias.shape, -0.05, 0.05)
        flat += [l.weights, l.bias]

    def lag():
        total, _, grads = baselines._mlp_loss_and_grads(x.astype(np.float64), y,
                                                        layers, cfg)
        return total, grads

    assert nn.gradient_check(lag, flat, max_entries=8) < 1e-5


def test_mlp_learns_separable_toy():
    rng = SplitMix64(9)
    x = random_bits(rng, 400, 16, density=0.5)
    y = x[:, 0].astype(np.uint8)
    cfg = MLPConfig(hidden=(16,), lr=0.5, l1=0.0, l2=0.0, batch_size=40,
                    epochs=15, seed=4)
    layers, metrics = mlp_train(x[:300], y[:300], x[300:], y[300:], cfg)
    assert metrics.last("test").error_pct <= 5.0
    probs = mlp_predict(layers, "tanh", x[300:].astype(np.float64))
    err = 100.0 * float(((probs >= 0.5) != (y[300:] == 1)).mean())
    assert err == pytest.approx(metrics.last("test").error_pct, abs=1e-9)


def test_mlp_train_deterministic():
    rng = SplitMix64(11)
    x = random_bits(rng, 60, 20)
    y = (rng.random_array(60) > 0.5).astype(np.uint8)
    cfg = MLPConfig(hidden=(8,), epochs=2, batch_size=20, seed=5)
    a, ma = mlp_train(x[:40], y[:40], x[40:], y[40:], cfg)
    b, mb = mlp_train(x[:40], y[:40], x[40:], y[40:], cfg)
    for la, lb in zip(a, b):
        assert la.weights.tobytes() == lb.weights.tobytes()
    assert [(r.epoch, r.error_pct) for r in ma.rows] \
        == [(r.epoch, r.error_pct) for r in mb.rows]
    assert [r.epoch for r in ma.rows if r.split == "test"] == [0, 1, 2]


def test_mlp_config_validation():
    with pytest.raises(ValueError):
        MLPConfig(activation="softmax")
    with pytest.raises(ValueError):
        MLPConfig(hidden=())
    with pytest.raises(ValueError):
        MLPConfig(input_scale=0.0)


def test_mlp_input_scale_equals_prescaled_features():
    rng = SplitMix64(13)
    x = random_bits(rng, 50, 12)
    y = (rng.random_array(50) > 0.5).astype(np.uint8)
    cfg = MLPConfig(hidden=(6,), epochs=2, batch_size=10, seed=3)
    _, direct = mlp_train(x[:30] * 8, y[:30], x[30:] * 8, y[30:], cfg)
    _, scaled = mlp_train(x[:30], y[:30], x[30:], y[30:],
                          replace(cfg, input_scale=8.0))
    assert [(r.error_pct, r.mean_loss) for r in direct.rows] \
        == [(r.error_pct, r.mean_loss) for r in scaled.rows]


def test_mlp_width_mismatch():
    with pytest.raises(ValueError):
        mlp_train(np.zeros((4, 5), dtype=np.uint8), np.zeros(4),
                  np.zeros((4, 6), dtype=np.uint8), np.zeros(4), MLPConfig())


# --- k-NN ---

def test_pack_rows_round_trip():
    rng = SplitMix64(21)
    x = random_bits(rng, 10, 100, density=0.4)
    packed = pack_rows(x)
    assert packed.dtype == np.uint64
    back = np.unpackbits(packed.view(np.uint8), axis=1)[:, :100]
    assert np.array_equal(back, x)


def test_hamming_matches_naive():
    rng = SplitMix64(22)
    a = random_bits(rng, 15, 130, density=0.3)
    b = random_bits(rng, 12, 130, density=0.3)
    d = hamming_distances(pack_rows(a), pack_rows(b))
    naive = np.array([[int((ra != rb).sum()) for rb in b] for ra in a])
    assert np.array_equal(d, naive)
    # on binary vectors the Hamming distance equals squared Euclidean
    euclid2 = np.array([[int(((ra.astype(int) - rb.astype(int)) ** 2).sum())
                         for rb in b] for ra in a])
    assert np.array_equal(d, euclid2)


def test_knn_self_query_zero_error():
    rng = SplitMix64(23)
    x = random_bits(rng, 50, 64, density=0.2)
    # drop duplicate rows so the nearest neighbor of each row is itself
    _, uniq = np.unique(x, axis=0, return_index=True)
    x = x[np.sort(uniq)]
    y = (rng.random_array(len(x)) > 0.5).astype(np.uint8)
    pred = knn_predict(x, y, x, k=1)
    assert np.array_equal(pred, y)


def test_knn_distance_tie_takes_lowest_index():
    train = np.array([[1, 1, 0, 0], [0, 0, 1, 1]], dtype=np.uint8)
    labels = np.array([1, 0], dtype=np.uint8)
    query = np.array([[1, 0, 1, 0]], dtype=np.uint8)  # distance 2 to both
    assert knn_predict(train, labels, query, k=1)[0] == 1
    assert knn_predict(train, labels[::-1].copy(), query, k=1)[0] == 0


def test_knn_vote_tie_goes_to_class_0():
    train = np.array([[1, 1, 0, 0], [0, 0, 1, 1]], dtype=np.uint8)
    labels = np.array([1, 0], dtype=np.uint8)
    query = np.array([[1, 0, 1, 0]], dtype=np.uint8)
    assert knn_predict(train, labels, query, k=2)[0] == 0


def test_knn_distance_weighting_exact_match_dominates():
    train = np.array([[1, 1, 1, 1], [1, 1, 1, 0], [1, 1, 0, 0]], dtype=np.uint8)
    labels = np.array([1, 1, 0], dtype=np.uint8)
    query = np.array([[1, 1, 0, 0]], dtype=np.uint8)
    assert knn_predict(train, labels, query, k=3, weighting="distance")[0] == 0
    assert knn_predict(train, labels, query, k=3, weighting="uniform")[0] == 1


def test_knn_matches_bruteforce_reference():
    rng = SplitMix64(24)
    train = random_bits(rng, 40, 32, density=0.3)
    labels = (rng.random_array(40) > 0.5).astype(np.uint8)
    queries = random_bits(rng, 25, 32, density=0.3)
    for k in (1, 2, 5):
        pred = knn_predict(train, labels, queries, k=k)
        for qi in range(len(queries)):
            d = np.array([int((queries[qi] != t).sum()) for t in train])
            order = sorted(range(40), key=lambda i: (d[i], i))[:k]
            votes = np.bincount(labels[order], minlength=2)
            expect = 1 if votes[1] > votes[0] else 0
            assert pred[qi] == expect, (k, qi)


def test_knn_chunking_invariant():
    rng = SplitMix64(25)
    train = random_bits(rng, 30, 64)
    labels = (rng.random_array(30) > 0.5).astype(np.uint8)
    queries = random_bits(rng, 33, 64)
    a = knn_predict(train, labels, queries, k=3, chunk=4)
    b = knn_predict(train, labels, queries, k=3, chunk=33)
    assert np.array_equal(a, b)


def test_knn_validation_errors():
    x = np.zeros((5, 8), dtype=np.uint8)
    y = np.zeros(5, dtype=np.uint8)
    with pytest.raises(ValueError):
        knn_predict(x, y, x, k=6)
    with pytest.raises(ValueError):
        knn_predict(x, y, x, k=0)
    with pytest.raises(ValueError):
        knn_predict(x, y, np.zeros((2, 9), dtype=np.uint8), k=1)
    with pytest.raises(ValueError):
        knn_predict(x, y, x, k=1, weighting="gaussian")


def test_flatten_images_shape():
    ds = datagen.generate_dataset(4, 1)
    flat = flatten_images(ds)
    assert flat.shape == (4, 4096)
    assert np.array_equal(flat[0].reshape(64, 64), ds.images[0])
