import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pentolab import datagen
from pentolab.datagen import (
    encode_exp1,
    encode_exp2,
    encode_exp3,
    exp3_code_index,
    generate_dataset,
    generate_exp4_dataset,
    sample_example,
    sample_exp4,
)
from pentolab.rng import derive_seed
from pentolab.sprites import canonical_mask

seeds = st.integers(min_value=0, max_value=2**64 - 1)


# Regression pins: sprite draws for fixed seeds, frozen from the initial
# implementation so silent sampler changes are caught.
GOLDEN = {
    derive_seed(2024, 0): ([[2, 2, 2, 59], [7, 2, 2, 63], [1, 3, 2, 42]], 0),
    derive_seed(2024, 1): ([[1, 1, 1, 55], [1, 3, 2, 12], [1, 0, 1, 44]], 1),
    123456789: ([[7, 1, 2, 43], [7, 3, 1, 17], [7, 2, 1, 29]], 1),
}


def test_golden_examples():
    for seed, (sprites, z) in GOLDEN.items():
        ex = sample_example(seed)
        assert ex.sprites.tolist() == sprites
        assert ex.z == z


@given(seeds)
@settings(max_examples=200)
def test_example_structure(seed):
    ex = sample_example(seed)
    assert ex.image.shape == (64, 64) and ex.image.dtype == np.uint8
    assert set(np.unique(ex.image)) <= {0, 1}
    shapes = ex.sprites[:, 0]
    blocks = ex.sprites[:, 3]
    assert len(set(blocks.tolist())) == 3
    assert all(1 <= s <= 10 for s in shapes)
    assert all(r <= 3 for r in ex.sprites[:, 1])
    assert all(a in (1, 2) for a in ex.sprites[:, 2])
    if ex.z == 1:
        assert shapes[0] == shapes[1] == shapes[2]
    else:
        assert len(set(shapes.tolist())) == 3
    # patch labels agree with metadata
    lab = np.zeros(64, dtype=np.uint8)
    lab[blocks] = shapes
    assert np.array_equal(lab, ex.patch_labels)
    # pixel count
    alphas = ex.sprites[:, 2].astype(int)
    assert ex.image.sum() == (5 * alphas * alphas).sum()


@given(seeds)
@settings(max_examples=100)
def test_sprites_stay_inside_their_blocks(seed):
    ex = sample_example(seed)
    patches = ex.image.reshape(8, 8, 8, 8).transpose(0, 2, 1, 3).reshape(64, 8, 8)
    occupied = set(ex.sprites[:, 3].tolist())
    for p in range(64):
        if p in occupied:
            assert patches[p].any()
        else:
            assert not patches[p].any()


def test_render_against_independent_cell_arithmetic():
    # oracle: place cells by explicit coordinate arithmetic, using the raw
    # cell lists and the CCW rule (r, c) -> (w - 1 - c, r), without going
    # through render_sprites
    for seed in [5, 99, 123456789, derive_seed(2024, 0)]:
        ex = sample_example(seed)
        img = np.zeros((64, 64), dtype=np.uint8)
        for shape, rot, alpha, block in ex.sprites.astype(int):
            cells = {(r, c) for r, c in zip(*np.nonzero(canonical_mask(shape)))}
            w = max(c for _, c in cells) + 1
            for _ in range(rot):
                cells = {(w - 1 - c, r) for r, c in cells}
                w = max(c for _, c in cells) + 1
            h = max(r for r, _ in cells) + 1
            scaled = {(alpha * r + dr, alpha * c + dc)
                      for r, c in cells for dr in range(alpha) for dc in range(alpha)}
            hh, ww = alpha * h, alpha * w
            r0 = (block // 8) * 8 + (8 - hh) // 2
            c0 = (block % 8) * 8 + (8 - ww) // 2
            for r, c in scaled:
                img[r0 + r, c0 + c] = 1
        assert np.array_equal(img, ex.image)


def test_generate_dataset_deterministic_and_indexed():
    ds = generate_dataset(50, 31337)
    ds2 = generate_dataset(50, 31337)
    assert np.array_equal(ds.images, ds2.images)
    assert np.array_equal(ds.sprites, ds2.sprites)
    # example i is independently regenerable from its derived seed
    ex = sample_example(derive_seed(31337, 17))
    assert np.array_equal(ex.image, ds.images[17])
    assert ex.z == ds.targets[17]
    # start_index shifts the stream
    tail = generate_dataset(10, 31337, start_index=40)
    assert np.array_equal(tail.images, ds.images[40:])


def test_generate_dataset_seed_changes_content():
    a = generate_dataset(20, 1)
    b = generate_dataset(20, 2)
    assert not np.array_equal(a.images, b.images)


def test_generate_dataset_rejects_nonpositive():
    with pytest.raises(ValueError):
        generate_dataset(0, 5)


def test_class_balance_10k():
    ds = generate_dataset(10000, 2024)
    assert abs(float(ds.targets.mean()) - 0.5) <= 0.02


# --- symbolic encodings ---


@given(seeds)
@settings(max_examples=100)
def test_exp1_one_hot_shape(seed):
    ex = sample_example(seed)
    sym = encode_exp1(ex)
    assert sym.codes.shape == (64, 10)
    assert sym.target == ex.z
    sums = sym.codes.sum(axis=1)
    occ = ex.sprites[:, 3]
    assert sums.sum() == 3
    for shape, _, _, block in ex.sprites.astype(int):
        assert sym.codes[block, shape - 1] == 1
        assert sums[block] == 1
    assert (sums[np.setdiff1d(np.arange(64), occ)] == 0).all()


@given(seeds)
@settings(max_examples=100)
def test_exp2_factored_one_hots(seed):
    ex = sample_example(seed)
    sym = encode_exp2(ex)
    assert sym.codes.shape == (64, 16)
    for shape, rot, alpha, block in ex.sprites.astype(int):
        row = sym.codes[block]
        assert row.sum() == 3
        assert row[shape - 1] == 1
        assert row[10 + rot] == 1
        assert row[14 + alpha - 1] == 1


@given(seeds)
@settings(max_examples=100)
def test_exp3_entangled_code(seed):
    ex = sample_example(seed)
    sym = encode_exp3(ex)
    assert sym.codes.shape == (64, 80)
    for shape, rot, alpha, block in ex.sprites.astype(int):
        row = sym.codes[block]
        assert row.sum() == 1
        idx = int(np.nonzero(row)[0][0])
        assert idx == exp3_code_index(shape, rot, alpha)
        # the index decodes back to the factors
        assert (idx // 8 + 1, (idx % 8) // 2, idx % 2 + 1) == (shape, rot, alpha)


def test_exp3_code_index_bijective():
    seen = {exp3_code_index(s, r, a)
            for s in range(1, 11) for r in range(4) for a in (1, 2)}
    assert seen == set(range(80))


@given(seeds)
@settings(max_examples=150)
def test_exp4_target_semantics(seed):
    ex = sample_exp4(seed)
    occ = np.nonzero(ex.codes.sum(axis=1))[0]
    assert len(occ) == 3
    rows = [tuple(ex.codes[p].tolist()) for p in occ]
    assert all(sum(r) == 1 for r in rows)
    if ex.target == 1:
        assert len(set(rows)) == 1
    else:
        assert len(set(rows)) > 1


def test_exp4_balance():
    ds = generate_exp4_dataset(5000, 77)
    assert abs(float(ds.targets.mean()) - 0.5) <= 0.03


def test_encode_dataset_matches_per_example():
    ds = generate_dataset(20, 404)
    sym = datagen.encode_dataset(ds, "exp2")
    assert sym.k == 16
    for i in range(20):
        assert np.array_equal(sym.codes[i], encode_exp2(ds.example(i)).codes)
    with pytest.raises(ValueError):
        datagen.encode_dataset(ds, "exp9")
