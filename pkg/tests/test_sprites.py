import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pentolab import sprites
from pentolab.sprites import Shape, canonical_mask, mirror, rotate, scale, sprite_mask

shapes = st.sampled_from(list(Shape))
rotations = st.integers(0, 3)
scales = st.sampled_from([1, 2])


def cells_of(mask):
    return {(int(r), int(c)) for r, c in zip(*np.nonzero(mask))}


def test_catalog_has_ten_shapes_with_indices_1_to_10():
    assert [s.value for s in Shape] == list(range(1, 11))
    assert [s.name for s in Shape] == ["L", "N", "P", "F", "Y", "J", "N2", "Q", "F2", "Y2"]


def test_canonical_cells_match_definitions():
    assert cells_of(canonical_mask(Shape.L)) == {(0, 0), (1, 0), (2, 0), (3, 0), (3, 1)}
    assert cells_of(canonical_mask(Shape.N)) == {(0, 0), (1, 0), (1, 1), (2, 1), (3, 1)}
    assert cells_of(canonical_mask(Shape.P)) == {(0, 0), (0, 1), (1, 0), (1, 1), (2, 0)}
    assert cells_of(canonical_mask(Shape.F)) == {(0, 1), (0, 2), (1, 0), (1, 1), (2, 1)}
    assert cells_of(canonical_mask(Shape.Y)) == {(0, 1), (1, 0), (1, 1), (2, 1), (3, 1)}


@given(shapes)
def test_canonical_mask_five_cells_tight_bbox(shape):
    m = canonical_mask(shape)
    assert m.sum() == 5
    assert m.dtype == np.uint8
    assert m.shape[0] <= 4 and m.shape[1] <= 4
    assert m[0, :].any() and m[:, 0].any() and m[-1, :].any() and m[:, -1].any()


def test_shapes_6_to_10_are_mirrors_of_1_to_5():
    for hi, lo in [(Shape.J, Shape.L), (Shape.N2, Shape.N), (Shape.Q, Shape.P),
                   (Shape.F2, Shape.F), (Shape.Y2, Shape.Y)]:
        assert np.array_equal(canonical_mask(hi), mirror(canonical_mask(lo)))


def test_rotate_quarter_turn_brute_force():
    # oracle: CCW quarter turn maps cell (r, c) of an HxW mask to
    # (W - 1 - c, r)
    for shape in Shape:
        m = canonical_mask(shape)
        h, w = m.shape
        expect = {(w - 1 - c, r) for r, c in cells_of(m)}
        assert cells_of(rotate(m, 1)) == expect


@given(shapes, rotations)
def test_rotate_four_times_is_identity(shape, k):
    m = canonical_mask(shape)
    out = m
    for _ in range(4):
        out = rotate(out, 1)
    assert np.array_equal(out, m)
    # single call with k turns equals k single turns
    step = m
    for _ in range(k):
        step = rotate(step, 1)
    assert np.array_equal(rotate(m, k), step)


def test_rotate_rejects_bad_turns():
    with pytest.raises(ValueError):
        rotate(canonical_mask(Shape.L), 4)
    with pytest.raises(ValueError):
        rotate(canonical_mask(Shape.L), -1)


@given(shapes)
def test_scale_2_block_replication(shape):
    m = canonical_mask(shape)
    s = scale(m, 2)
    assert s.shape == (2 * m.shape[0], 2 * m.shape[1])
    assert s.sum() == 4 * m.sum()
    # every cell expands to a full 2x2 block
    blocks = s.reshape(m.shape[0], 2, m.shape[1], 2).transpose(0, 2, 1, 3)
    for r in range(m.shape[0]):
        for c in range(m.shape[1]):
            assert blocks[r, c].min() == blocks[r, c].max() == m[r, c]


def test_scale_rejects_bad_alpha():
    with pytest.raises(ValueError):
        scale(canonical_mask(Shape.L), 3)


@given(shapes, rotations, scales)
def test_sprite_mask_fits_in_8x8(shape, rot, alpha):
    m = sprite_mask(shape, rot, alpha)
    assert m.shape[0] <= 8 and m.shape[1] <= 8
    assert m.sum() == 5 * alpha * alpha


@given(shapes, rotations, scales)
def test_scale_commutes_with_rotation(shape, rot, alpha):
    m = canonical_mask(shape)
    assert np.array_equal(scale(rotate(m, rot), alpha), rotate(scale(m, alpha), rot))


def test_no_rotation_maps_shape_onto_mirror_partner():
    # chirality: the 40 (shape, rotation) masks at scale 1 are pairwise
    # distinct across different shapes
    seen = {}
    for shape in Shape:
        for rot in range(4):
            key = tuple(sorted(cells_of(sprite_mask(shape, rot, 1))))
            if key in seen:
                assert seen[key] == shape
            seen[key] = shape
    assert len({tuple(sorted(cells_of(sprite_mask(s, r, 1)))) for s in Shape for r in range(4)}) == 40


def test_masks_returned_are_copies():
    m = canonical_mask(Shape.L)
    m[:] = 0
    assert canonical_mask(Shape.L).sum() == 5
