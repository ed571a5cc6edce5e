"""Example samplers and symbolic encodings for the same/different task.

An image example is a 64x64 binary image holding three pentomino sprites
in three distinct cells of an 8x8 block grid.  The target z is 1 when
all three sprites share the same shape index (rotation and scale are
free), else 0.  Negatives use three pairwise-distinct shapes.

Each example is generated from its own 64-bit seed derived from
(global_seed, index), so any record can be regenerated in isolation.
The per-example draw order is fixed: z, shape triple, per-sprite
(rotation, scale) pairs, then the block triple.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import SplitMix64, derive_seed
from .sprites import Shape, sprite_mask

GRID = 8              # blocks per image side
BLOCK = 8             # pixels per block side
IMAGE_SIDE = GRID * BLOCK
N_PATCHES = GRID * GRID
N_SHAPES = 10
SPRITES_PER_IMAGE = 3

EXP1_K = 10
EXP2_K = 16
EXP3_K = 80


@dataclass
class PentominoExample:
    image: np.ndarray         # (64, 64) uint8 in {0, 1}
    patch_labels: np.ndarray  # (64,) uint8, 0 empty, 1..10 shape index
    z: int
    sprites: np.ndarray       # (3, 4) uint8 rows: shape, rotation, scale, block


@dataclass
class ImageDataset:
    images: np.ndarray        # (n, 64, 64) uint8
    patch_labels: np.ndarray  # (n, 64) uint8
    targets: np.ndarray       # (n,) uint8
    sprites: np.ndarray       # (n, 3, 4) uint8
    global_seed: int = 0

    def __len__(self):
        return self.images.shape[0]

    def example(self, i: int) -> PentominoExample:
        return PentominoExample(
            image=self.images[i],
            patch_labels=self.patch_labels[i],
            z=int(self.targets[i]),
            sprites=self.sprites[i],
        )


@dataclass
class SymbolicExample:
    codes: np.ndarray  # (64, k) uint8 in {0, 1}
    target: int


@dataclass
class SymbolicDataset:
    codes: np.ndarray    # (n, 64, k) uint8
    targets: np.ndarray  # (n,) uint8
    k: int
    global_seed: int = 0

    def __len__(self):
        return self.codes.shape[0]

    def example(self, i: int) -> SymbolicExample:
        return SymbolicExample(codes=self.codes[i], target=int(self.targets[i]))


def render_sprites(sprite_rows: np.ndarray):
    """Rasterize (3, 4) sprite metadata into an image and patch labels.

    Sprites are centered in their 8x8 block at offset
    (floor((8 - h) / 2), floor((8 - w) / 2)).
    """
    image = np.zeros((IMAGE_SIDE, IMAGE_SIDE), dtype=np.uint8)
    labels = np.zeros(N_PATCHES, dtype=np.uint8)
    for shape, rot, alpha, block in np.asarray(sprite_rows, dtype=np.int64):
        mask = sprite_mask(int(shape), int(rot), int(alpha))
        h, w = mask.shape
        br, bc = divmod(int(block), GRID)
        r0 = br * BLOCK + (BLOCK - h) // 2
        c0 = bc * BLOCK + (BLOCK - w) // 2
        image[r0:r0 + h, c0:c0 + w] |= mask
        labels[int(block)] = shape
    return image, labels


def _draw_shape_triple(rng: SplitMix64, z: int):
    if z == 1:
        s = rng.randrange(N_SHAPES) + 1
        return [s, s, s]
    while True:
        triple = [rng.randrange(N_SHAPES) + 1 for _ in range(SPRITES_PER_IMAGE)]
        if len(set(triple)) == SPRITES_PER_IMAGE:
            return triple


def sample_example(seed: int) -> PentominoExample:
    """One image example from a 64-bit seed."""
    rng = SplitMix64(seed)
    z = rng.coin()
    shapes = _draw_shape_triple(rng, z)
    rows = np.zeros((SPRITES_PER_IMAGE, 4), dtype=np.uint8)
    for i, shape in enumerate(shapes):
        rows[i, 0] = shape
        rows[i, 1] = rng.randrange(4)
        rows[i, 2] = rng.randrange(2) + 1
    blocks = rng.sample_without_replacement(N_PATCHES, SPRITES_PER_IMAGE)
    rows[:, 3] = blocks
    image, labels = render_sprites(rows)
    return PentominoExample(image=image, patch_labels=labels, z=z, sprites=rows)


def generate_dataset(n: int, global_seed: int, start_index: int = 0) -> ImageDataset:
    """n image examples; example i uses derive_seed(global_seed, start_index + i)."""
    if n <= 0:
        raise ValueError("dataset size must be >= 1, got %d" % n)
    images = np.zeros((n, IMAGE_SIDE, IMAGE_SIDE), dtype=np.uint8)
    labels = np.zeros((n, N_PATCHES), dtype=np.uint8)
    targets = np.zeros(n, dtype=np.uint8)
    sprites_meta = np.zeros((n, SPRITES_PER_IMAGE, 4), dtype=np.uint8)
    for i in range(n):
        ex = sample_example(derive_seed(global_seed, start_index + i))
        images[i] = ex.image
        labels[i] = ex.patch_labels
        targets[i] = ex.z
        sprites_meta[i] = ex.sprites
    return ImageDataset(images, labels, targets, sprites_meta, global_seed=global_seed)


# ---------------------------------------------------------------------------
# symbolic encodings


def encode_exp1(ex: PentominoExample) -> SymbolicExample:
    """k=10: one-hot shape identity per occupied patch, zeros elsewhere."""
    codes = np.zeros((N_PATCHES, EXP1_K), dtype=np.uint8)
    occ = np.nonzero(ex.patch_labels)[0]
    codes[occ, ex.patch_labels[occ] - 1] = 1
    return SymbolicExample(codes=codes, target=int(ex.z))


def encode_exp2(ex: PentominoExample) -> SymbolicExample:
    """k=16: disentangled one-hot blocks for shape (10), rotation (4), scale (2)."""
    codes = np.zeros((N_PATCHES, EXP2_K), dtype=np.uint8)
    for shape, rot, alpha, block in ex.sprites.astype(np.int64):
        codes[block, shape - 1] = 1
        codes[block, 10 + rot] = 1
        codes[block, 14 + (alpha - 1)] = 1
    return SymbolicExample(codes=codes, target=int(ex.z))


def exp3_code_index(shape: int, rotation: int, alpha: int) -> int:
    """Entangled index over (shape, rotation, scale): 80 combinations."""
    return (shape - 1) * 8 + rotation * 2 + (alpha - 1)


def encode_exp3(ex: PentominoExample) -> SymbolicExample:
    """k=80: single one-hot over the joint (shape, rotation, scale) code."""
    codes = np.zeros((N_PATCHES, EXP3_K), dtype=np.uint8)
    for shape, rot, alpha, block in ex.sprites.astype(np.int64):
        codes[block, exp3_code_index(shape, rot, alpha)] = 1
    return SymbolicExample(codes=codes, target=int(ex.z))


_ENCODERS = {"exp1": (encode_exp1, EXP1_K), "exp2": (encode_exp2, EXP2_K),
             "exp3": (encode_exp3, EXP3_K)}


def encode_dataset(ds: ImageDataset, kind: str) -> SymbolicDataset:
    """Encode every example of an image dataset (kind: exp1 | exp2 | exp3)."""
    if kind not in _ENCODERS:
        raise ValueError("unknown encoding %r (want exp1, exp2 or exp3)" % (kind,))
    encoder, k = _ENCODERS[kind]
    n = len(ds)
    codes = np.zeros((n, N_PATCHES, k), dtype=np.uint8)
    for i in range(n):
        codes[i] = encoder(ds.example(i)).codes
    return SymbolicDataset(codes=codes, targets=ds.targets.copy(), k=k,
                           global_seed=ds.global_seed)


def sample_exp4(seed: int) -> SymbolicExample:
    """Balanced k=80 symbolic example with its own positive definition.

    target = 1 iff all three patch codes are identical, i.e. the full
    (shape, rotation, scale) triples match, not just the shape.  Negatives
    are any not-all-identical triple (rejection sampled), so a single
    mismatched rotation already flips the target.
    """
    rng = SplitMix64(seed)
    target = rng.coin()
    if target == 1:
        triple = (rng.randrange(N_SHAPES) + 1, rng.randrange(4), rng.randrange(2) + 1)
        triples = [triple] * SPRITES_PER_IMAGE
    else:
        while True:
            triples = [(rng.randrange(N_SHAPES) + 1, rng.randrange(4),
                        rng.randrange(2) + 1) for _ in range(SPRITES_PER_IMAGE)]
            if len(set(triples)) > 1:
                break
    blocks = rng.sample_without_replacement(N_PATCHES, SPRITES_PER_IMAGE)
    codes = np.zeros((N_PATCHES, EXP3_K), dtype=np.uint8)
    for (shape, rot, alpha), block in zip(triples, blocks):
        codes[int(block), exp3_code_index(shape, rot, alpha)] = 1
    return SymbolicExample(codes=codes, target=target)


def generate_exp4_dataset(n: int, global_seed: int, start_index: int = 0) -> SymbolicDataset:
    if n <= 0:
        raise ValueError("dataset size must be >= 1, got %d" % n)
    codes = np.zeros((n, N_PATCHES, EXP3_K), dtype=np.uint8)
    targets = np.zeros(n, dtype=np.uint8)
    for i in range(n):
        ex = sample_exp4(derive_seed(global_seed, start_index + i))
        codes[i] = ex.codes
        targets[i] = ex.target
    return SymbolicDataset(codes=codes, targets=targets, k=EXP3_K,
                           global_seed=global_seed)
