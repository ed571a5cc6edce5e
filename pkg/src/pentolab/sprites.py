"""Sprite catalog and transforms for the pentomino tasks.

Ten pentominoes, indexed 1..10.  Shapes 6..10 are the mirror images of
shapes 1..5, so the catalog is chiral: no rotation maps a shape onto its
mirror partner, which is what makes the same/different task depend on
shape identity rather than cell counts.
"""

from __future__ import annotations

import enum

import numpy as np

CELLS_PER_SPRITE = 5


class Shape(enum.IntEnum):
    L = 1
    N = 2
    P = 3
    F = 4
    Y = 5
    J = 6   # mirror of L
    N2 = 7  # mirror of N
    Q = 8   # mirror of P
    F2 = 9  # mirror of F
    Y2 = 10  # mirror of Y


# Canonical cell coordinates (row, col) in a tight bounding box.
_BASE_CELLS = {
    Shape.L: [(0, 0), (1, 0), (2, 0), (3, 0), (3, 1)],
    Shape.N: [(0, 0), (1, 0), (1, 1), (2, 1), (3, 1)],
    Shape.P: [(0, 0), (0, 1), (1, 0), (1, 1), (2, 0)],
    Shape.F: [(0, 1), (0, 2), (1, 0), (1, 1), (2, 1)],
    Shape.Y: [(0, 1), (1, 0), (1, 1), (2, 1), (3, 1)],
}

_MIRROR_PARTNER = {
    Shape.J: Shape.L,
    Shape.N2: Shape.N,
    Shape.Q: Shape.P,
    Shape.F2: Shape.F,
    Shape.Y2: Shape.Y,
}


def _cells_to_mask(cells) -> np.ndarray:
    rows = [r for r, _ in cells]
    cols = [c for _, c in cells]
    if min(rows) != 0 or min(cols) != 0:
        raise ValueError("canonical cells must touch row 0 and col 0")
    mask = np.zeros((max(rows) + 1, max(cols) + 1), dtype=np.uint8)
    for r, c in cells:
        mask[r, c] = 1
    return mask


def mirror(mask: np.ndarray) -> np.ndarray:
    """Horizontal flip (columns reversed)."""
    return np.ascontiguousarray(mask[:, ::-1])


def _build_catalog():
    catalog = {}
    for shape, cells in _BASE_CELLS.items():
        catalog[shape] = _cells_to_mask(cells)
    for shape, partner in _MIRROR_PARTNER.items():
        catalog[shape] = mirror(catalog[partner])
    return catalog


_CATALOG = _build_catalog()


def canonical_mask(shape) -> np.ndarray:
    """Canonical (unrotated, scale 1) binary mask of a shape, tight bbox."""
    return _CATALOG[Shape(shape)].copy()


def rotate(mask: np.ndarray, quarter_turns: int) -> np.ndarray:
    """Rotate counter-clockwise by 90 * quarter_turns degrees."""
    if quarter_turns not in (0, 1, 2, 3):
        raise ValueError("quarter_turns must be in 0..3, got %r" % (quarter_turns,))
    return np.ascontiguousarray(np.rot90(mask, quarter_turns))


def scale(mask: np.ndarray, alpha: int) -> np.ndarray:
    """Integer upscaling: each cell becomes an alpha x alpha block."""
    if alpha not in (1, 2):
        raise ValueError("scale factor must be 1 or 2, got %r" % (alpha,))
    if alpha == 1:
        return mask.copy()
    return np.repeat(np.repeat(mask, alpha, axis=0), alpha, axis=1)


def sprite_mask(shape, rotation: int, alpha: int) -> np.ndarray:
    """Mask for a shape at a given rotation and scale (scale applied last)."""
    return scale(rotate(canonical_mask(shape), rotation), alpha)


def all_shapes():
    return list(Shape)
