"""Deterministic pseudo-randomness for data generation and training.

Everything downstream of a 64-bit seed is reproducible bit for bit: the
generator is SplitMix64, whose state advances by a fixed odd constant and
whose output is a bijective finalizer of the state.  Because the state
after n draws is just seed + n*GAMMA, blocks of outputs can be produced
vectorized with numpy uint64 arithmetic and still match the scalar path
exactly.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """SplitMix64 output finalizer on a 64-bit integer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return (z ^ (z >> 31)) & MASK64


def mix64_array(z: np.ndarray) -> np.ndarray:
    """Vectorized mix64 over a uint64 array (wrapping arithmetic)."""
    z = z.astype(np.uint64, copy=True)
    with np.errstate(over="ignore"):
        z ^= z >> np.uint64(30)
        z *= np.uint64(0xBF58476D1CE4E5B9)
        z ^= z >> np.uint64(27)
        z *= np.uint64(0x94D049BB133111EB)
        z ^= z >> np.uint64(31)
    return z


def derive_seed(global_seed: int, index: int) -> int:
    """Independent per-index seed from a global seed.

    Used so example i of a dataset (and any other indexed substream) can be
    regenerated in isolation without replaying the stream.
    """
    return mix64((global_seed ^ ((index * GAMMA) & MASK64)) & MASK64)


def derive_seed_array(global_seed: int, indices: np.ndarray) -> np.ndarray:
    idx = indices.astype(np.uint64, copy=False)
    with np.errstate(over="ignore"):
        z = np.uint64(global_seed & MASK64) ^ (idx * np.uint64(GAMMA))
    return mix64_array(z)


class SplitMix64:
    """Sequential SplitMix64 stream with a vectorized bulk path."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GAMMA) & MASK64
        return mix64(self.state)

    def next_u64_array(self, n: int) -> np.ndarray:
        """The next n outputs of the stream as uint64, advancing state by n."""
        with np.errstate(over="ignore"):
            states = np.uint64(self.state) + np.uint64(GAMMA) * np.arange(
                1, n + 1, dtype=np.uint64
            )
        self.state = (self.state + n * GAMMA) & MASK64
        return mix64_array(states)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53-bit resolution."""
        return (self.next_u64() >> 11) * 2.0**-53

    def random_array(self, n: int) -> np.ndarray:
        return (self.next_u64_array(n) >> np.uint64(11)) * 2.0**-53

    def uniform_array(self, shape, low: float, high: float) -> np.ndarray:
        n = int(np.prod(shape))
        return (low + (high - low) * self.random_array(n)).reshape(shape)

    def randrange(self, n: int) -> int:
        """Unbiased integer in [0, n) by rejection."""
        if n <= 0:
            raise ValueError("randrange needs n >= 1")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n

    def choice(self, seq):
        return seq[self.randrange(len(seq))]

    def coin(self) -> int:
        return self.next_u64() & 1

    def permutation(self, n: int) -> np.ndarray:
        """Deterministic permutation of range(n) via random sort keys.

        Sort keys are 64-bit stream outputs; ties (probability ~n^2 / 2^65)
        resolve by index through the stable sort, so the result is always a
        valid permutation.
        """
        keys = self.next_u64_array(n)
        return np.argsort(keys, kind="stable")

    def sample_without_replacement(self, n: int, k: int) -> np.ndarray:
        if k > n:
            raise ValueError("cannot sample %d of %d without replacement" % (k, n))
        return self.permutation(n)[:k]
