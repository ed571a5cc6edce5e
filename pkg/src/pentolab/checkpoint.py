"""Binary checkpoints for dense layer stacks and optimizer state.

Layout (little-endian):

    magic b"PNNW" | u16 version=1 | u8 layer_count
    per layer: u32 fan_in | u32 fan_out
               | fan_in*fan_out f64 weights (row-major) | fan_out f64 biases
    optional trailer: b"OPTS" | u8 algorithm | f64 lr, rho, eps_opt, tau
               | u64 t | u8 has_sq_grad | u8 has_sq_update
               | accumulator arrays as raw f64, parallel to the flat
                 [w0, b0, w1, b1, ...] parameter list

Weights and optimizer accumulators round-trip bit for bit, so resuming
from a checkpoint continues the exact same trajectory.
"""

from __future__ import annotations

import struct

import numpy as np

from .nn import DenseParams
from .optim import ALGORITHMS, OptimizerState

MAGIC = b"PNNW"
OPT_MAGIC = b"OPTS"
VERSION = 1


class CheckpointFormatError(ValueError):
    pass


def _param_shapes(layers):
    shapes = []
    for p in layers:
        shapes.append(p.weights.shape)
        shapes.append(p.bias.shape)
    return shapes


def save_checkpoint(path, layers, optimizer: OptimizerState | None = None) -> None:
    if not layers:
        raise ValueError("refusing to write a checkpoint with no layers")
    if len(layers) > 255:
        raise ValueError("too many layers for one checkpoint")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<HB", VERSION, len(layers)))
        for p in layers:
            fan_in, fan_out = p.weights.shape
            f.write(struct.pack("<II", fan_in, fan_out))
            np.ascontiguousarray(p.weights, dtype="<f8").tofile(f)
            np.ascontiguousarray(p.bias, dtype="<f8").tofile(f)
        if optimizer is not None:
            f.write(OPT_MAGIC)
            f.write(struct.pack("<BddddQBB", ALGORITHMS.index(optimizer.algorithm),
                                optimizer.lr, optimizer.rho, optimizer.eps_opt,
                                optimizer.tau, optimizer.t,
                                bool(optimizer.sq_grad), bool(optimizer.sq_update)))
            for acc in (optimizer.sq_grad, optimizer.sq_update):
                for arr in acc:
                    np.ascontiguousarray(arr, dtype="<f8").tofile(f)


class _Reader:
    def __init__(self, raw, path):
        self.raw = raw
        self.pos = 0
        self.path = path

    def take(self, n):
        if self.pos + n > len(self.raw):
            raise CheckpointFormatError("truncated checkpoint %s" % self.path)
        out = self.raw[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def f64(self, shape):
        n = int(np.prod(shape))
        return np.frombuffer(self.take(8 * n), dtype="<f8").reshape(shape).copy()


def load_checkpoint(path):
    """Returns (layers, optimizer_state or None)."""
    with open(path, "rb") as f:
        raw = f.read()
    r = _Reader(raw, path)
    if r.take(4) != MAGIC:
        raise CheckpointFormatError("bad magic, %s is not a checkpoint" % path)
    version, n_layers = r.unpack("<HB")
    if version != VERSION:
        raise CheckpointFormatError("unsupported checkpoint version %d" % version)
    layers = []
    for _ in range(n_layers):
        fan_in, fan_out = r.unpack("<II")
        if fan_in < 1 or fan_out < 1:
            raise CheckpointFormatError("bad layer dims %dx%d" % (fan_in, fan_out))
        w = r.f64((fan_in, fan_out))
        b = r.f64((fan_out,))
        layers.append(DenseParams(w, b))

    optimizer = None
    if r.pos < len(raw):
        if r.take(4) != OPT_MAGIC:
            raise CheckpointFormatError("garbage after layers in %s" % path)
        alg_id, lr, rho, eps_opt, tau, t, has_g, has_u = r.unpack("<BddddQBB")
        if alg_id >= len(ALGORITHMS):
            raise CheckpointFormatError("unknown optimizer id %d" % alg_id)
        optimizer = OptimizerState(ALGORITHMS[alg_id], lr, rho, eps_opt, tau, t)
        shapes = _param_shapes(layers)
        if has_g:
            optimizer.sq_grad = [r.f64(s) for s in shapes]
        if has_u:
            optimizer.sq_update = [r.f64(s) for s in shapes]
    if r.pos != len(raw):
        raise CheckpointFormatError("trailing bytes in %s" % path)
    return layers, optimizer
