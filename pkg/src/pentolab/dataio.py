"""Binary dataset files, integrity checks, and CSV export.

Layout (all little-endian):

    header:  magic b"PENT" | u16 version=1 | u8 record_kind | u16 k
             | u32 count | u64 global_seed
    image record (kind 0):    512B packed image bits (row-major, MSB first)
                              | 64B patch labels | 1B z | 12B sprite rows
    symbolic record (kind 1): ceil(64*k/8)B packed code bits | 1B target

Readers fail with a diagnostic on bad magic, unsupported version,
truncation, or out-of-range field values; they never return partially
parsed data.
"""

from __future__ import annotations

import struct

import numpy as np

from . import datagen
from .datagen import ImageDataset, SymbolicDataset

MAGIC = b"PENT"
VERSION = 1
_HEADER = struct.Struct("<4sHBHIQ")

KIND_IMAGE = 0
KIND_SYMBOLIC = 1

_IMAGE_PACKED = 512   # 64*64 bits
_IMAGE_RECORD = _IMAGE_PACKED + 64 + 1 + 12


class DatasetFormatError(ValueError):
    pass


def _symbolic_record_size(k: int) -> int:
    return (64 * k + 7) // 8 + 1


def write_dataset(path, ds) -> None:
    if isinstance(ds, ImageDataset):
        n = len(ds)
        packed = np.packbits(ds.images.reshape(n, -1), axis=1)
        rows = np.hstack([
            packed,
            ds.patch_labels,
            ds.targets[:, None],
            ds.sprites.reshape(n, 12),
        ]).astype(np.uint8)
        kind, k = KIND_IMAGE, 0
    elif isinstance(ds, SymbolicDataset):
        n = len(ds)
        packed = np.packbits(ds.codes.reshape(n, -1), axis=1)
        rows = np.hstack([packed, ds.targets[:, None]]).astype(np.uint8)
        kind, k = KIND_SYMBOLIC, ds.k
    else:
        raise TypeError("cannot write %r" % type(ds).__name__)
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, kind, k, n, ds.global_seed))
        rows.tofile(f)


def read_dataset(path):
    """Load a dataset file; returns ImageDataset or SymbolicDataset."""
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < _HEADER.size:
        raise DatasetFormatError("file too short for header (%d bytes)" % len(raw))
    magic, version, kind, k, count, global_seed = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise DatasetFormatError("bad magic %r, not a dataset file" % (magic,))
    if version != VERSION:
        raise DatasetFormatError("unsupported version %d (want %d)" % (version, VERSION))
    body = np.frombuffer(raw, dtype=np.uint8, offset=_HEADER.size)

    if kind == KIND_IMAGE:
        if k != 0:
            raise DatasetFormatError("image dataset must have k=0, got %d" % k)
        expect = count * _IMAGE_RECORD
        if body.size != expect:
            raise DatasetFormatError(
                "truncated or oversized file: %d record bytes, expected %d"
                % (body.size, expect))
        rows = body.reshape(count, _IMAGE_RECORD)
        images = np.unpackbits(rows[:, :_IMAGE_PACKED], axis=1).reshape(count, 64, 64)
        labels = rows[:, _IMAGE_PACKED:_IMAGE_PACKED + 64].copy()
        targets = rows[:, _IMAGE_PACKED + 64].copy()
        sprites = rows[:, _IMAGE_PACKED + 65:].reshape(count, 3, 4).copy()
        _check_image_fields(labels, targets, sprites)
        return ImageDataset(np.ascontiguousarray(images), labels, targets, sprites,
                            global_seed=global_seed)

    if kind == KIND_SYMBOLIC:
        if k < 1:
            raise DatasetFormatError("symbolic dataset must have k >= 1, got %d" % k)
        rec = _symbolic_record_size(k)
        expect = count * rec
        if body.size != expect:
            raise DatasetFormatError(
                "truncated or oversized file: %d record bytes, expected %d"
                % (body.size, expect))
        rows = body.reshape(count, rec)
        codes = np.unpackbits(rows[:, :-1], axis=1, count=64 * k).reshape(count, 64, k)
        targets = rows[:, -1].copy()
        bad = np.nonzero(targets > 1)[0]
        if bad.size:
            raise DatasetFormatError("record %d: target %d not in {0, 1}"
                                     % (bad[0], targets[bad[0]]))
        return SymbolicDataset(np.ascontiguousarray(codes), targets, k=k,
                               global_seed=global_seed)

    raise DatasetFormatError("unknown record kind %d" % kind)


def _check_image_fields(labels, targets, sprites):
    bad = np.nonzero(labels > 10)[0]
    if bad.size:
        raise DatasetFormatError("record %d: patch label > 10" % bad[0])
    bad = np.nonzero(targets > 1)[0]
    if bad.size:
        raise DatasetFormatError("record %d: z not in {0, 1}" % bad[0])
    s = sprites.astype(np.int64)
    ok = ((s[:, :, 0] >= 1) & (s[:, :, 0] <= 10) & (s[:, :, 1] <= 3)
          & (s[:, :, 2] >= 1) & (s[:, :, 2] <= 2) & (s[:, :, 3] <= 63))
    bad = np.nonzero(~ok.all(axis=1))[0]
    if bad.size:
        raise DatasetFormatError("record %d: sprite metadata out of range" % bad[0])


# ---------------------------------------------------------------------------
# semantic validation (beyond field ranges)


def validate_image_dataset(ds: ImageDataset):
    """Full integrity checks; returns a list of (check, ok, detail)."""
    n = len(ds)
    report = []

    occupied = (ds.patch_labels > 0).sum(axis=1)
    report.append(("three occupied patches", bool((occupied == 3).all()),
                   "min %d max %d" % (occupied.min(), occupied.max())))

    blocks = ds.sprites[:, :, 3]
    distinct = np.array([len(set(row.tolist())) == 3 for row in blocks])
    report.append(("three distinct blocks", bool(distinct.all()), ""))

    alphas = ds.sprites[:, :, 2].astype(np.int64)
    expect_px = (5 * alphas * alphas).sum(axis=1)
    got_px = ds.images.reshape(n, -1).sum(axis=1)
    report.append(("pixel count is sum of 5*alpha^2", bool((expect_px == got_px).all()),
                   ""))

    shapes = ds.sprites[:, :, 0]
    all_same = (shapes[:, 0] == shapes[:, 1]) & (shapes[:, 1] == shapes[:, 2])
    z_ok = all_same == (ds.targets == 1)
    report.append(("z matches shape agreement", bool(z_ok.all()),
                   "" if z_ok.all() else
                   "first mismatch at record %d" % int(np.argmin(z_ok))))

    labels_ok = True
    labels_detail = ""
    for i in range(n):
        lab = np.zeros(64, dtype=np.uint8)
        lab[ds.sprites[i, :, 3]] = ds.sprites[i, :, 0]
        if not np.array_equal(lab, ds.patch_labels[i]):
            labels_ok = False
            labels_detail = "first mismatch at record %d" % i
            break
    report.append(("patch labels match sprite metadata", labels_ok, labels_detail))

    render_ok = True
    detail = ""
    for i in range(n):
        img, _ = datagen.render_sprites(ds.sprites[i])
        if not np.array_equal(img, ds.images[i]):
            render_ok = False
            detail = "first mismatch at record %d" % i
            break
    report.append(("re-rendered images match stored bits", render_ok, detail))

    pos = float(ds.targets.mean())
    report.append(("class balance (informational)", True,
                   "positives %.4f of %d" % (pos, n)))
    return report


def validate_symbolic_dataset(ds: SymbolicDataset):
    report = []
    n = len(ds)
    rows_set = (ds.codes.sum(axis=2) > 0).sum(axis=1)
    report.append(("three occupied patches", bool((rows_set == 3).all()),
                   ""))
    row_sums = ds.codes.sum(axis=2)
    if ds.k == 16:
        ok = bool(np.isin(row_sums, (0, 3)).all())
        report.append(("occupied rows set one bit per factor block", ok, ""))
        shape_part = ds.codes[:, :, :10]
        rot_part = ds.codes[:, :, 10:14]
        scale_part = ds.codes[:, :, 14:16]
        ok = bool(((shape_part.sum(axis=2) <= 1) & (rot_part.sum(axis=2) <= 1)
                   & (scale_part.sum(axis=2) <= 1)).all())
        report.append(("each factor block is one-hot", ok, ""))
    else:
        ok = bool(np.isin(row_sums, (0, 1)).all())
        report.append(("occupied rows are one-hot", ok, ""))

    # target implications that hold for every encoding of width k
    ident = np.zeros(n, dtype=bool)
    same_shape = np.zeros(n, dtype=bool)
    for i in range(n):
        occ = np.nonzero(ds.codes[i].sum(axis=1) > 0)[0]
        rows = [tuple(ds.codes[i, p].tolist()) for p in occ]
        ident[i] = len(set(rows)) == 1 and len(rows) == 3
        if ds.k == 80:
            groups = {np.nonzero(ds.codes[i, p])[0][0] // 8 for p in occ}
        elif ds.k == 16:
            groups = {tuple(np.nonzero(ds.codes[i, p, :10])[0].tolist()) for p in occ}
        else:
            groups = set(rows)
        same_shape[i] = len(groups) == 1 and len(rows) == 3
    t = ds.targets == 1
    report.append(("identical codes imply target 1", bool((~ident | t).all()), ""))
    report.append(("target 1 implies same shape class", bool((~t | same_shape).all()), ""))
    pos = float(ds.targets.mean())
    report.append(("class balance (informational)", True,
                   "positives %.4f of %d" % (pos, n)))
    return report


def validate(ds):
    if isinstance(ds, ImageDataset):
        return validate_image_dataset(ds)
    return validate_symbolic_dataset(ds)


def export_labels_csv(ds: ImageDataset, path) -> None:
    """One row per example: z followed by the 64 patch labels."""
    with open(path, "w") as f:
        f.write("z," + ",".join("p%d" % i for i in range(64)) + "\n")
        for i in range(len(ds)):
            f.write("%d," % ds.targets[i]
                    + ",".join(str(int(v)) for v in ds.patch_labels[i]) + "\n")
