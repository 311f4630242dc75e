"""OCC1: sparse little-endian binary encoding of a labelled voxel grid.

Layout::

    header   magic b"OCC1" | version u16 | dims 3*u32 | resolution f32 |
             origin 3*f32 | flags u8                                  (35 bytes)
    count    record_count u32
    records  x u16 | y u16 | z u16 | label u8 [| fx f32 | fy f32] [| visible u8]
    mask     packed visibility bits of the whole grid, x-major    (if flag bit1)
    trailer  CRC-32 of everything before it, u32

Only non-free voxels are stored; records are strictly sorted by (z, y, x).
Flag bit0 marks flow, bit1 visibility.  The trailing mask keeps the
visibility of free voxels, which records alone cannot carry.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from occtk.classes import NUM_CLASSES, UNKNOWN
from occtk.grid.spec import GridSpec, VoxelGrid

MAGIC = b"OCC1"
VERSION = 1
FLAG_FLOW = 1
FLAG_VISIBILITY = 2
HEADER = struct.Struct("<4sH3If3fB")
COUNT = struct.Struct("<I")
CRC = struct.Struct("<I")
HEADER_SIZE = HEADER.size


class Occ1FormatError(ValueError):
    """Malformed OCC1 content."""


def _record_dtype(flags: int) -> np.dtype:
    fields = [("x", "<u2"), ("y", "<u2"), ("z", "<u2"), ("label", "u1")]
    if flags & FLAG_FLOW:
        fields += [("fx", "<f4"), ("fy", "<f4")]
    if flags & FLAG_VISIBILITY:
        fields += [("visible", "u1")]
    return np.dtype(fields)


def encode_occ(grid: VoxelGrid) -> bytes:
    spec = grid.spec
    if max(spec.dims) > 0xFFFF:
        raise ValueError(f"dims {spec.dims} exceed the u16 index range")
    flags = (FLAG_FLOW if grid.flow is not None else 0) | (FLAG_VISIBILITY if grid.visibility is not None else 0)
    # (z, y, x) order: iterate the x-major array transposed
    zyx = np.transpose(grid.labels, (2, 1, 0))
    z, y, x = np.nonzero(zyx)
    rec = np.zeros(len(x), _record_dtype(flags))
    rec["x"], rec["y"], rec["z"] = x, y, z
    rec["label"] = grid.labels[x, y, z]
    if flags & FLAG_FLOW:
        rec["fx"] = grid.flow[x, y, z, 0]
        rec["fy"] = grid.flow[x, y, z, 1]
    if flags & FLAG_VISIBILITY:
        rec["visible"] = grid.visibility[x, y, z]
    parts = [
        HEADER.pack(MAGIC, VERSION, *spec.dims, spec.resolution, *spec.origin, flags),
        COUNT.pack(len(rec)),
        rec.tobytes(),
    ]
    if flags & FLAG_VISIBILITY:
        parts.append(np.packbits(grid.visibility.reshape(-1)).tobytes())
    body = b"".join(parts)
    return body + CRC.pack(zlib.crc32(body))


def decode_occ(data: bytes) -> VoxelGrid:
    if len(data) < HEADER_SIZE + COUNT.size + CRC.size:
        raise Occ1FormatError(f"file too short ({len(data)} bytes) for an OCC1 header")
    magic, version, nx, ny, nz, res, ox, oy, oz, flags = HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise Occ1FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise Occ1FormatError(f"unsupported version {version}")
    if flags & ~(FLAG_FLOW | FLAG_VISIBILITY):
        raise Occ1FormatError(f"unknown flag bits 0x{flags:02x}")
    dims = (nx, ny, nz)
    if min(dims) < 1 or max(dims) > 0xFFFF:
        raise Occ1FormatError(f"invalid dims {dims}")
    if not (np.isfinite(res) and res > 0) or not np.all(np.isfinite([ox, oy, oz])):
        raise Occ1FormatError("non-finite or non-positive geometry in header")
    (count,) = COUNT.unpack_from(data, HEADER_SIZE)
    dtype = _record_dtype(flags)
    n_cells = nx * ny * nz
    mask_bytes = (n_cells + 7) // 8 if flags & FLAG_VISIBILITY else 0
    start = HEADER_SIZE + COUNT.size
    expected = start + count * dtype.itemsize + mask_bytes + CRC.size
    if len(data) != expected:
        raise Occ1FormatError(f"size {len(data)} does not match header ({expected} bytes for {count} records)")
    (crc,) = CRC.unpack_from(data, len(data) - CRC.size)
    if crc != zlib.crc32(data[: len(data) - CRC.size]):
        raise Occ1FormatError("checksum mismatch")
    if count > n_cells:
        raise Occ1FormatError(f"{count} records for {n_cells} cells")

    rec = np.frombuffer(data, dtype, count, start)
    x, y, z = (rec[k].astype(np.int64) for k in ("x", "y", "z"))
    out = np.flatnonzero((x >= nx) | (y >= ny) | (z >= nz))
    if len(out):
        i = out[0]
        raise Occ1FormatError(f"record {i}: index ({x[i]}, {y[i]}, {z[i]}) outside dims {dims}")
    key = (z * ny + y) * nx + x
    bad = np.flatnonzero(np.diff(key) <= 0)
    if len(bad):
        raise Occ1FormatError(f"record {bad[0] + 1}: not strictly after record {bad[0]} in (z, y, x) order")
    lab = rec["label"]
    bad = np.flatnonzero(((lab < 1) | (lab > NUM_CLASSES)) & (lab != UNKNOWN))
    if len(bad):
        raise Occ1FormatError(f"record {bad[0]}: invalid label {lab[bad[0]]}")

    spec = GridSpec((float(ox), float(oy), float(oz)), float(res), dims)
    labels = np.zeros(dims, np.uint8)
    labels[x, y, z] = lab
    flow = vis = None
    if flags & FLAG_FLOW:
        flow = np.zeros(dims + (2,), np.float32)
        flow[x, y, z, 0] = rec["fx"]
        flow[x, y, z, 1] = rec["fy"]
    if flags & FLAG_VISIBILITY:
        bits = np.frombuffer(data, np.uint8, mask_bytes, start + count * dtype.itemsize)
        vis = np.unpackbits(bits, count=n_cells).astype(bool).reshape(dims)
        bad = np.flatnonzero(rec["visible"] != vis[x, y, z])
        if len(bad):
            raise Occ1FormatError(f"record {bad[0]}: visible flag disagrees with the visibility mask")
    return VoxelGrid(spec, labels, flow, vis)


def write_occ(path, grid: VoxelGrid) -> None:
    Path(path).write_bytes(encode_occ(grid))


def read_occ(path) -> VoxelGrid:
    try:
        return decode_occ(Path(path).read_bytes())
    except Occ1FormatError as exc:
        raise Occ1FormatError(f"{path}: {exc}") from None
