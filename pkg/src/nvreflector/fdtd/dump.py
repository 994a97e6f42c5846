"""Binary field snapshots for external viewers.

Layout (little-endian)::

    8 bytes   magic b"NVRFIELD"
    uint32    format version (1)
    uint32    azimuthal order m (signed, as int32)
    uint32    number of components C
    float64   cell size (nm), z origin (nm)
    C times:  4-byte ASCII name, uint32 rows, uint32 cols
    C arrays: float64, row-major (rows = radial index, cols = z index)
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"NVRFIELD"
VERSION = 1
COMPONENTS = ("er", "ep", "ez", "hr", "hp", "hz")


def write_field_dump(path, state, grid) -> Path:
    path = Path(path)
    arrays = [np.ascontiguousarray(getattr(state, c), dtype="<f8") for c in COMPONENTS]
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Iii", VERSION, int(state.m), len(arrays)))
        fh.write(struct.pack("<dd", float(grid.dr), float(grid.z0)))
        for name, a in zip(COMPONENTS, arrays):
            fh.write(struct.pack("<4sII", name.ljust(4).encode("ascii"), a.shape[0], a.shape[1]))
        for a in arrays:
            fh.write(a.tobytes(order="C"))
    return path


def read_field_dump(path) -> dict:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != MAGIC:
        raise ValueError(f"{path} is not a field dump")
    version, m, count = struct.unpack_from("<Iii", data, 8)
    if version != VERSION:
        raise ValueError(f"unsupported dump version {version}")
    dr, z0 = struct.unpack_from("<dd", data, 20)
    offset = 36
    shapes = []
    for _ in range(count):
        name, rows, cols = struct.unpack_from("<4sII", data, offset)
        shapes.append((name.decode("ascii").strip(), rows, cols))
        offset += 12
    out = {"m": m, "cell_size": dr, "z0": z0}
    for name, rows, cols in shapes:
        n = rows * cols
        out[name] = np.frombuffer(data, dtype="<f8", count=n, offset=offset).reshape(rows, cols).copy()
        offset += 8 * n
    return out
