"""Standalone FSFD v1 writer, bit-compatible with the freqshot reader.

Layout (little-endian): magic "FSFD", u16 version = 1, u8 branch
(0 spatial / 1 frequency / 2 fused), u32 dim, u64 row count, u32 class
count with u16-length-prefixed UTF-8 names (sorted), then per row: u32
class index, u16 id length, UTF-8 id, dim float32 values.
"""

import struct
from pathlib import Path

import numpy as np

MAGIC = b"FSFD"
VERSION = 1
BRANCHES = ("spatial", "frequency", "fused")


def write_fsfd(path, branch: str, dim: int, rows: list[tuple[str, str, np.ndarray]]) -> None:
    """rows are (item_id, class_name, values) triples."""
    classes = sorted({class_name for _, class_name, _ in rows})
    class_index = {c: i for i, c in enumerate(classes)}
    out = bytearray()
    out += MAGIC
    out += struct.pack("<HB", VERSION, BRANCHES.index(branch))
    out += struct.pack("<IQ", dim, len(rows))
    out += struct.pack("<I", len(classes))
    for name in classes:
        raw = name.encode("utf-8")
        out += struct.pack("<H", len(raw)) + raw
    for item_id, class_name, values in rows:
        values = np.asarray(values)
        if values.shape != (dim,):
            raise ValueError(f"row {item_id!r} has shape {values.shape}, expected ({dim},)")
        raw_id = item_id.encode("utf-8")
        out += struct.pack("<IH", class_index[class_name], len(raw_id)) + raw_id
        out += values.astype("<f4").tobytes()
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(out)
    tmp.replace(path)
