"""FSFD v1: persisted labeled feature sets.

Little-endian layout:

    magic   "FSFD"
    u16     version (= 1)
    u8      branch (0 = spatial, 1 = frequency, 2 = fused)
    u32     dim
    u64     row count
    u32     class count, then per class: u16 length + UTF-8 name
    rows:   u32 class index, u16 id length, UTF-8 id, dim float32 values

Values are stored as float32 (in-memory math stays double); writes go to
a temp file and rename into place so partial files are never visible. A
CSV mirror (``item_id,class,v0..v{dim-1}``) is available for inspection;
the binary file is authoritative.
"""

import csv
import struct
from dataclasses import dataclass

import numpy as np
from pathlib import Path

from .errors import (
    BadMagic,
    DuplicateId,
    InvalidRecord,
    IoFailure,
    ItemMismatch,
    LabelConflict,
    TruncatedFile,
    UnsupportedVersion,
)
from .features import BRANCHES, FeatureVector, fuse

FSFD_MAGIC = b"FSFD"
FSFD_VERSION = 1


@dataclass(frozen=True)
class DumpRow:
    item_id: str
    class_name: str
    values: np.ndarray  # (dim,) float


@dataclass(frozen=True)
class FeatureDump:
    dim: int
    branch: str
    rows: tuple[DumpRow, ...]

    def __post_init__(self):
        if self.branch not in BRANCHES:
            raise InvalidRecord(f"branch must be one of {BRANCHES}, got {self.branch!r}")
        seen = set()
        for row in self.rows:
            if len(row.values) != self.dim:
                raise InvalidRecord(
                    f"row {row.item_id!r} has {len(row.values)} values, dump dim is {self.dim}"
                )
            if row.item_id in seen:
                raise DuplicateId(f"duplicate item_id {row.item_id!r}")
            seen.add(row.item_id)

    def class_names(self) -> tuple[str, ...]:
        return tuple(sorted({r.class_name for r in self.rows}))


def write_dump(dump: FeatureDump, path) -> None:
    classes = dump.class_names()
    class_index = {c: i for i, c in enumerate(classes)}
    out = bytearray()
    out += FSFD_MAGIC
    out += struct.pack("<HB", FSFD_VERSION, BRANCHES.index(dump.branch))
    out += struct.pack("<IQ", dump.dim, len(dump.rows))
    out += struct.pack("<I", len(classes))
    for name in classes:
        raw = name.encode("utf-8")
        out += struct.pack("<H", len(raw)) + raw
    for row in dump.rows:
        raw_id = row.item_id.encode("utf-8")
        out += struct.pack("<IH", class_index[row.class_name], len(raw_id)) + raw_id
        out += np.asarray(row.values, dtype="<f4").tobytes()
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_bytes(out)
        tmp.replace(path)
    except OSError as exc:
        raise IoFailure(f"{path}: {exc}") from None


class _Cursor:
    def __init__(self, data: bytes, path):
        self.data = data
        self.off = 0
        self.path = path

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.off + size > len(self.data):
            raise TruncatedFile(f"{self.path}: truncated at byte {self.off}")
        vals = struct.unpack_from(fmt, self.data, self.off)
        self.off += size
        return vals

    def take_bytes(self, size: int) -> bytes:
        if self.off + size > len(self.data):
            raise TruncatedFile(f"{self.path}: truncated at byte {self.off}")
        out = self.data[self.off : self.off + size]
        self.off += size
        return out


def read_dump(path) -> FeatureDump:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"{path}: {exc}") from None
    cur = _Cursor(data, path)
    if cur.take_bytes(4) != FSFD_MAGIC:
        raise BadMagic(f"{path}: not an FSFD file")
    (version,) = cur.take("<H")
    if version != FSFD_VERSION:
        raise UnsupportedVersion(f"{path}: version {version}, expected {FSFD_VERSION}")
    (branch_code,) = cur.take("<B")
    if branch_code >= len(BRANCHES):
        raise InvalidRecord(f"{path}: unknown branch code {branch_code}")
    dim, row_count = cur.take("<IQ")
    (class_count,) = cur.take("<I")
    classes = []
    for _ in range(class_count):
        (length,) = cur.take("<H")
        classes.append(cur.take_bytes(length).decode("utf-8"))
    rows = []
    for _ in range(row_count):
        class_idx, id_len = cur.take("<IH")
        if class_idx >= class_count:
            raise InvalidRecord(f"{path}: class index {class_idx} out of range")
        item_id = cur.take_bytes(id_len).decode("utf-8")
        values = np.frombuffer(cur.take_bytes(4 * dim), dtype="<f4").astype(np.float64)
        rows.append(DumpRow(item_id=item_id, class_name=classes[class_idx], values=values))
    if cur.off != len(data):
        raise InvalidRecord(f"{path}: {len(data) - cur.off} trailing bytes")
    return FeatureDump(dim=dim, branch=BRANCHES[branch_code], rows=tuple(rows))


def merge_dumps(spatial: FeatureDump, frequency: FeatureDump) -> FeatureDump:
    """Fuse two dumps row-by-row, keyed by item_id (output sorted by id)."""
    if spatial.branch != "spatial" or frequency.branch != "frequency":
        raise InvalidRecord(
            f"merge expects (spatial, frequency) dumps, got "
            f"({spatial.branch}, {frequency.branch})"
        )
    s_rows = {r.item_id: r for r in spatial.rows}
    f_rows = {r.item_id: r for r in frequency.rows}
    if set(s_rows) != set(f_rows):
        only_s = sorted(set(s_rows) - set(f_rows))[:3]
        only_f = sorted(set(f_rows) - set(s_rows))[:3]
        raise ItemMismatch(
            f"item_id sets differ (spatial-only {only_s}, frequency-only {only_f})"
        )
    fused_rows = []
    for item_id in sorted(s_rows):
        s, f = s_rows[item_id], f_rows[item_id]
        if s.class_name != f.class_name:
            raise LabelConflict(
                f"{item_id!r} labeled {s.class_name!r} vs {f.class_name!r}"
            )
        fused = fuse(
            FeatureVector(values=np.asarray(s.values, dtype=np.float64), branch="spatial"),
            FeatureVector(values=np.asarray(f.values, dtype=np.float64), branch="frequency"),
        )
        fused_rows.append(DumpRow(item_id=item_id, class_name=s.class_name, values=fused.values))
    return FeatureDump(dim=spatial.dim + frequency.dim, branch="fused", rows=tuple(fused_rows))


def write_dump_csv(dump: FeatureDump, path) -> None:
    """Human-readable mirror of a dump; not meant to be read back."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["item_id", "class"] + [f"v{i}" for i in range(dump.dim)])
        for row in dump.rows:
            writer.writerow([row.item_id, row.class_name] + [repr(float(v)) for v in row.values])
