"""Dataset manifests and image loading.

Manifests are CSV files with header ``path,class,split``; the base, val,
and novel splits must have pairwise-disjoint class sets. Images are 8-bit
RGB, decoded from PNG (via Pillow, alpha dropped) or binary PPM P6.
"""

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    DecodeFailure,
    DuplicatePath,
    MalformedRow,
    OddTarget,
    SplitOverlap,
    UnknownSplit,
)
from .resample import bilinear_resize

SPLITS = ("base", "val", "novel")


@dataclass(frozen=True)
class ManifestEntry:
    image_path: str
    class_name: str
    split: str


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]

    def classes_in(self, split: str) -> set[str]:
        return {e.class_name for e in self.entries if e.split == split}


@dataclass(frozen=True)
class RgbImage:
    width: int
    height: int
    pixels: np.ndarray  # (height, width, 3) uint8

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise DecodeFailure(f"degenerate image size {self.width}x{self.height}")
        if self.pixels.shape != (self.height, self.width, 3) or self.pixels.dtype != np.uint8:
            raise DecodeFailure("pixel buffer must be (height, width, 3) uint8")


def load_manifest(path) -> DatasetManifest:
    """Load and validate a ``path,class,split`` CSV manifest."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRow(f"{path}: empty manifest") from None
        if [h.strip().lower() for h in header] != ["path", "class", "split"]:
            raise MalformedRow(f"{path}: expected header path,class,split, got {header!r}")
        entries = []
        seen_paths: set[str] = set()
        class_split: dict[str, str] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise MalformedRow(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
            image_path, class_name, split = (c.strip() for c in row)
            split = split.lower()
            if split not in SPLITS:
                raise UnknownSplit(f"{path}:{lineno}: split {split!r} not in {SPLITS}")
            if image_path in seen_paths:
                raise DuplicatePath(f"{path}:{lineno}: duplicate image path {image_path!r}")
            seen_paths.add(image_path)
            prior = class_split.get(class_name)
            if prior is not None and prior != split:
                raise SplitOverlap(
                    f"{path}:{lineno}: class {class_name!r} appears in both "
                    f"{prior!r} and {split!r}"
                )
            class_split[class_name] = split
            entries.append(ManifestEntry(image_path, class_name, split))
    return DatasetManifest(tuple(entries))


def _decode_ppm_p6(data: bytes, path) -> np.ndarray:
    # Header tokens may be separated by whitespace or '#' comments.
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise DecodeFailure(f"{path}: truncated PPM header")
        tokens.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    if tokens[0] != b"P6":
        raise DecodeFailure(f"{path}: not a binary PPM (P6) file")
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError:
        raise DecodeFailure(f"{path}: non-numeric PPM header field") from None
    if maxval != 255:
        raise DecodeFailure(f"{path}: PPM maxval must be 255, got {maxval}")
    if width < 1 or height < 1:
        raise DecodeFailure(f"{path}: degenerate PPM size {width}x{height}")
    body = data[pos : pos + 3 * width * height]
    if len(body) < 3 * width * height:
        raise DecodeFailure(f"{path}: PPM pixel data truncated")
    return np.frombuffer(body, dtype=np.uint8).reshape(height, width, 3)


def _decode_png(data: bytes, path) -> np.ndarray:
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except UnidentifiedImageError:
        raise DecodeFailure(f"{path}: not a decodable PNG") from None
    except OSError as exc:
        raise DecodeFailure(f"{path}: {exc}") from None
    if img.mode == "RGBA":
        img = img.convert("RGB")  # drops alpha, no compositing
    if img.mode != "RGB":
        raise DecodeFailure(f"{path}: PNG mode {img.mode!r} not supported (need RGB/RGBA)")
    return np.asarray(img, dtype=np.uint8)


def load_image(path) -> RgbImage:
    """Decode a PNG or binary PPM P6 file into an RgbImage."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise DecodeFailure(f"{path}: {exc}") from None
    if data[:8] == b"\x89PNG\r\n\x1a\n":
        px = _decode_png(data, path)
    elif data[:2] == b"P6":
        px = _decode_ppm_p6(data, path)
    else:
        raise DecodeFailure(f"{path}: unrecognized image format (need PNG or PPM P6)")
    h, w = px.shape[:2]
    return RgbImage(width=w, height=h, pixels=np.ascontiguousarray(px))


def resize_image(img: RgbImage, target: int) -> RgbImage:
    """Bilinearly resize to a square even-sided target."""
    if target < 2 or target % 2 != 0:
        raise OddTarget(f"target side must be even and >= 2, got {target}")
    if img.width == target and img.height == target:
        return img
    out = np.empty((target, target, 3), dtype=np.uint8)
    for ch in range(3):
        plane = bilinear_resize(img.pixels[:, :, ch].astype(np.float64), target, target)
        out[:, :, ch] = np.clip(np.rint(plane), 0, 255).astype(np.uint8)
    return RgbImage(width=target, height=target, pixels=out)


def load_and_resize(path, target: int) -> RgbImage:
    """Decode an image file and resize it to target x target."""
    if target < 2 or target % 2 != 0:
        raise OddTarget(f"target side must be even and >= 2, got {target}")
    return resize_image(load_image(path), target)
