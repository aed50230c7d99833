"""Frequency cubes: per-frequency sub-channels gathered from DCT blocks.

A cube stacks, for each (u, v) frequency pair, the plane formed by that
coefficient across all blocks. Channels are ordered low-to-high frequency
by JPEG zigzag index. Static selection keeps the top-left y_side x y_side
square of the luma cube and chroma_side x chroma_side of each chroma cube
(4 and 2 give the default 24 channels); chroma cubes are then upsampled
x2 to the luma grid and the three cubes are merged Y, Cb, Cr.
"""

import struct
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import dct
from .colorspace import rgb_to_ycbcr, subsample_420
from .errors import (
    BadBlockSize,
    BadMagic,
    EmptyGrid,
    InvalidRecord,
    NotDivisible,
    OutOfRange,
    SelectionTooLarge,
    SizeMismatch,
    TruncatedFile,
    UsageError,
)
from .ingest import RgbImage, resize_image
from .resample import bilinear_resize, nearest_resize

PLANES = ("Y", "Cb", "Cr")
_PLANE_CODE = {"Y": 0, "Cb": 1, "Cr": 2}
_CODE_PLANE = {v: k for k, v in _PLANE_CODE.items()}

CUBE_MAGIC = b"FQC1"


@lru_cache(maxsize=None)
def zigzag_positions(n: int) -> tuple[tuple[int, int], ...]:
    """(u, v) pairs of an n x n block in zigzag order."""
    if n < 1:
        raise OutOfRange(f"block size must be positive, got {n}")
    out = []
    u = v = 0
    for _ in range(n * n):
        out.append((u, v))
        if (u + v) % 2 == 0:  # moving up-right
            if v == n - 1:
                u += 1
            elif u == 0:
                v += 1
            else:
                u -= 1
                v += 1
        else:  # moving down-left
            if u == n - 1:
                v += 1
            elif v == 0:
                u += 1
            else:
                u += 1
                v -= 1
    return tuple(out)


@lru_cache(maxsize=None)
def _zigzag_lookup(n: int) -> dict[tuple[int, int], int]:
    return {uv: k for k, uv in enumerate(zigzag_positions(n))}


def zigzag_index(u: int, v: int, n: int) -> int:
    """Zigzag ordinal of frequency (u, v); bijective over 0..n*n-1."""
    if not (0 <= u < n and 0 <= v < n):
        raise OutOfRange(f"frequency ({u}, {v}) outside block of size {n}")
    return _zigzag_lookup(n)[(u, v)]


@dataclass(frozen=True)
class FrequencyCube:
    data: np.ndarray  # (C, H, W) float64
    channel_labels: tuple[tuple[str, int, int], ...]  # (plane, u, v)
    block_size: int

    def __post_init__(self):
        if self.data.ndim != 3:
            raise SizeMismatch(f"cube data must be (C, H, W), got {self.data.shape}")
        if len(self.channel_labels) != self.data.shape[0]:
            raise SizeMismatch(
                f"{len(self.channel_labels)} labels for {self.data.shape[0]} channels"
            )
        if len(set(self.channel_labels)) != len(self.channel_labels):
            raise InvalidRecord("duplicate channel label in cube")

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class ChannelSelection:
    """Static channel rule: top-left squares per plane, or everything."""

    keep_all: bool
    y_side: int = 0
    chroma_side: int = 0

    @classmethod
    def top_left_square(cls, y_side: int, chroma_side: int) -> "ChannelSelection":
        if y_side < 1 or chroma_side < 1:
            raise SelectionTooLarge(f"selection sides must be >= 1, got {y_side}, {chroma_side}")
        return cls(keep_all=False, y_side=y_side, chroma_side=chroma_side)

    @classmethod
    def all_channels(cls) -> "ChannelSelection":
        return cls(keep_all=True)

    def side_for(self, plane: str) -> int:
        return self.y_side if plane == "Y" else self.chroma_side


TOP24 = ChannelSelection.top_left_square(4, 2)


@dataclass(frozen=True)
class DctConfig:
    s_image: int
    s_dct: int
    selection: ChannelSelection = TOP24
    chroma_upsample: str = "bilinear"  # or "nearest"

    def __post_init__(self):
        if not (dct.MIN_BLOCK_SIZE <= self.s_dct <= dct.MAX_BLOCK_SIZE):
            raise BadBlockSize(f"filter size {self.s_dct} outside supported range")
        if self.s_image % self.s_dct != 0:
            raise NotDivisible(f"image size {self.s_image} not divisible by {self.s_dct}")
        if (self.s_image // self.s_dct) % 2 != 0:
            raise NotDivisible(
                f"grid side {self.s_image // self.s_dct} must be even for 4:2:0 chroma"
            )
        if not self.selection.keep_all and (
            self.selection.y_side > self.s_dct or self.selection.chroma_side > self.s_dct
        ):
            raise SelectionTooLarge(
                f"selection sides ({self.selection.y_side}, {self.selection.chroma_side}) "
                f"exceed filter size {self.s_dct}"
            )
        if self.chroma_upsample not in ("bilinear", "nearest"):
            raise UsageError(f"unknown chroma upsample mode {self.chroma_upsample!r}")

    @property
    def grid_side(self) -> int:
        return self.s_image // self.s_dct


def regroup_to_cube(grid: np.ndarray, plane: str) -> FrequencyCube:
    """Gather same-frequency coefficients into zigzag-ordered sub-channels.

    grid is (rows, cols, n, n) as produced by blockwise_dct; the output is
    an n*n-channel cube where channel (u, v) at (r, c) equals grid[r, c, u, v].
    """
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 4 or grid.shape[2] != grid.shape[3]:
        raise SizeMismatch(f"expected (rows, cols, n, n) grid, got {grid.shape}")
    if grid.shape[0] == 0 or grid.shape[1] == 0:
        raise EmptyGrid("grid has no blocks")
    if plane not in PLANES:
        raise OutOfRange(f"plane must be one of {PLANES}, got {plane!r}")
    n = grid.shape[2]
    order = zigzag_positions(n)
    us = np.array([u for u, _ in order])
    vs = np.array([v for _, v in order])
    data = grid[:, :, us, vs].transpose(2, 0, 1).copy()
    labels = tuple((plane, u, v) for u, v in order)
    return FrequencyCube(data=data, channel_labels=labels, block_size=n)


def select_channels(cube: FrequencyCube, selection: ChannelSelection) -> FrequencyCube:
    """Keep channels with u < side and v < side for the channel's plane."""
    if selection.keep_all:
        return cube
    if selection.y_side > cube.block_size or selection.chroma_side > cube.block_size:
        raise SelectionTooLarge(
            f"selection exceeds block size {cube.block_size}"
        )
    keep = [
        k
        for k, (plane, u, v) in enumerate(cube.channel_labels)
        if u < selection.side_for(plane) and v < selection.side_for(plane)
    ]
    return FrequencyCube(
        data=cube.data[keep].copy(),
        channel_labels=tuple(cube.channel_labels[k] for k in keep),
        block_size=cube.block_size,
    )


def upsample_and_merge(
    y: FrequencyCube,
    cb: FrequencyCube,
    cr: FrequencyCube,
    method: str = "bilinear",
) -> FrequencyCube:
    """Upsample chroma channels x2 onto the luma grid and stack Y, Cb, Cr."""
    for chroma in (cb, cr):
        if (chroma.height * 2, chroma.width * 2) != (y.height, y.width):
            raise SizeMismatch(
                f"chroma grid {chroma.height}x{chroma.width} is not half of "
                f"luma grid {y.height}x{y.width}"
            )
        if chroma.block_size != y.block_size:
            raise SizeMismatch("mixed block sizes in merge")
    resize = bilinear_resize if method == "bilinear" else nearest_resize
    parts = [y.data]
    for chroma in (cb, cr):
        up = np.stack([resize(ch, y.height, y.width) for ch in chroma.data])
        parts.append(up)
    return FrequencyCube(
        data=np.concatenate(parts, axis=0),
        channel_labels=y.channel_labels + cb.channel_labels + cr.channel_labels,
        block_size=y.block_size,
    )


def dct_pipeline(img: RgbImage, cfg: DctConfig) -> FrequencyCube:
    """Full frequency pipeline: resize, YCbCr 4:2:0, blockwise DCT,
    regroup, select, upsample chroma, merge. Output grid side is
    s_image / s_dct."""
    img = resize_image(img, cfg.s_image)
    planes = subsample_420(rgb_to_ycbcr(img))
    t = dct.dct_matrix(cfg.s_dct)
    cubes = {}
    for plane_name, plane in (("Y", planes.y), ("Cb", planes.cb), ("Cr", planes.cr)):
        grid = dct.blockwise_dct(plane, t)
        cubes[plane_name] = select_channels(regroup_to_cube(grid, plane_name), cfg.selection)
    return upsample_and_merge(
        cubes["Y"], cubes["Cb"], cubes["Cr"], method=cfg.chroma_upsample
    )


def write_cube(cube: FrequencyCube, path) -> None:
    """Write the FQC1 debug dump: magic, u32 C/H/W, float32 data
    channel-major, then per-channel (u8 plane, u8 u, u8 v) labels.
    Little-endian throughout; written via temp file + rename."""
    payload = bytearray()
    payload += CUBE_MAGIC
    payload += struct.pack("<III", cube.channels, cube.height, cube.width)
    payload += cube.data.astype("<f4").tobytes(order="C")
    for plane, u, v in cube.channel_labels:
        payload += struct.pack("<BBB", _PLANE_CODE[plane], u, v)
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(payload)
    tmp.replace(path)


def read_cube(path) -> FrequencyCube:
    """Read an FQC1 dump written by write_cube."""
    data = Path(path).read_bytes()
    if data[:4] != CUBE_MAGIC:
        raise BadMagic(f"{path}: bad cube magic {data[:4]!r}")
    if len(data) < 16:
        raise TruncatedFile(f"{path}: truncated cube header")
    c, h, w = struct.unpack_from("<III", data, 4)
    need = 16 + 4 * c * h * w + 3 * c
    if len(data) < need:
        raise TruncatedFile(f"{path}: cube payload truncated ({len(data)} < {need} bytes)")
    values = np.frombuffer(data, dtype="<f4", count=c * h * w, offset=16)
    labels = []
    off = 16 + 4 * c * h * w
    for k in range(c):
        code, u, v = struct.unpack_from("<BBB", data, off + 3 * k)
        if code not in _CODE_PLANE:
            raise InvalidRecord(f"{path}: unknown plane code {code}")
        labels.append((_CODE_PLANE[code], u, v))
    block_size = max(max(u, v) for _, u, v in labels) + 1 if labels else 0
    return FrequencyCube(
        data=values.reshape(c, h, w).astype(np.float64),
        channel_labels=tuple(labels),
        block_size=block_size,
    )
