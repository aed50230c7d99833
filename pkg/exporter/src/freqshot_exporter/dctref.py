"""Independent reference implementation of the frequency-cube pipeline.

Built on scipy (dctn for the block transform, map_coordinates for the
bilinear resampling) rather than hand-rolled transform matrices, so that
agreement with a freqshot cube dump is evidence the math is right and not
just the same code run twice. Shared contract with the primary: half-pixel
bilinear sampling with clamped edges (identity at the target size,
round-half-even back to 8 bits), BT.601 full-range YCbCr, 2x2 box chroma
subsampling, -128 level shift, zigzag channel order, top-left square
selection, x2 chroma upsample, Y/Cb/Cr merge order.
"""

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy.fft import dctn
from scipy.ndimage import map_coordinates

from .errors import DecodeFailure, ShapeMismatch, UsageError

CUBE_MAGIC = b"FQC1"
PLANE_NAMES = {0: "Y", 1: "Cb", 2: "Cr"}


@dataclass(frozen=True)
class RefConfig:
    image_size: int
    filter_size: int
    y_side: int = 4
    chroma_side: int = 2
    keep_all: bool = False

    @classmethod
    def from_channels(cls, image_size: int, filter_size: int, channels: str) -> "RefConfig":
        if channels == "top24":
            return cls(image_size, filter_size, 4, 2)
        if channels == "all":
            return cls(image_size, filter_size, keep_all=True)
        if channels.startswith("square:"):
            a, b = (int(p) for p in channels[len("square:") :].split(","))
            return cls(image_size, filter_size, a, b)
        raise UsageError(f"unknown channel selection {channels!r}")

    def side_for(self, plane: str) -> int:
        if self.keep_all:
            return self.filter_size
        return self.y_side if plane == "Y" else self.chroma_side


def load_rgb(path) -> np.ndarray:
    try:
        img = Image.open(path)
        img.load()
    except Exception as exc:
        raise DecodeFailure(f"{path}: {exc}") from None
    if img.mode == "RGBA":
        img = img.convert("RGB")
    if img.mode != "RGB":
        raise DecodeFailure(f"{path}: unsupported mode {img.mode!r}")
    return np.asarray(img, dtype=np.uint8)


def bilinear(plane: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Half-pixel bilinear resample via scipy map_coordinates."""
    h, w = plane.shape
    if (h, w) == (out_h, out_w):
        return plane.astype(np.float64)
    rr = (np.arange(out_h) + 0.5) * (h / out_h) - 0.5
    cc = (np.arange(out_w) + 0.5) * (w / out_w) - 0.5
    grid_r, grid_c = np.meshgrid(rr, cc, indexing="ij")
    return map_coordinates(
        plane.astype(np.float64), [grid_r, grid_c], order=1, mode="nearest"
    )


def resize_rgb(pixels: np.ndarray, target: int) -> np.ndarray:
    if pixels.shape[0] == target and pixels.shape[1] == target:
        return pixels
    out = np.empty((target, target, 3), np.uint8)
    for ch in range(3):
        plane = bilinear(pixels[:, :, ch], target, target)
        out[:, :, ch] = np.clip(np.rint(plane), 0, 255).astype(np.uint8)
    return out


def to_ycbcr_420(pixels: np.ndarray) -> dict[str, np.ndarray]:
    rgb = pixels.astype(np.float64)
    r, g, b = rgb[:, :, 0], rgb[:, :, 1], rgb[:, :, 2]
    y = np.clip(0.299 * r + 0.587 * g + 0.114 * b, 0, 255)
    cb = np.clip(128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b, 0, 255)
    cr = np.clip(128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b, 0, 255)
    half = lambda p: (p[0::2, 0::2] + p[0::2, 1::2] + p[1::2, 0::2] + p[1::2, 1::2]) / 4.0
    return {"Y": y, "Cb": half(cb), "Cr": half(cr)}


def zigzag_order(n: int) -> list[tuple[int, int]]:
    cells = [(u, v) for u in range(n) for v in range(n)]
    return sorted(
        cells, key=lambda uv: (uv[0] + uv[1], -uv[0] if (uv[0] + uv[1]) % 2 == 0 else uv[0])
    )


def plane_to_channels(plane: np.ndarray, n: int, side: int) -> list[np.ndarray]:
    h, w = plane.shape
    if h % n or w % n:
        raise ShapeMismatch(f"plane {plane.shape} not divisible by {n}")
    blocks = plane.reshape(h // n, n, w // n, n).transpose(0, 2, 1, 3) - 128.0
    coeffs = dctn(blocks, type=2, norm="ortho", axes=(2, 3))
    return [coeffs[:, :, u, v] for u, v in zigzag_order(n) if u < side and v < side]


def reference_cube(pixels: np.ndarray, cfg: RefConfig) -> tuple[np.ndarray, list[tuple[str, int, int]]]:
    """Recompute the frequency cube; returns (C, H, W) data and labels."""
    pixels = resize_rgb(pixels, cfg.image_size)
    planes = to_ycbcr_420(pixels)
    n = cfg.filter_size
    grid = cfg.image_size // n
    channels, labels = [], []
    for plane_name in ("Y", "Cb", "Cr"):
        side = cfg.side_for(plane_name)
        chans = plane_to_channels(planes[plane_name], n, side)
        for ch, (u, v) in zip(
            chans, [uv for uv in zigzag_order(n) if uv[0] < side and uv[1] < side]
        ):
            if plane_name != "Y":
                ch = bilinear(ch, grid, grid)
            channels.append(ch)
            labels.append((plane_name, u, v))
    return np.stack(channels), labels


def read_cube_dump(path) -> tuple[np.ndarray, list[tuple[str, int, int]]]:
    """Parse a freqshot FQC1 cube dump."""
    data = Path(path).read_bytes()
    if data[:4] != CUBE_MAGIC:
        raise ShapeMismatch(f"{path}: not an FQC1 cube dump")
    c, h, w = struct.unpack_from("<III", data, 4)
    expected = 16 + 4 * c * h * w + 3 * c
    if len(data) < expected:
        raise ShapeMismatch(f"{path}: truncated cube dump")
    values = np.frombuffer(data, dtype="<f4", count=c * h * w, offset=16)
    labels = []
    off = 16 + 4 * c * h * w
    for k in range(c):
        code, u, v = struct.unpack_from("<BBB", data, off + 3 * k)
        labels.append((PLANE_NAMES[code], u, v))
    return values.reshape(c, h, w).astype(np.float64), labels


@dataclass(frozen=True)
class ParityReport:
    max_abs_diff: float
    channels: int
    grid: int


def verify_parity(image_path, cfg: RefConfig, cube_dump_path) -> ParityReport:
    """Max absolute elementwise difference between this reference pipeline
    and a primary cube dump for the same image and config."""
    dumped, dumped_labels = read_cube_dump(cube_dump_path)
    ours, our_labels = reference_cube(load_rgb(image_path), cfg)
    if dumped.shape != ours.shape:
        raise ShapeMismatch(f"cube shapes differ: dump {dumped.shape} vs reference {ours.shape}")
    if dumped_labels != our_labels:
        raise ShapeMismatch("channel label tables differ")
    return ParityReport(
        max_abs_diff=float(np.abs(dumped - ours).max()),
        channels=ours.shape[0],
        grid=ours.shape[1],
    )
