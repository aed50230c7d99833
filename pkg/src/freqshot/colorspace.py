"""RGB to planar YCbCr conversion with 4:2:0 chroma subsampling.

Full-range BT.601 (JFIF) coefficients; all planes kept as doubles in
[0, 255] with no integer re-quantization.
"""

from dataclasses import dataclass

import numpy as np

from .errors import OddDimension
from .ingest import RgbImage


@dataclass(frozen=True)
class YCbCrPlanes:
    y: np.ndarray  # (S, S)
    cb: np.ndarray  # (S/2, S/2)
    cr: np.ndarray  # (S/2, S/2)

    def __post_init__(self):
        if self.y.shape[0] != 2 * self.cb.shape[0] or self.cb.shape != self.cr.shape:
            raise OddDimension(
                f"luma {self.y.shape} must be exactly twice chroma {self.cb.shape}"
            )


def rgb_to_ycbcr(img: RgbImage) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-pixel BT.601 full-range transform; returns full-resolution planes."""
    rgb = img.pixels.astype(np.float64)
    r, g, b = rgb[:, :, 0], rgb[:, :, 1], rgb[:, :, 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b
    cr = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b
    return (
        np.clip(y, 0.0, 255.0),
        np.clip(cb, 0.0, 255.0),
        np.clip(cr, 0.0, 255.0),
    )


def _box_halve(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    if h % 2 != 0 or w % 2 != 0:
        raise OddDimension(f"plane sides must be even for 4:2:0, got {plane.shape}")
    return plane.reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))


def subsample_420(planes: tuple[np.ndarray, np.ndarray, np.ndarray]) -> YCbCrPlanes:
    """Halve the chroma planes with a 2x2 box filter; luma is untouched."""
    y, cb, cr = planes
    if y.shape[0] % 2 != 0 or y.shape[1] % 2 != 0:
        raise OddDimension(f"luma sides must be even, got {y.shape}")
    return YCbCrPlanes(y=np.asarray(y, dtype=np.float64), cb=_box_halve(cb), cr=_box_halve(cr))
