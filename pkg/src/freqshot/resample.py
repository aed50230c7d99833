"""Bilinear and nearest-neighbor plane resampling.

Half-pixel source mapping: src = (dst + 0.5) * in/out - 0.5, edges clamped.
Resampling to the input size is exact identity, and constant planes stay
constant (weights are convex).
"""

import numpy as np


def _axis_taps(n_in: int, n_out: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1.0)  # clamp before splitting, so edges hold
    lo = np.floor(src).astype(np.int64)
    frac = src - lo
    hi = np.clip(lo + 1, 0, n_in - 1)
    return lo, hi, frac


def bilinear_resize(plane: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize a 2D float plane with separable bilinear interpolation."""
    plane = np.asarray(plane, dtype=np.float64)
    h, w = plane.shape
    if (h, w) == (out_h, out_w):
        return plane.copy()
    r_lo, r_hi, r_f = _axis_taps(h, out_h)
    c_lo, c_hi, c_f = _axis_taps(w, out_w)
    rows = plane[r_lo, :] * (1.0 - r_f)[:, None] + plane[r_hi, :] * r_f[:, None]
    return rows[:, c_lo] * (1.0 - c_f)[None, :] + rows[:, c_hi] * c_f[None, :]


def nearest_resize(plane: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize a 2D float plane by nearest-neighbor sampling."""
    plane = np.asarray(plane, dtype=np.float64)
    h, w = plane.shape
    if (h, w) == (out_h, out_w):
        return plane.copy()
    r = np.minimum((np.arange(out_h) + 0.5) * (h / out_h), h - 1).astype(np.int64)
    c = np.minimum((np.arange(out_w) + 0.5) * (w / out_w), w - 1).astype(np.int64)
    return plane[np.ix_(r, c)]
