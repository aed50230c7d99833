"""Blockwise 2D DCT with the JPEG-style -128 level shift.

The transform of an n x n sample block M is D = T (M - 128) T', where T is
the orthonormal DCT-II matrix: row 0 is constant 1/sqrt(n), row i>0 is
sqrt(2/n) * cos((2j+1) i pi / (2n)). All arithmetic is double precision.
"""

import numpy as np

from .errors import BadBlockSize, NotDivisible, SizeMismatch

LEVEL_SHIFT = 128.0

MIN_BLOCK_SIZE = 2
MAX_BLOCK_SIZE = 64


def dct_matrix(n: int) -> np.ndarray:
    """Return the n x n orthonormal DCT-II transform matrix."""
    if not (MIN_BLOCK_SIZE <= n <= MAX_BLOCK_SIZE):
        raise BadBlockSize(f"block size must be in [{MIN_BLOCK_SIZE}, {MAX_BLOCK_SIZE}], got {n}")
    j = np.arange(n, dtype=np.float64)
    i = np.arange(n, dtype=np.float64)[:, None]
    t = np.sqrt(2.0 / n) * np.cos((2.0 * j + 1.0) * i * np.pi / (2.0 * n))
    t[0, :] = 1.0 / np.sqrt(n)
    return t


def _check_block(block: np.ndarray, t: np.ndarray) -> np.ndarray:
    block = np.asarray(block, dtype=np.float64)
    if block.shape != t.shape:
        raise SizeMismatch(f"block shape {block.shape} does not match transform {t.shape}")
    return block


def forward_dct_block(block: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Transform one sample block: T (block - 128) T'."""
    block = _check_block(block, t)
    return t @ (block - LEVEL_SHIFT) @ t.T


def inverse_dct_block(coeffs: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Invert forward_dct_block: T' D T + 128."""
    coeffs = _check_block(coeffs, t)
    return t.T @ coeffs @ t + LEVEL_SHIFT


def blockwise_dct(plane: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Transform a square plane in non-overlapping n x n patches.

    Returns a (side/n, side/n, n, n) array of coefficient blocks; block
    (r, c) transforms the patch at rows [r*n, (r+1)*n), cols [c*n, (c+1)*n).
    """
    plane = np.asarray(plane, dtype=np.float64)
    n = t.shape[0]
    if plane.ndim != 2 or plane.shape[0] != plane.shape[1]:
        raise SizeMismatch(f"expected a square plane, got shape {plane.shape}")
    side = plane.shape[0]
    if side % n != 0:
        raise NotDivisible(f"plane side {side} not divisible by block size {n}")
    g = side // n
    blocks = plane.reshape(g, n, g, n).transpose(0, 2, 1, 3) - LEVEL_SHIFT
    return t @ blocks @ t.T
