"""The binary polarization transform u = x G over GF(2).

G is the n-fold Kronecker power of [[1, 0], [1, 1]] acting on row vectors of
length N = 2^n, in natural index order (no bit-reversal permutation
anywhere in this package).  The transform factors into n butterfly stages

    stage h:  x[i] ^= x[i + h]   for every i whose bit h is clear,

one stage per power h = 1, 2, ..., N/2.  The stages commute and each is an
involution, so G is its own inverse and the stages may be applied in any
order; we apply them smallest h first.
"""

from __future__ import annotations

import numpy as np


def _check_block_length(n: int) -> None:
    if n < 1 or (n & (n - 1)) != 0:
        raise ValueError(f"block length must be a power of two, got {n}")


def polar_transform(bits: np.ndarray) -> np.ndarray:
    """Apply u = x G along the last axis of a {0,1} array.

    Returns a new uint8 array; the input is not modified.  Applying the
    transform twice returns the original array (G is an involution).
    """
    x = np.array(bits, dtype=np.uint8, copy=True)
    n = x.shape[-1]
    _check_block_length(n)
    lead = x.shape[:-1]
    h = 1
    while h < n:
        v = x.reshape(lead + (n // (2 * h), 2, h))
        v[..., 0, :] ^= v[..., 1, :]
        h *= 2
    return x
