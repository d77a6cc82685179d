"""Pure-numpy fallback for the distance-covariance pair-sum kernel.

Same contract as the compiled version but O(n^2) per call; the pair sum
is evaluated blockwise to keep peak memory bounded.
"""

import numpy as np

_BLOCK_ROWS = 512


def pair_sum(xs, rxs, order, yv, yrank, ry, tree=None):
    """Return (Sab, S3) for the pairing (xs[t], yv[order[t]])."""
    yo = yv[order]
    n = xs.shape[0]
    total = 0.0
    for start in range(0, n, _BLOCK_ROWS):
        stop = min(start + _BLOCK_ROWS, n)
        dx = np.abs(xs[start:stop, None] - xs[None, :])
        dy = np.abs(yo[start:stop, None] - yo[None, :])
        total += float(np.einsum("ij,ij->", dx, dy))
    s3 = float(rxs @ ry[order])
    return total, s3
