"""Pure-numpy convolution kernels (fallback backend).

The compiled backend in ``_convcore.pyx`` implements the same two routines
with identical per-element accumulation order, so both backends produce
bit-identical results.
"""

import numpy as np


def im2col(xp, k, stride, ho, wo):
    """Unfold a padded C x Hp x Wp array into patch columns.

    Returns a (C*k*k, ho*wo) array whose column j holds the k x k patch
    centred on output position j, channel-major.
    """
    c = xp.shape[0]
    cols = np.empty((c, k, k, ho, wo), dtype=xp.dtype)
    for ki in range(k):
        for kj in range(k):
            cols[:, ki, kj] = xp[:, ki : ki + stride * ho : stride, kj : kj + stride * wo : stride]
    return np.ascontiguousarray(cols.reshape(c * k * k, ho * wo))


def col2im(cols, c, hp, wp, k, stride, ho, wo):
    """Scatter-add patch columns back onto a zeroed C x Hp x Wp array.

    Exact adjoint of :func:`im2col`; contributions for one input element
    accumulate in ascending (ki, kj) order.
    """
    x = np.zeros((c, hp, wp), dtype=cols.dtype)
    cols6 = cols.reshape(c, k, k, ho, wo)
    for ki in range(k):
        for kj in range(k):
            x[:, ki : ki + stride * ho : stride, kj : kj + stride * wo : stride] += cols6[:, ki, kj]
    return x
