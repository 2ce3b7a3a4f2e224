# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled convolution kernels (hot path of conv2d forward/backward).

Matches the accumulation order of the numpy fallback in ``_convpy`` so the
two backends are bit-identical.
"""

import numpy as np

ctypedef fused real:
    float
    double


def im2col(real[:, :, ::1] xp, int k, int stride, int ho, int wo):
    cdef int c = xp.shape[0]
    cdef int ci, ki, kj, i, j, row
    if real is float:
        out_np = np.empty((c * k * k, ho * wo), dtype=np.float32)
    else:
        out_np = np.empty((c * k * k, ho * wo), dtype=np.float64)
    cdef real[:, ::1] out = out_np
    for ci in range(c):
        for ki in range(k):
            for kj in range(k):
                row = (ci * k + ki) * k + kj
                for i in range(ho):
                    for j in range(wo):
                        out[row, i * wo + j] = xp[ci, ki + i * stride, kj + j * stride]
    return out_np


def col2im(real[:, ::1] cols, int c, int hp, int wp, int k, int stride, int ho, int wo):
    cdef int ci, ki, kj, i, j, row
    if real is float:
        out_np = np.zeros((c, hp, wp), dtype=np.float32)
    else:
        out_np = np.zeros((c, hp, wp), dtype=np.float64)
    cdef real[:, :, ::1] out = out_np
    for ci in range(c):
        for ki in range(k):
            for kj in range(k):
                row = (ci * k + ki) * k + kj
                for i in range(ho):
                    for j in range(wo):
                        out[ci, ki + i * stride, kj + j * stride] += cols[row, i * wo + j]
    return out_np
