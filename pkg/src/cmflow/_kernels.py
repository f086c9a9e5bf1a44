"""Numba kernels for bicubic Hermite evaluation on periodic grids.

All kernels take node data stacked as ``data[field, plane, i, j]`` with
planes ``(f, df/dx, df/dy, d2f/dxdy)``, node (i, j) at (i*hx, j*hy), and
evaluate at flat query-point arrays.  Points are wrapped into the periodic
domain by floor division, with a relative snap to the nearest node so that
querying exact node coordinates reproduces stored values bit for bit.
"""

import numpy as np
from numba import njit, prange

# Snap width for node coincidence; covers the rounding of i*h followed by /h.
_SNAP = 4.0 * np.finfo(np.float64).eps


@njit(cache=True, inline="always")
def _cell(x, h, n):
    t = x / h
    r = np.rint(t)
    if abs(t - r) <= _SNAP * max(1.0, abs(t)):
        return int(r) % n, 0.0
    f = np.floor(t)
    return int(f) % n, t - f


@njit(cache=True, parallel=True)
def eval_values(data, hx, hy, xq, yq, out):
    """out[f, p] = interpolant value of field f at point p."""
    nf = data.shape[0]
    nx = data.shape[2]
    ny = data.shape[3]
    for p in prange(xq.shape[0]):
        i0, s = _cell(xq[p], hx, nx)
        j0, t = _cell(yq[p], hy, ny)
        i1 = (i0 + 1) % nx
        j1 = (j0 + 1) % ny
        s2 = s * s
        s3 = s2 * s
        t2 = t * t
        t3 = t2 * t
        # value/derivative cardinal basis in x (a: value dofs, b: slope dofs)
        ax0 = 2.0 * s3 - 3.0 * s2 + 1.0
        ax1 = -2.0 * s3 + 3.0 * s2
        bx0 = (s3 - 2.0 * s2 + s) * hx
        bx1 = (s3 - s2) * hx
        ay0 = 2.0 * t3 - 3.0 * t2 + 1.0
        ay1 = -2.0 * t3 + 3.0 * t2
        by0 = (t3 - 2.0 * t2 + t) * hy
        by1 = (t3 - t2) * hy
        for f in range(nf):
            v = (data[f, 0, i0, j0] * ax0 * ay0 + data[f, 0, i1, j0] * ax1 * ay0
                 + data[f, 0, i0, j1] * ax0 * ay1 + data[f, 0, i1, j1] * ax1 * ay1)
            v += (data[f, 1, i0, j0] * bx0 * ay0 + data[f, 1, i1, j0] * bx1 * ay0
                  + data[f, 1, i0, j1] * bx0 * ay1 + data[f, 1, i1, j1] * bx1 * ay1)
            v += (data[f, 2, i0, j0] * ax0 * by0 + data[f, 2, i1, j0] * ax1 * by0
                  + data[f, 2, i0, j1] * ax0 * by1 + data[f, 2, i1, j1] * ax1 * by1)
            v += (data[f, 3, i0, j0] * bx0 * by0 + data[f, 3, i1, j0] * bx1 * by0
                  + data[f, 3, i0, j1] * bx0 * by1 + data[f, 3, i1, j1] * bx1 * by1)
            out[f, p] = v


@njit(cache=True, parallel=True)
def eval_grads(data, hx, hy, xq, yq, val, gx, gy):
    """Value plus analytic first derivatives of the interpolant."""
    nf = data.shape[0]
    nx = data.shape[2]
    ny = data.shape[3]
    for p in prange(xq.shape[0]):
        i0, s = _cell(xq[p], hx, nx)
        j0, t = _cell(yq[p], hy, ny)
        i1 = (i0 + 1) % nx
        j1 = (j0 + 1) % ny
        s2 = s * s
        s3 = s2 * s
        t2 = t * t
        t3 = t2 * t
        ax0 = 2.0 * s3 - 3.0 * s2 + 1.0
        ax1 = -2.0 * s3 + 3.0 * s2
        bx0 = (s3 - 2.0 * s2 + s) * hx
        bx1 = (s3 - s2) * hx
        ay0 = 2.0 * t3 - 3.0 * t2 + 1.0
        ay1 = -2.0 * t3 + 3.0 * t2
        by0 = (t3 - 2.0 * t2 + t) * hy
        by1 = (t3 - t2) * hy
        # d/dx of basis (chain factor 1/hx; slope dofs carry hx, so it cancels)
        dax0 = (6.0 * s2 - 6.0 * s) / hx
        dax1 = -dax0
        dbx0 = 3.0 * s2 - 4.0 * s + 1.0
        dbx1 = 3.0 * s2 - 2.0 * s
        day0 = (6.0 * t2 - 6.0 * t) / hy
        day1 = -day0
        dby0 = 3.0 * t2 - 4.0 * t + 1.0
        dby1 = 3.0 * t2 - 2.0 * t
        for f in range(nf):
            c00 = data[f, 0, i0, j0]
            c10 = data[f, 0, i1, j0]
            c01 = data[f, 0, i0, j1]
            c11 = data[f, 0, i1, j1]
            x00 = data[f, 1, i0, j0]
            x10 = data[f, 1, i1, j0]
            x01 = data[f, 1, i0, j1]
            x11 = data[f, 1, i1, j1]
            y00 = data[f, 2, i0, j0]
            y10 = data[f, 2, i1, j0]
            y01 = data[f, 2, i0, j1]
            y11 = data[f, 2, i1, j1]
            m00 = data[f, 3, i0, j0]
            m10 = data[f, 3, i1, j0]
            m01 = data[f, 3, i0, j1]
            m11 = data[f, 3, i1, j1]
            v = (c00 * ax0 * ay0 + c10 * ax1 * ay0 + c01 * ax0 * ay1 + c11 * ax1 * ay1
                 + x00 * bx0 * ay0 + x10 * bx1 * ay0 + x01 * bx0 * ay1 + x11 * bx1 * ay1
                 + y00 * ax0 * by0 + y10 * ax1 * by0 + y01 * ax0 * by1 + y11 * ax1 * by1
                 + m00 * bx0 * by0 + m10 * bx1 * by0 + m01 * bx0 * by1 + m11 * bx1 * by1)
            dx = (c00 * dax0 * ay0 + c10 * dax1 * ay0 + c01 * dax0 * ay1 + c11 * dax1 * ay1
                  + x00 * dbx0 * ay0 + x10 * dbx1 * ay0 + x01 * dbx0 * ay1 + x11 * dbx1 * ay1
                  + y00 * dax0 * by0 + y10 * dax1 * by0 + y01 * dax0 * by1 + y11 * dax1 * by1
                  + m00 * dbx0 * by0 + m10 * dbx1 * by0 + m01 * dbx0 * by1 + m11 * dbx1 * by1)
            dy = (c00 * ax0 * day0 + c10 * ax1 * day0 + c01 * ax0 * day1 + c11 * ax1 * day1
                  + x00 * bx0 * day0 + x10 * bx1 * day0 + x01 * bx0 * day1 + x11 * bx1 * day1
                  + y00 * ax0 * dby0 + y10 * ax1 * dby0 + y01 * ax0 * dby1 + y11 * ax1 * dby1
                  + m00 * bx0 * dby0 + m10 * bx1 * dby0 + m01 * bx0 * dby1 + m11 * bx1 * dby1)
            val[f, p] = v
            gx[f, p] = dx
            gy[f, p] = dy


@njit(cache=True, parallel=True)
def eval_hess(data, hx, hy, xq, yq, val, gx, gy, hxx, hxy, hyy):
    """Value, gradient and piecewise second derivatives of the interpolant."""
    nf = data.shape[0]
    nx = data.shape[2]
    ny = data.shape[3]
    for p in prange(xq.shape[0]):
        i0, s = _cell(xq[p], hx, nx)
        j0, t = _cell(yq[p], hy, ny)
        i1 = (i0 + 1) % nx
        j1 = (j0 + 1) % ny
        s2 = s * s
        s3 = s2 * s
        t2 = t * t
        t3 = t2 * t
        ax0 = 2.0 * s3 - 3.0 * s2 + 1.0
        ax1 = -2.0 * s3 + 3.0 * s2
        bx0 = (s3 - 2.0 * s2 + s) * hx
        bx1 = (s3 - s2) * hx
        ay0 = 2.0 * t3 - 3.0 * t2 + 1.0
        ay1 = -2.0 * t3 + 3.0 * t2
        by0 = (t3 - 2.0 * t2 + t) * hy
        by1 = (t3 - t2) * hy
        dax0 = (6.0 * s2 - 6.0 * s) / hx
        dax1 = -dax0
        dbx0 = 3.0 * s2 - 4.0 * s + 1.0
        dbx1 = 3.0 * s2 - 2.0 * s
        day0 = (6.0 * t2 - 6.0 * t) / hy
        day1 = -day0
        dby0 = 3.0 * t2 - 4.0 * t + 1.0
        dby1 = 3.0 * t2 - 2.0 * t
        d2ax0 = (12.0 * s - 6.0) / (hx * hx)
        d2ax1 = -d2ax0
        d2bx0 = (6.0 * s - 4.0) / hx
        d2bx1 = (6.0 * s - 2.0) / hx
        d2ay0 = (12.0 * t - 6.0) / (hy * hy)
        d2ay1 = -d2ay0
        d2by0 = (6.0 * t - 4.0) / hy
        d2by1 = (6.0 * t - 2.0) / hy
        for f in range(nf):
            c00 = data[f, 0, i0, j0]
            c10 = data[f, 0, i1, j0]
            c01 = data[f, 0, i0, j1]
            c11 = data[f, 0, i1, j1]
            x00 = data[f, 1, i0, j0]
            x10 = data[f, 1, i1, j0]
            x01 = data[f, 1, i0, j1]
            x11 = data[f, 1, i1, j1]
            y00 = data[f, 2, i0, j0]
            y10 = data[f, 2, i1, j0]
            y01 = data[f, 2, i0, j1]
            y11 = data[f, 2, i1, j1]
            m00 = data[f, 3, i0, j0]
            m10 = data[f, 3, i1, j0]
            m01 = data[f, 3, i0, j1]
            m11 = data[f, 3, i1, j1]
            val[f, p] = (c00 * ax0 * ay0 + c10 * ax1 * ay0 + c01 * ax0 * ay1 + c11 * ax1 * ay1
                         + x00 * bx0 * ay0 + x10 * bx1 * ay0 + x01 * bx0 * ay1 + x11 * bx1 * ay1
                         + y00 * ax0 * by0 + y10 * ax1 * by0 + y01 * ax0 * by1 + y11 * ax1 * by1
                         + m00 * bx0 * by0 + m10 * bx1 * by0 + m01 * bx0 * by1 + m11 * bx1 * by1)
            gx[f, p] = (c00 * dax0 * ay0 + c10 * dax1 * ay0 + c01 * dax0 * ay1 + c11 * dax1 * ay1
                        + x00 * dbx0 * ay0 + x10 * dbx1 * ay0 + x01 * dbx0 * ay1 + x11 * dbx1 * ay1
                        + y00 * dax0 * by0 + y10 * dax1 * by0 + y01 * dax0 * by1 + y11 * dax1 * by1
                        + m00 * dbx0 * by0 + m10 * dbx1 * by0 + m01 * dbx0 * by1 + m11 * dbx1 * by1)
            gy[f, p] = (c00 * ax0 * day0 + c10 * ax1 * day0 + c01 * ax0 * day1 + c11 * ax1 * day1
                        + x00 * bx0 * day0 + x10 * bx1 * day0 + x01 * bx0 * day1 + x11 * bx1 * day1
                        + y00 * ax0 * dby0 + y10 * ax1 * dby0 + y01 * ax0 * dby1 + y11 * ax1 * dby1
                        + m00 * bx0 * dby0 + m10 * bx1 * dby0 + m01 * bx0 * dby1 + m11 * bx1 * dby1)
            hxx[f, p] = (c00 * d2ax0 * ay0 + c10 * d2ax1 * ay0 + c01 * d2ax0 * ay1 + c11 * d2ax1 * ay1
                         + x00 * d2bx0 * ay0 + x10 * d2bx1 * ay0 + x01 * d2bx0 * ay1 + x11 * d2bx1 * ay1
                         + y00 * d2ax0 * by0 + y10 * d2ax1 * by0 + y01 * d2ax0 * by1 + y11 * d2ax1 * by1
                         + m00 * d2bx0 * by0 + m10 * d2bx1 * by0 + m01 * d2bx0 * by1 + m11 * d2bx1 * by1)
            hxy[f, p] = (c00 * dax0 * day0 + c10 * dax1 * day0 + c01 * dax0 * day1 + c11 * dax1 * day1
                         + x00 * dbx0 * day0 + x10 * dbx1 * day0 + x01 * dbx0 * day1 + x11 * dbx1 * day1
                         + y00 * dax0 * dby0 + y10 * dax1 * dby0 + y01 * dax0 * dby1 + y11 * dax1 * dby1
                         + m00 * dbx0 * dby0 + m10 * dbx1 * dby0 + m01 * dbx0 * dby1 + m11 * dbx1 * dby1)
            hyy[f, p] = (c00 * ax0 * d2ay0 + c10 * ax1 * d2ay0 + c01 * ax0 * d2ay1 + c11 * ax1 * d2ay1
                         + x00 * bx0 * d2ay0 + x10 * bx1 * d2ay0 + x01 * bx0 * d2ay1 + x11 * bx1 * d2ay1
                         + y00 * ax0 * d2by0 + y10 * ax1 * d2by0 + y01 * ax0 * d2by1 + y11 * ax1 * d2by1
                         + m00 * bx0 * d2by0 + m10 * bx1 * d2by0 + m01 * bx0 * d2by1 + m11 * bx1 * d2by1)
