"""Pure-numpy reference kernels: valid cross-correlation and 2x2 max pooling.

The convolution is lowered to a single BLAS matmul per call via an im2col
buffer built from a zero-copy sliding-window view. Used as the fallback
backend when the compiled extension is unavailable (see gfxlab.kernels).
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def conv2d_forward(x, w, b):
    """Valid (no padding, stride 1) cross-correlation.

    x: [N, C, H, W], w: [K, C, KH, KW], b: [K]. Returns [N, K, H-KH+1, W-KW+1].
    """
    n, c, h, wd = x.shape
    k, cw, kh, kw = w.shape
    if c != cw:
        raise ValueError(f"channel mismatch: input {c}, kernel {cw}")
    if h < kh or wd < kw:
        raise ValueError(f"input {h}x{wd} smaller than kernel {kh}x{kw}")
    oh, ow = h - kh + 1, wd - kw + 1
    win = sliding_window_view(x, (kh, kw), axis=(2, 3))  # [N,C,OH,OW,KH,KW]
    col = win.transpose(0, 2, 3, 1, 4, 5).reshape(n * oh * ow, c * kh * kw)
    out = col @ w.reshape(k, -1).T + b
    return np.ascontiguousarray(out.reshape(n, oh, ow, k).transpose(0, 3, 1, 2))


def conv2d_backward(x, w, dout, need_dx=True):
    """Gradients of conv2d_forward. Returns (dx or None, dw, db)."""
    n, c, h, wd = x.shape
    k, _, kh, kw = w.shape
    oh, ow = h - kh + 1, wd - kw + 1
    dflat = dout.transpose(0, 2, 3, 1).reshape(n * oh * ow, k)

    win = sliding_window_view(x, (kh, kw), axis=(2, 3))
    col = win.transpose(0, 2, 3, 1, 4, 5).reshape(n * oh * ow, c * kh * kw)
    dw = (dflat.T @ col).reshape(k, c, kh, kw)
    db = dout.sum(axis=(0, 2, 3))

    dx = None
    if need_dx:
        # Full correlation of dout with the 180-degree rotated kernels.
        pad = np.pad(dout, ((0, 0), (0, 0), (kh - 1, kh - 1), (kw - 1, kw - 1)))
        winp = sliding_window_view(pad, (kh, kw), axis=(2, 3))  # [N,K,H,W,KH,KW]
        colp = winp.transpose(0, 2, 3, 1, 4, 5).reshape(n * h * wd, k * kh * kw)
        wrot = w[:, :, ::-1, ::-1].transpose(0, 2, 3, 1).reshape(k * kh * kw, c)
        dx = np.ascontiguousarray(
            (colp @ wrot).reshape(n, h, wd, c).transpose(0, 3, 1, 2)
        )
    return dx, dw, db


def _pool_candidates(x):
    n, c, h, wd = x.shape
    ph, pw = h // 2, wd // 2
    v = x[:, :, : 2 * ph, : 2 * pw].reshape(n, c, ph, 2, pw, 2)
    # candidate order (0,0),(0,1),(1,0),(1,1); argmax picks the first max
    return np.stack(
        [v[:, :, :, 0, :, 0], v[:, :, :, 0, :, 1], v[:, :, :, 1, :, 0], v[:, :, :, 1, :, 1]],
        axis=-1,
    )


def maxpool2x2_forward(x):
    """2x2 stride-2 max pool, floor division of odd dims.

    Returns (out [N,C,H//2,W//2], code [same shape, uint8 in 0..3]) where the
    code records which corner of each window won (for the backward scatter).
    """
    if x.shape[2] < 2 or x.shape[3] < 2:
        raise ValueError(f"spatial dims {x.shape[2:]} too small for 2x2 pooling")
    cand = _pool_candidates(x)
    code = cand.argmax(axis=-1).astype(np.uint8)
    return np.ascontiguousarray(cand.max(axis=-1)), code


def maxpool2x2_backward(dout, code, in_shape):
    """Scatter dout back to the winning positions. Returns dx of in_shape."""
    n, c, h, wd = in_shape
    ph, pw = h // 2, wd // 2
    dx = np.zeros(in_shape, dtype=dout.dtype)
    nn, cc, hh, ww = np.ix_(range(n), range(c), range(ph), range(pw))
    dx[nn, cc, 2 * hh + (code >> 1), 2 * ww + (code & 1)] = dout
    return dx
