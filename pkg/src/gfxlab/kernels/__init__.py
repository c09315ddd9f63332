"""Kernel backend selection.

The compiled extension (gfxlab.kernels._native) is preferred when it built;
otherwise the numpy reference implementation is used. Override with
GFXLAB_KERNELS={auto,native,numpy}. Thread count for the native backend
comes from GFXLAB_THREADS (default: all cores). Both backends are bitwise
deterministic run-to-run; they are not bitwise identical to each other
(different summation orders).
"""

import os

import numpy as np

from . import numpy_ref

try:
    from . import _native
except ImportError:
    _native = None


def _select():
    choice = os.environ.get("GFXLAB_KERNELS", "auto")
    if choice == "numpy":
        return "numpy"
    if choice == "native":
        if _native is None:
            raise ImportError(
                "GFXLAB_KERNELS=native but gfxlab.kernels._native is not built; "
                "reinstall without GFXLAB_NO_NATIVE"
            )
        return "native"
    if choice != "auto":
        raise ValueError(f"unknown GFXLAB_KERNELS value: {choice!r}")
    return "numpy" if _native is None else "native"


BACKEND = _select()


def _threads():
    return int(os.environ.get("GFXLAB_THREADS") or os.cpu_count() or 1)


def _as4d(a, dtype):
    return np.ascontiguousarray(a, dtype=dtype)


def conv2d_forward(x, w, b, backend=None):
    """Valid stride-1 cross-correlation of x [N,C,H,W] with w [K,C,KH,KW]."""
    if (backend or BACKEND) == "numpy":
        return numpy_ref.conv2d_forward(x, w, b)
    n, c, h, wd = x.shape
    k, cw, kh, kw = w.shape
    if c != cw:
        raise ValueError(f"channel mismatch: input {c}, kernel {cw}")
    if h < kh or wd < kw:
        raise ValueError(f"input {h}x{wd} smaller than kernel {kh}x{kw}")
    out = np.empty((n, k, h - kh + 1, wd - kw + 1), dtype=x.dtype)
    _native.conv2d_forward(
        _as4d(x, x.dtype), _as4d(w, x.dtype),
        np.ascontiguousarray(b, dtype=x.dtype), out, _threads(),
    )
    return out


def conv2d_backward(x, w, dout, need_dx=True, backend=None):
    """Gradients of conv2d_forward. Returns (dx or None, dw, db)."""
    if (backend or BACKEND) == "numpy":
        return numpy_ref.conv2d_backward(x, w, dout, need_dx=need_dx)
    xc = _as4d(x, x.dtype)
    dc = _as4d(dout, x.dtype)
    dw64 = np.zeros(w.shape, dtype=np.float64)
    db64 = np.zeros(w.shape[0], dtype=np.float64)
    _native.conv2d_backward_dw(xc, dc, dw64, db64, _threads())
    dx = None
    if need_dx:
        dx = np.zeros(x.shape, dtype=x.dtype)
        _native.conv2d_backward_dx(dc, _as4d(w, x.dtype), dx, _threads())
    return dx, dw64.astype(x.dtype), db64.astype(x.dtype)


def maxpool2x2_forward(x, backend=None):
    """2x2 stride-2 max pool. Returns (out, winner code array)."""
    if (backend or BACKEND) == "numpy":
        return numpy_ref.maxpool2x2_forward(x)
    n, c, h, wd = x.shape
    if h < 2 or wd < 2:
        raise ValueError(f"spatial dims {(h, wd)} too small for 2x2 pooling")
    out = np.empty((n, c, h // 2, wd // 2), dtype=x.dtype)
    code = np.empty(out.shape, dtype=np.uint8)
    _native.maxpool2x2_forward(_as4d(x, x.dtype), out, code, _threads())
    return out, code


def maxpool2x2_backward(dout, code, in_shape, backend=None):
    """Scatter dout back to the winning positions. Returns dx of in_shape."""
    if (backend or BACKEND) == "numpy":
        return numpy_ref.maxpool2x2_backward(dout, code, in_shape)
    dx = np.zeros(in_shape, dtype=dout.dtype)
    _native.maxpool2x2_backward(_as4d(dout, dout.dtype), code, dx, _threads())
    return dx


def available_backends():
    return ("numpy",) if _native is None else ("native", "numpy")
