import numpy as np
import pytest

import gfxlab.kernels as kernels

BACKENDS = kernels.available_backends()


def conv2d_bruteforce(x, w, b):
    """Direct quadruple-loop valid cross-correlation, the independent oracle."""
    n, c, h, wd = x.shape
    k, _, kh, kw = w.shape
    oh, ow = h - kh + 1, wd - kw + 1
    out = np.zeros((n, k, oh, ow), dtype=np.float64)
    for ni in range(n):
        for ki in range(k):
            for yi in range(oh):
                for xi in range(ow):
                    acc = b[ki]
                    for ci in range(c):
                        for i in range(kh):
                            for j in range(kw):
                                acc += x[ni, ci, yi + i, xi + j] * w[ki, ci, i, j]
                    out[ni, ki, yi, xi] = acc
    return out


@pytest.mark.parametrize("backend", BACKENDS)
def test_conv2d_matches_bruteforce(backend):
    rng = np.random.default_rng(7)
    x = rng.standard_normal((2, 3, 8, 9))
    w = rng.standard_normal((4, 3, 5, 5))
    b = rng.standard_normal(4)
    got = kernels.conv2d_forward(x, w, b, backend=backend)
    want = conv2d_bruteforce(x, w, b)
    assert got.shape == (2, 4, 4, 5)
    np.testing.assert_allclose(got, want, atol=1e-5)


@pytest.mark.parametrize("backend", BACKENDS)
def test_conv2d_output_shape(backend):
    x = np.zeros((1, 1, 87, 128), dtype=np.float32)
    w = np.zeros((6, 1, 5, 5), dtype=np.float32)
    out = kernels.conv2d_forward(x, w, np.zeros(6, np.float32), backend=backend)
    assert out.shape == (1, 6, 83, 124)


@pytest.mark.parametrize("backend", BACKENDS)
def test_conv2d_delta_kernel_is_center_crop(backend):
    rng = np.random.default_rng(3)
    x = rng.standard_normal((1, 1, 10, 10))
    w = np.zeros((1, 1, 5, 5))
    w[0, 0, 2, 2] = 1.0  # centered delta
    out = kernels.conv2d_forward(x, w, np.zeros(1), backend=backend)
    np.testing.assert_allclose(out[0, 0], x[0, 0, 2:-2, 2:-2], atol=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
def test_conv2d_channel_mismatch(backend):
    x = np.zeros((1, 2, 8, 8))
    w = np.zeros((3, 4, 5, 5))
    with pytest.raises(ValueError, match="channel"):
        kernels.conv2d_forward(x, w, np.zeros(3), backend=backend)


@pytest.mark.parametrize("backend", BACKENDS)
def test_conv2d_backward_matches_numeric(backend):
    rng = np.random.default_rng(11)
    x = rng.standard_normal((2, 2, 7, 8))
    w = rng.standard_normal((3, 2, 5, 5))
    b = rng.standard_normal(3)
    r = rng.standard_normal((2, 3, 3, 4))  # fixed projection, loss = sum(r * out)

    def loss():
        return float((r * kernels.conv2d_forward(x, w, b, backend=backend)).sum())

    dx, dw, db = kernels.conv2d_backward(x, w, r, backend=backend)
    h = 1e-6
    for arr, grad in ((x, dx), (w, dw), (b, db)):
        flat, gflat = arr.reshape(-1), grad.reshape(-1)
        for idx in rng.choice(flat.size, size=min(10, flat.size), replace=False):
            orig = flat[idx]
            flat[idx] = orig + h
            lp = loss()
            flat[idx] = orig - h
            lm = loss()
            flat[idx] = orig
            np.testing.assert_allclose(gflat[idx], (lp - lm) / (2 * h), rtol=1e-4, atol=1e-7)


def test_backends_agree():
    if len(BACKENDS) < 2:
        pytest.skip("only one backend built")
    rng = np.random.default_rng(5)
    x = rng.standard_normal((3, 4, 12, 11)).astype(np.float32)
    w = rng.standard_normal((5, 4, 5, 5)).astype(np.float32)
    b = rng.standard_normal(5).astype(np.float32)
    outs = [kernels.conv2d_forward(x, w, b, backend=be) for be in BACKENDS]
    np.testing.assert_allclose(outs[0], outs[1], rtol=1e-5, atol=1e-5)
    dout = rng.standard_normal(outs[0].shape).astype(np.float32)
    g0 = kernels.conv2d_backward(x, w, dout, backend=BACKENDS[0])
    g1 = kernels.conv2d_backward(x, w, dout, backend=BACKENDS[1])
    for a, b_ in zip(g0, g1):
        np.testing.assert_allclose(a, b_, rtol=1e-4, atol=1e-4)


@pytest.mark.parametrize("backend", BACKENDS)
def test_maxpool_forward_and_odd_dims(backend):
    rng = np.random.default_rng(2)
    x = rng.standard_normal((2, 3, 83, 124))
    out, code = kernels.maxpool2x2_forward(x, backend=backend)
    assert out.shape == (2, 3, 41, 62)
    assert code.dtype == np.uint8
    # oracle: block max ignoring the odd trailing row
    want = x[:, :, :82, :].reshape(2, 3, 41, 2, 62, 2).max(axis=(3, 5))
    np.testing.assert_array_equal(out, want)


@pytest.mark.parametrize("backend", BACKENDS)
def test_maxpool_backward_routes_to_winner(backend):
    x = np.arange(16, dtype=np.float64).reshape(1, 1, 4, 4)
    out, code = kernels.maxpool2x2_forward(x, backend=backend)
    dout = np.ones_like(out)
    dx = kernels.maxpool2x2_backward(dout, code, x.shape, backend=backend)
    # winners are the bottom-right corners of each window for an ascending ramp
    want = np.zeros_like(x)
    want[0, 0, 1::2, 1::2] = 1.0
    np.testing.assert_array_equal(dx, want)


@pytest.mark.parametrize("backend", BACKENDS)
def test_maxpool_tie_breaks_to_first(backend):
    x = np.zeros((1, 1, 2, 2))
    out, code = kernels.maxpool2x2_forward(x, backend=backend)
    assert out[0, 0, 0, 0] == 0.0
    assert code[0, 0, 0, 0] == 0  # all-equal window: first candidate wins


@pytest.mark.parametrize("backend", BACKENDS)
def test_maxpool_rejects_tiny_input(backend):
    with pytest.raises(ValueError):
        kernels.maxpool2x2_forward(np.zeros((1, 1, 1, 5)), backend=backend)
