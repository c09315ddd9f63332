# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: valid cross-correlation and 2x2 max pooling.

Same contracts as gfxlab.kernels.numpy_ref. Every output element is
accumulated by exactly one thread in a fixed order, so results are bitwise
reproducible for any thread count.
"""
from cython.parallel import prange
from libc.stdlib cimport free, malloc

ctypedef fused real:
    float
    double


def conv2d_forward(real[:, :, :, ::1] x, real[:, :, :, ::1] w,
                   real[::1] b, real[:, :, :, ::1] out, int threads):
    cdef Py_ssize_t N = x.shape[0], C = x.shape[1]
    cdef Py_ssize_t K = w.shape[0], KH = w.shape[2], KW = w.shape[3]
    cdef Py_ssize_t OH = out.shape[2], OW = out.shape[3]
    cdef Py_ssize_t n, k, c, i, j, oh, ow
    cdef real wv, bv
    cdef real *xrow
    cdef real *orow
    for n in prange(N, nogil=True, schedule='static', num_threads=threads):
        for k in range(K):
            bv = b[k]
            for oh in range(OH):
                orow = &out[n, k, oh, 0]
                for ow in range(OW):
                    orow[ow] = bv
            for c in range(C):
                for i in range(KH):
                    for j in range(KW):
                        wv = w[k, c, i, j]
                        for oh in range(OH):
                            xrow = &x[n, c, oh + i, j]
                            orow = &out[n, k, oh, 0]
                            for ow in range(OW):
                                orow[ow] += wv * xrow[ow]


def conv2d_backward_dx(real[:, :, :, ::1] dout, real[:, :, :, ::1] w,
                       real[:, :, :, ::1] dx, int threads):
    cdef Py_ssize_t N = dx.shape[0], C = dx.shape[1]
    cdef Py_ssize_t K = w.shape[0], KH = w.shape[2], KW = w.shape[3]
    cdef Py_ssize_t OH = dout.shape[2], OW = dout.shape[3]
    cdef Py_ssize_t n, k, c, i, j, oh, ow
    cdef real wv
    cdef real *drow
    cdef real *grow
    for n in prange(N, nogil=True, schedule='static', num_threads=threads):
        for k in range(K):
            for c in range(C):
                for i in range(KH):
                    for j in range(KW):
                        wv = w[k, c, i, j]
                        for oh in range(OH):
                            drow = &dx[n, c, oh + i, j]
                            grow = &dout[n, k, oh, 0]
                            for ow in range(OW):
                                drow[ow] += wv * grow[ow]


def conv2d_backward_dw(real[:, :, :, ::1] x, real[:, :, :, ::1] dout,
                       double[:, :, :, ::1] dw, double[::1] db, int threads):
    cdef Py_ssize_t N = x.shape[0], C = x.shape[1]
    cdef Py_ssize_t K = dout.shape[1], KH = dw.shape[2], KW = dw.shape[3]
    cdef Py_ssize_t OH = dout.shape[2], OW = dout.shape[3]
    cdef Py_ssize_t flat = K * C * KH * KW
    cdef Py_ssize_t idx, k, c, i, j, r, n, oh, ow
    cdef double acc
    cdef double *vec
    cdef real *xrow
    cdef real *grow
    # Per-element lane accumulators keep the inner loop free of a serial
    # dependency chain (vectorizable) while the final reduction stays in a
    # fixed order for bitwise reproducibility.
    for idx in prange(flat, nogil=True, schedule='static', num_threads=threads):
        k = idx // (C * KH * KW)
        r = idx - k * C * KH * KW
        c = r // (KH * KW)
        r = r - c * KH * KW
        i = r // KW
        j = r - i * KW
        vec = <double *> malloc(OW * sizeof(double))
        for ow in range(OW):
            vec[ow] = 0.0
        for n in range(N):
            for oh in range(OH):
                xrow = &x[n, c, oh + i, j]
                grow = &dout[n, k, oh, 0]
                for ow in range(OW):
                    vec[ow] += grow[ow] * xrow[ow]
        acc = 0.0
        for ow in range(OW):
            acc = acc + vec[ow]
        dw[k, c, i, j] = acc
        free(vec)
    for k in range(K):
        vec = <double *> malloc(OW * sizeof(double))
        for ow in range(OW):
            vec[ow] = 0.0
        for n in range(N):
            for oh in range(OH):
                grow = &dout[n, k, oh, 0]
                for ow in range(OW):
                    vec[ow] += grow[ow]
        acc = 0.0
        for ow in range(OW):
            acc = acc + vec[ow]
        db[k] = acc
        free(vec)


def maxpool2x2_forward(real[:, :, :, ::1] x, real[:, :, :, ::1] out,
                       unsigned char[:, :, :, ::1] code, int threads):
    cdef Py_ssize_t N = x.shape[0], C = x.shape[1]
    cdef Py_ssize_t PH = out.shape[2], PW = out.shape[3]
    cdef Py_ssize_t n, c, ph, pw
    cdef real v, cand
    cdef unsigned char ci
    cdef real *r0
    cdef real *r1
    for n in prange(N, nogil=True, schedule='static', num_threads=threads):
        for c in range(C):
            for ph in range(PH):
                r0 = &x[n, c, 2 * ph, 0]
                r1 = &x[n, c, 2 * ph + 1, 0]
                for pw in range(PW):
                    v = r0[2 * pw]
                    ci = 0
                    cand = r0[2 * pw + 1]
                    if cand > v:
                        v = cand
                        ci = 1
                    cand = r1[2 * pw]
                    if cand > v:
                        v = cand
                        ci = 2
                    cand = r1[2 * pw + 1]
                    if cand > v:
                        v = cand
                        ci = 3
                    out[n, c, ph, pw] = v
                    code[n, c, ph, pw] = ci


def maxpool2x2_backward(real[:, :, :, ::1] dout, unsigned char[:, :, :, ::1] code,
                        real[:, :, :, ::1] dx, int threads):
    cdef Py_ssize_t N = dout.shape[0], C = dout.shape[1]
    cdef Py_ssize_t PH = dout.shape[2], PW = dout.shape[3]
    cdef Py_ssize_t n, c, ph, pw
    cdef unsigned char ci
    for n in prange(N, nogil=True, schedule='static', num_threads=threads):
        for c in range(C):
            for ph in range(PH):
                for pw in range(PW):
                    ci = code[n, c, ph, pw]
                    dx[n, c, 2 * ph + (ci >> 1), 2 * pw + (ci & 1)] = dout[n, c, ph, pw]
