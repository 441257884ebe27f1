# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled LSTM scan kernels.

Same contract as ``gatedfusion.kernels.pure``; the time loop runs without
the GIL and the recurrent matmul goes through BLAS dgemm directly, which
removes the per-timestep Python dispatch cost that dominates the pure
implementation for small hidden sizes.
"""

from libc.math cimport exp, tanh
from libc.string cimport memcpy

from scipy.linalg.cython_blas cimport dgemm

import numpy as np


cdef inline double _sig(double x) nogil:
    cdef double e
    if x >= 0.0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


cdef inline void _gemm_rm(bint trans_a, bint trans_b, int m, int n, int k,
                          double alpha, double* a, int lda,
                          double* b, int ldb,
                          double beta, double* c) nogil:
    # Row-major C(m,n) = alpha * op(A)(m,k) @ op(B)(k,n) + beta * C, expressed
    # through column-major BLAS by computing C^T = op(B)^T @ op(A)^T.
    cdef char fa = b'T' if trans_a else b'N'
    cdef char fb = b'T' if trans_b else b'N'
    dgemm(&fb, &fa, &n, &m, &k, &alpha, b, &ldb, a, &lda, &beta, c, &n)


def lstm_scan_forward(double[:, :, ::1] pre, double[:, ::1] w_rec):
    cdef Py_ssize_t nb = pre.shape[0], nt = pre.shape[1], h4 = pre.shape[2]
    cdef Py_ssize_t nh = w_rec.shape[0]
    gates_arr = np.empty((nb, nt, h4))
    cell_arr = np.empty((nb, nt, nh))
    hidden_arr = np.empty((nb, nt, nh))
    abuf_arr = np.empty((nb, h4))
    hbuf_arr = np.zeros((nb, nh))
    cdef double[:, :, ::1] gates = gates_arr
    cdef double[:, :, ::1] cell = cell_arr
    cdef double[:, :, ::1] hidden = hidden_arr
    cdef double[:, ::1] abuf = abuf_arr
    cdef double[:, ::1] hbuf = hbuf_arr
    cdef Py_ssize_t b, t, j
    cdef double gi, gf, gg, go, c_prev, c, h
    with nogil:
        for t in range(nt):
            for b in range(nb):
                memcpy(&abuf[b, 0], &pre[b, t, 0], h4 * sizeof(double))
            if t > 0:
                _gemm_rm(0, 0, <int>nb, <int>h4, <int>nh, 1.0,
                         &hbuf[0, 0], <int>nh, &w_rec[0, 0], <int>h4,
                         1.0, &abuf[0, 0])
            for b in range(nb):
                for j in range(nh):
                    gi = _sig(abuf[b, j])
                    gf = _sig(abuf[b, nh + j])
                    gg = tanh(abuf[b, 2 * nh + j])
                    go = _sig(abuf[b, 3 * nh + j])
                    c_prev = cell[b, t - 1, j] if t > 0 else 0.0
                    c = gf * c_prev + gi * gg
                    h = go * tanh(c)
                    gates[b, t, j] = gi
                    gates[b, t, nh + j] = gf
                    gates[b, t, 2 * nh + j] = gg
                    gates[b, t, 3 * nh + j] = go
                    cell[b, t, j] = c
                    hidden[b, t, j] = h
                    hbuf[b, j] = h
    return gates_arr, cell_arr, hidden_arr


def lstm_scan_backward(double[:, :, ::1] gates, double[:, :, ::1] cell,
                       double[:, ::1] w_rec, double[:, :, ::1] d_hidden):
    cdef Py_ssize_t nb = gates.shape[0], nt = gates.shape[1], h4 = gates.shape[2]
    cdef Py_ssize_t nh = h4 // 4
    d_pre_arr = np.empty((nb, nt, h4))
    dabuf_arr = np.empty((nb, h4))
    dhbuf_arr = np.zeros((nb, nh))
    dcbuf_arr = np.zeros((nb, nh))
    cdef double[:, :, ::1] d_pre = d_pre_arr
    cdef double[:, ::1] dabuf = dabuf_arr
    cdef double[:, ::1] dhbuf = dhbuf_arr
    cdef double[:, ::1] dcbuf = dcbuf_arr
    cdef Py_ssize_t b, t, j
    cdef double gi, gf, gg, go, tc, dht, d_go, dct, c_prev
    with nogil:
        for t in range(nt - 1, -1, -1):
            for b in range(nb):
                for j in range(nh):
                    gi = gates[b, t, j]
                    gf = gates[b, t, nh + j]
                    gg = gates[b, t, 2 * nh + j]
                    go = gates[b, t, 3 * nh + j]
                    tc = tanh(cell[b, t, j])
                    dht = d_hidden[b, t, j] + dhbuf[b, j]
                    d_go = dht * tc
                    dct = dcbuf[b, j] + dht * go * (1.0 - tc * tc)
                    c_prev = cell[b, t - 1, j] if t > 0 else 0.0
                    dabuf[b, j] = dct * gg * gi * (1.0 - gi)
                    dabuf[b, nh + j] = dct * c_prev * gf * (1.0 - gf)
                    dabuf[b, 2 * nh + j] = dct * gi * (1.0 - gg * gg)
                    dabuf[b, 3 * nh + j] = d_go * go * (1.0 - go)
                    dcbuf[b, j] = dct * gf
                memcpy(&d_pre[b, t, 0], &dabuf[b, 0], h4 * sizeof(double))
            # dh carried to step t-1: dabuf @ w_rec^T
            _gemm_rm(0, 1, <int>nb, <int>nh, <int>h4, 1.0,
                     &dabuf[0, 0], <int>h4, &w_rec[0, 0], <int>h4,
                     0.0, &dhbuf[0, 0])
    return d_pre_arr
