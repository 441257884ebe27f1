"""Pure-NumPy LSTM scan kernels: the fallback when the compiled core is absent.

Both implementations honour the same contract.

``lstm_scan_forward(pre, w_rec)``
    pre    (B, T, 4H) gate pre-activations, already ``x @ w_in + b``.
    w_rec  (H, 4H) recurrent weights.
    Initial hidden and cell states are zero. Returns ``(gates, cell, hidden)``
    where gates (B, T, 4H) holds post-activation values in
    [input, forget, candidate, output] order and cell/hidden are (B, T, H).

``lstm_scan_backward(gates, cell, w_rec, d_hidden)``
    d_hidden (B, T, H) upstream gradient on every hidden output.
    Returns d_pre (B, T, 4H), the gradient on the pre-activations; the caller
    derives input/weight/bias gradients from it with batched matmuls.
"""

import numpy as np

from ..numcore import sigmoid


def lstm_scan_forward(pre, w_rec):
    nb, nt, h4 = pre.shape
    nh = w_rec.shape[0]
    gates = np.empty((nb, nt, h4))
    cell = np.empty((nb, nt, nh))
    hidden = np.empty((nb, nt, nh))
    h = np.zeros((nb, nh))
    c = np.zeros((nb, nh))
    for t in range(nt):
        a = pre[:, t, :] + h @ w_rec
        gi = sigmoid(a[:, :nh])
        gf = sigmoid(a[:, nh : 2 * nh])
        gg = np.tanh(a[:, 2 * nh : 3 * nh])
        go = sigmoid(a[:, 3 * nh :])
        c = gf * c + gi * gg
        h = go * np.tanh(c)
        gates[:, t, :nh] = gi
        gates[:, t, nh : 2 * nh] = gf
        gates[:, t, 2 * nh : 3 * nh] = gg
        gates[:, t, 3 * nh :] = go
        cell[:, t, :] = c
        hidden[:, t, :] = h
    return gates, cell, hidden


def lstm_scan_backward(gates, cell, w_rec, d_hidden):
    nb, nt, h4 = gates.shape
    nh = h4 // 4
    tc = np.tanh(cell)
    d_pre = np.empty((nb, nt, h4))
    dh = np.zeros((nb, nh))
    dc = np.zeros((nb, nh))
    w_rec_t = w_rec.T.copy()
    for t in reversed(range(nt)):
        gi = gates[:, t, :nh]
        gf = gates[:, t, nh : 2 * nh]
        gg = gates[:, t, 2 * nh : 3 * nh]
        go = gates[:, t, 3 * nh :]
        dht = d_hidden[:, t, :] + dh
        d_go = dht * tc[:, t, :]
        dct = dc + dht * go * (1.0 - tc[:, t, :] ** 2)
        c_prev = cell[:, t - 1, :] if t > 0 else 0.0
        d_pre[:, t, :nh] = dct * gg * gi * (1.0 - gi)
        d_pre[:, t, nh : 2 * nh] = dct * c_prev * gf * (1.0 - gf)
        d_pre[:, t, 2 * nh : 3 * nh] = dct * gi * (1.0 - gg**2)
        d_pre[:, t, 3 * nh :] = d_go * go * (1.0 - go)
        dc = dct * gf
        dh = d_pre[:, t, :] @ w_rec_t
    return d_pre
