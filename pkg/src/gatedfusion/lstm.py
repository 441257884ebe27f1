"""LSTM layer forward/backward built on the scan kernels.

Weight layout per direction: ``w_in`` (D, 4H), ``w_rec`` (H, 4H), ``b`` (4H,)
with gate blocks ordered [input, forget, candidate, output]. The input and
bias contributions are applied with one batched matmul over all timesteps;
only the recurrent part runs inside the scan kernel.
"""

import numpy as np

from . import kernels
from .errors import ConfigError
from .numcore import sigmoid


def lstm_cell_step(x, h, c, w_in, w_rec, b):
    """Single LSTM step on one batch row set; reference semantics.

    The scan kernels must agree with repeated application of this function
    from zero initial state (the kernel tests check exactly that).
    """
    if w_in.shape[0] != x.shape[-1] or w_rec.shape[0] != h.shape[-1]:
        raise ConfigError("LSTM cell weight shapes do not match the inputs")
    nh = w_rec.shape[0]
    a = x @ w_in + h @ w_rec + b
    gi = sigmoid(a[..., :nh])
    gf = sigmoid(a[..., nh : 2 * nh])
    gg = np.tanh(a[..., 2 * nh : 3 * nh])
    go = sigmoid(a[..., 3 * nh :])
    c_new = gf * c + gi * gg
    h_new = go * np.tanh(c_new)
    return h_new, c_new


def lstm_layer_forward(x, w_in, w_rec, b):
    """Run a unidirectional layer over x (B, T, D); returns (hidden, cache)."""
    nb, nt, nd = x.shape
    if w_in.shape[0] != nd:
        raise ConfigError(
            f"LSTM input dim {nd} does not match weight shape {w_in.shape}"
        )
    pre = (x.reshape(nb * nt, nd) @ w_in + b).reshape(nb, nt, -1)
    gates, cell, hidden = kernels.lstm_scan_forward(pre, w_rec)
    return hidden, (x, w_in, w_rec, gates, cell, hidden)


def lstm_layer_backward(cache, d_hidden):
    """Backprop through one layer; returns (d_x, d_w_in, d_w_rec, d_b)."""
    x, w_in, w_rec, gates, cell, hidden = cache
    nb, nt, nd = x.shape
    nh = w_rec.shape[0]
    d_hidden = np.ascontiguousarray(d_hidden)
    d_pre = kernels.lstm_scan_backward(gates, cell, w_rec, d_hidden)
    dp = d_pre.reshape(nb * nt, 4 * nh)
    d_x = (dp @ w_in.T).reshape(nb, nt, nd)
    d_w_in = x.reshape(nb * nt, nd).T @ dp
    h_prev = np.zeros_like(hidden)
    h_prev[:, 1:, :] = hidden[:, :-1, :]
    d_w_rec = h_prev.reshape(nb * nt, nh).T @ dp
    d_b = dp.sum(axis=0)
    return d_x, d_w_in, d_w_rec, d_b
