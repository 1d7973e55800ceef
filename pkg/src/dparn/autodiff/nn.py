"""Layer-level differentiable functions: normalizations and LSTM."""

from __future__ import annotations

import numpy as np

from ..errors import DimensionError
from .tensor import (
    Tensor,
    _sigmoid,
    as_tensor,
    concat,
    make_node,
    matmul,
    mean,
    sigmoid,
    sqrt,
    tanh,
)

BN_MOMENTUM = 0.99
BN_EPS = 1e-5
IN_EPS = 1e-8


def _normalize(x: Tensor, axes, eps: float) -> Tensor:
    mu = mean(x, axes, keepdims=True)
    xc = x - mu
    var = mean(xc * xc, axes, keepdims=True)
    return xc / sqrt(var + eps)


def instance_norm(x, gamma, beta, axis: int = 1, eps: float = IN_EPS) -> Tensor:
    """Zero-mean, unit-variance along ``axis``, then per-channel affine.

    ``gamma``/``beta`` broadcast against the trailing (channel) axis.
    """
    x = as_tensor(x)
    if as_tensor(gamma).shape != (x.shape[-1],):
        raise DimensionError(f"instance_norm affine shape {as_tensor(gamma).shape} vs {x.shape}")
    return _normalize(x, axis, eps) * gamma + beta


def batch_norm(
    x,
    gamma,
    beta,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    training: bool,
    momentum: float = BN_MOMENTUM,
    eps: float = BN_EPS,
) -> Tensor:
    """Per-channel batch normalization for (C, F, T) inputs.

    In training mode the batch statistics over (F, T) are used and the running
    buffers are updated in place; otherwise the running buffers are used.
    """
    x = as_tensor(x)
    c = x.shape[0]
    if running_mean.shape != (c,):
        raise DimensionError(f"batch_norm statistics shape {running_mean.shape} vs {x.shape}")
    g = as_tensor(gamma).reshape(c, 1, 1)
    b = as_tensor(beta).reshape(c, 1, 1)
    if training:
        mu = x.data.mean(axis=(1, 2))
        var = x.data.var(axis=(1, 2))
        running_mean *= momentum
        running_mean += (1.0 - momentum) * mu
        running_var *= momentum
        running_var += (1.0 - momentum) * var
        return _normalize(x, (1, 2), eps) * g + b
    scale = 1.0 / np.sqrt(running_var + eps)
    xhat = (x - running_mean.reshape(c, 1, 1).astype(x.dtype)) * scale.reshape(c, 1, 1).astype(
        x.dtype
    )
    return xhat * g + b


def lstm_cell(x, h, c, weight, bias) -> tuple[Tensor, Tensor]:
    """One LSTM step built from primitive ops.

    ``weight`` is (4Hd, C+Hd) with gate blocks ordered input, forget, cell,
    output; ``bias`` is (4Hd,). ``x``, ``h``, ``c`` may carry leading batch axes.
    """
    x, h, c, weight, bias = (as_tensor(t) for t in (x, h, c, weight, bias))
    hd = h.shape[-1]
    if weight.shape != (4 * hd, x.shape[-1] + hd) or bias.shape != (4 * hd,):
        raise DimensionError(
            f"lstm_cell weight {weight.shape}/bias {bias.shape} incompatible with "
            f"input {x.shape} and hidden {h.shape}"
        )
    if c.shape != h.shape:
        raise DimensionError(f"lstm_cell state shapes differ: h {h.shape}, c {c.shape}")
    z = matmul(concat([x, h], axis=-1)[..., None, :], weight.T)[..., 0, :] + bias
    i = sigmoid(z[..., 0:hd])
    f = sigmoid(z[..., hd : 2 * hd])
    g = tanh(z[..., 2 * hd : 3 * hd])
    o = sigmoid(z[..., 3 * hd :])
    c_new = f * c + i * g
    h_new = o * tanh(c_new)
    return h_new, c_new


def lstm(x, weight, bias) -> Tensor:
    """Unidirectional LSTM over axis 1 of ``x`` (N, T, C) from zero state.

    Fused forward/backward (backpropagation through time); numerically the
    same recurrence as chaining :func:`lstm_cell`. Returns (N, T, Hd).
    """
    x, weight, bias = as_tensor(x), as_tensor(weight), as_tensor(bias)
    n, t_len, cin = x.shape
    hd = weight.shape[0] // 4
    if weight.shape != (4 * hd, cin + hd) or bias.shape != (4 * hd,):
        raise DimensionError(f"lstm weight {weight.shape}/bias {bias.shape} vs input {x.shape}")
    wx = weight.data[:, :cin]
    wh = weight.data[:, cin:]
    dt = x.dtype
    zx = x.data @ wx.T + bias.data  # (N, T, 4Hd)
    hs = np.zeros((n, t_len, hd), dtype=dt)
    cs = np.zeros((n, t_len, hd), dtype=dt)
    gates = np.zeros((n, t_len, 4 * hd), dtype=dt)
    h = np.zeros((n, hd), dtype=dt)
    c = np.zeros((n, hd), dtype=dt)
    for t in range(t_len):
        z = zx[:, t] + h @ wh.T
        gi = _sigmoid(z[:, :hd])
        gf = _sigmoid(z[:, hd : 2 * hd])
        gg = np.tanh(z[:, 2 * hd : 3 * hd])
        go = _sigmoid(z[:, 3 * hd :])
        c = gf * c + gi * gg
        h = go * np.tanh(c)
        gates[:, t, :hd] = gi
        gates[:, t, hd : 2 * hd] = gf
        gates[:, t, 2 * hd : 3 * hd] = gg
        gates[:, t, 3 * hd :] = go
        hs[:, t] = h
        cs[:, t] = c

    def backward(gout):
        dz_all = np.zeros_like(gates)
        dh_next = np.zeros((n, hd), dtype=dt)
        dc_next = np.zeros((n, hd), dtype=dt)
        for t in reversed(range(t_len)):
            gi = gates[:, t, :hd]
            gf = gates[:, t, hd : 2 * hd]
            gg = gates[:, t, 2 * hd : 3 * hd]
            go = gates[:, t, 3 * hd :]
            c_t = cs[:, t]
            c_prev = cs[:, t - 1] if t > 0 else np.zeros_like(c_t)
            tc = np.tanh(c_t)
            dh = gout[:, t] + dh_next
            dc = dc_next + dh * go * (1.0 - tc * tc)
            dz = dz_all[:, t]
            dz[:, :hd] = dc * gg * gi * (1.0 - gi)
            dz[:, hd : 2 * hd] = dc * c_prev * gf * (1.0 - gf)
            dz[:, 2 * hd : 3 * hd] = dc * gi * (1.0 - gg * gg)
            dz[:, 3 * hd :] = dh * tc * go * (1.0 - go)
            dh_next = dz @ wh
            dc_next = dc * gf
        gx = gw = gb = None
        if x.requires_grad:
            gx = dz_all @ wx
        if weight.requires_grad:
            flat_dz = dz_all.reshape(-1, 4 * hd)
            gwx = flat_dz.T @ x.data.reshape(-1, cin)
            h_prev = np.concatenate([np.zeros((n, 1, hd), dtype=dt), hs[:, :-1]], axis=1)
            gwh = flat_dz.T @ h_prev.reshape(-1, hd)
            gw = np.concatenate([gwx, gwh], axis=1)
        if bias.requires_grad:
            gb = dz_all.sum(axis=(0, 1))
        return gx, gw, gb

    return make_node(hs, (x, weight, bias), backward)
