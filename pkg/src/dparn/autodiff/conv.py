"""2-D convolution and its transpose over (channel, frequency, time) tensors.

Frequency is zero padded symmetrically by ``(kF - 1) // 2`` on each side unless
an explicit pad is given. Time padding is one-sided: ``causal`` prepends
``kT - 1`` zero frames, ``anticausal`` appends them.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import DimensionError
from .tensor import Tensor, as_tensor, make_node


def default_freq_pad(k_freq: int) -> tuple[int, int]:
    p = (k_freq - 1) // 2
    return p, p


def _time_pad(k_time: int, mode: str) -> tuple[int, int]:
    if mode == "causal":
        return k_time - 1, 0
    if mode == "anticausal":
        return 0, k_time - 1
    raise ValueError(f"unknown time padding {mode!r}")


def _pair(v) -> tuple[int, int]:
    if isinstance(v, int):
        return v, v
    a, b = v
    return int(a), int(b)


def conv_output_freq(n_freq: int, k_freq: int, stride: int, pad: tuple[int, int]) -> int:
    return (n_freq + pad[0] + pad[1] - k_freq) // stride + 1


def _im2col(xp: np.ndarray, kernel, stride) -> np.ndarray:
    """(C, Fp, Tp) -> (C*kF*kT, Fo, To) patch matrix."""
    kF, kT = kernel
    sF, sT = stride
    win = sliding_window_view(xp, (kF, kT), axis=(1, 2))[:, ::sF, ::sT]
    c, fo, to = win.shape[:3]
    return np.ascontiguousarray(win.transpose(0, 3, 4, 1, 2)).reshape(c * kF * kT, fo, to)


def _col2im(cols: np.ndarray, padded_shape, kernel, stride) -> np.ndarray:
    """Adjoint of :func:`_im2col`; ``cols`` is (C, kF, kT, Fo, To)."""
    kF, kT = kernel
    sF, sT = stride
    _, _, _, fo, to = cols.shape
    out = np.zeros(padded_shape, dtype=cols.dtype)
    for i in range(kF):
        for j in range(kT):
            out[:, i : i + sF * fo : sF, j : j + sT * to : sT] += cols[:, i, j]
    return out


def conv2d(x, w, b=None, stride=(1, 1), freq_pad=None, time_pad: str = "causal") -> Tensor:
    """Convolve ``x`` (Cin, F, T) with ``w`` (Cout, Cin, kF, kT).

    Output is (Cout, F', T') with ``F' = (F + padF - kF) // sF + 1`` and, for a
    unit time stride, ``T' = T``.
    """
    x, w = as_tensor(x), as_tensor(w)
    b = as_tensor(b) if b is not None else None
    if x.ndim != 3 or w.ndim != 4:
        raise DimensionError(f"conv2d expects x rank 3 and w rank 4, got {x.shape}, {w.shape}")
    cout, cin, kF, kT = w.shape
    if x.shape[0] != cin:
        raise DimensionError(f"conv2d channel mismatch: input {x.shape} vs weight {w.shape}")
    if min(kF, kT) < 1:
        raise DimensionError(f"conv2d kernel must be positive, got {(kF, kT)}")
    stride = _pair(stride)
    if min(stride) < 1:
        raise DimensionError(f"conv2d stride must be positive, got {stride}")
    fpad = default_freq_pad(kF) if freq_pad is None else _pair(freq_pad)
    tpad = _time_pad(kT, time_pad)
    _, nf, nt = x.shape
    if nf + sum(fpad) < kF or nt + sum(tpad) < kT:
        raise DimensionError(
            f"conv2d kernel {(kF, kT)} larger than padded input {(nf + sum(fpad), nt + sum(tpad))}"
        )

    xp = np.pad(x.data, ((0, 0), fpad, tpad))
    cols = _im2col(xp, (kF, kT), stride)
    fo, to = cols.shape[1:]
    cols2 = cols.reshape(cols.shape[0], fo * to)
    w2 = w.data.reshape(cout, -1)
    out = (w2 @ cols2).reshape(cout, fo, to)
    if b is not None:
        out = out + b.data[:, None, None]

    def backward(g):
        g2 = g.reshape(cout, fo * to)
        gx = gw = gb = None
        if x.requires_grad:
            dcols = (w2.T @ g2).reshape(cin, kF, kT, fo, to)
            dxp = _col2im(dcols, xp.shape, (kF, kT), stride)
            gx = dxp[:, fpad[0] : fpad[0] + nf, tpad[0] : tpad[0] + nt]
        if w.requires_grad:
            gw = (g2 @ cols2.T).reshape(w.shape)
        if b is not None and b.requires_grad:
            gb = g.sum(axis=(1, 2))
        return gx, gw, gb

    parents = (x, w) if b is None else (x, w, b)
    return make_node(out, parents, backward)


def conv2d_transpose(
    x, w, b=None, stride=(1, 1), out_freq: int | None = None, freq_pad=None
) -> Tensor:
    """Transposed convolution of ``x`` (Cin, F, T) with ``w`` (Cin, Cout, kF, kT).

    In frequency this is the exact adjoint of :func:`conv2d` with the same
    kernel, stride and pad, producing ``out_freq`` bins. In time it keeps the
    first T frames of the full output, so frame t only sees inputs at frames
    ``<= t``; that makes it the adjoint of the *anticausal* conv2d.
    """
    x, w = as_tensor(x), as_tensor(w)
    b = as_tensor(b) if b is not None else None
    if x.ndim != 3 or w.ndim != 4:
        raise DimensionError(
            f"conv2d_transpose expects x rank 3 and w rank 4, got {x.shape}, {w.shape}"
        )
    cin, cout, kF, kT = w.shape
    if x.shape[0] != cin:
        raise DimensionError(
            f"conv2d_transpose channel mismatch: input {x.shape} vs weight {w.shape}"
        )
    stride = _pair(stride)
    sF, sT = stride
    fpad = default_freq_pad(kF) if freq_pad is None else _pair(freq_pad)
    _, nf, nt = x.shape
    full_f = (nf - 1) * sF + kF
    if out_freq is None:
        out_freq = full_f - fpad[0] - fpad[1]
    if out_freq < 1 or conv_output_freq(out_freq, kF, sF, fpad) != nf:
        raise DimensionError(
            f"conv2d_transpose output extent {out_freq} inconsistent with input "
            f"extent {nf} (kernel {kF}, stride {sF}, pad {fpad})"
        )
    full_t = (nt - 1) * sT + kT
    out_t = (nt - 1) * sT + 1

    x2 = x.data.reshape(cin, nf * nt)
    w2 = w.data.reshape(cin, cout * kF * kT)
    cols = (w2.T @ x2).reshape(cout, kF, kT, nf, nt)
    # pad the freq canvas so that out_freq bins after the left crop always exist
    canvas_f = max(full_f, fpad[0] + out_freq)
    full = _col2im(cols, (cout, canvas_f, full_t), (kF, kT), stride)
    out = full[:, fpad[0] : fpad[0] + out_freq, :out_t]
    if b is not None:
        out = out + b.data[:, None, None]

    def backward(g):
        gfull = np.zeros((cout, canvas_f, full_t), dtype=g.dtype)
        gfull[:, fpad[0] : fpad[0] + out_freq, :out_t] = g
        gcols = _im2col(gfull[:, :full_f], (kF, kT), stride)
        gcols2 = gcols.reshape(gcols.shape[0], nf * nt)
        gx = gw = gb = None
        if x.requires_grad:
            gx = (w2 @ gcols2).reshape(x.shape)
        if w.requires_grad:
            gw = (x2 @ gcols2.T).reshape(w.shape)
        if b is not None and b.requires_grad:
            gb = g.sum(axis=(1, 2))
        return gx, gw, gb

    parents = (x, w) if b is None else (x, w, b)
    return make_node(np.ascontiguousarray(out), parents, backward)
