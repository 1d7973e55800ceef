"""Power-compressed complex spectral loss."""

from __future__ import annotations

import numpy as np

from ..autodiff import Tensor, tsum
from ..autodiff.tensor import as_tensor, make_node
from ..errors import DimensionError

GAMMA = 2.0 / 3.0
MAG_FLOOR = 1e-9


def _compress_arrays(re, im, gamma, floor):
    mag = np.hypot(re, im)
    live = mag >= floor
    safe = np.where(live, mag, 1.0)
    scale = np.where(live, safe ** (gamma - 1.0), 0.0)
    return re * scale, im * scale, np.where(live, safe**gamma, 0.0), safe, live


def power_compress(planes, gamma: float = GAMMA, floor: float = MAG_FLOOR) -> Tensor:
    """Map (2, ...) real/imag planes to (3, ...) = (|S|^g cos, |S|^g sin, |S|^g).

    Bins with magnitude below ``floor`` map to zero with zero gradient (phase
    taken as 0 there).
    """
    planes = as_tensor(planes)
    if planes.shape[0] != 2:
        raise DimensionError(f"power_compress expects (2, ...) planes, got {planes.shape}")
    re, im = planes.data[0], planes.data[1]
    cre, cim, cmag, mag, live = _compress_arrays(re, im, gamma, floor)
    out = np.stack([cre, cim, cmag])

    def backward(g):
        m_g1 = np.where(live, mag ** (gamma - 1.0), 0.0)
        m_g3 = np.where(live, (gamma - 1.0) * mag ** (gamma - 3.0), 0.0)
        m_g2 = np.where(live, gamma * mag ** (gamma - 2.0), 0.0)
        g_re, g_im, g_mag = g
        d_re = g_re * (m_g1 + m_g3 * re * re) + g_im * (m_g3 * re * im) + g_mag * m_g2 * re
        d_im = g_re * (m_g3 * re * im) + g_im * (m_g1 + m_g3 * im * im) + g_mag * m_g2 * im
        return (np.stack([d_re, d_im]),)

    return make_node(out, (planes,), backward)


def compress_complex(spec: np.ndarray, gamma: float = GAMMA, floor: float = MAG_FLOOR) -> np.ndarray:
    """Power compression of a complex array (magnitude^gamma, phase kept)."""
    cre, cim, _, _, _ = _compress_arrays(spec.real, spec.imag, gamma, floor)
    return cre + 1j * cim


def _planes(x) -> Tensor:
    if isinstance(x, Tensor):
        return x
    x = np.asarray(x)
    if np.iscomplexobj(x):
        return Tensor(np.stack([x.real, x.imag]))
    return Tensor(x)


def _pair(est, ref, gamma):
    est, ref = _planes(est), _planes(ref)
    if est.shape != ref.shape:
        raise DimensionError(f"loss shape mismatch: estimate {est.shape} vs reference {ref.shape}")
    return power_compress(est, gamma), power_compress(ref, gamma)


def loss_ri(est, ref, gamma: float = GAMMA) -> Tensor:
    """Squared Frobenius distance of the compressed real and imaginary planes."""
    ce, cr = _pair(est, ref, gamma)
    d = ce[0:2] - cr[0:2]
    return tsum(d * d)


def loss_mag(est, ref, gamma: float = GAMMA) -> Tensor:
    """Squared Frobenius distance of the compressed magnitudes."""
    ce, cr = _pair(est, ref, gamma)
    d = ce[2] - cr[2]
    return tsum(d * d)


def total_loss(est, ref, gamma: float = GAMMA, parts: dict | None = None) -> Tensor:
    """Sum of the complex and magnitude terms, sharing one compression pass."""
    ce, cr = _pair(est, ref, gamma)
    d = ce - cr
    ri = tsum(d[0:2] * d[0:2])
    mag = tsum(d[2] * d[2])
    if parts is not None:
        parts["loss_ri"] = float(ri.data)
        parts["loss_mag"] = float(mag.data)
    return ri + mag
