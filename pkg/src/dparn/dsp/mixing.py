"""SNR-controlled mixing of clean speech and noise."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateInputError
from .wav import WavBuffer


@dataclass
class Mixture:
    noisy: WavBuffer
    clean: WavBuffer
    noise: WavBuffer
    noise_gain: float
    output_gain: float


def power(x: np.ndarray) -> float:
    return float(np.mean(np.asarray(x, dtype=np.float64) ** 2))


def measured_snr_db(clean: np.ndarray, noise: np.ndarray) -> float:
    return 10.0 * np.log10(power(clean) / power(noise))


def mix_at_snr(
    clean: WavBuffer, noise: WavBuffer, snr_db: float, peak_normalize: bool = False
) -> Mixture:
    """Scale ``noise`` so the clean-to-noise power ratio equals ``snr_db``.

    Noise is looped or truncated to the clean length. With ``peak_normalize``
    the mixture is scaled to peak 0.99 when it would exceed that, and the same
    gain is applied to the returned clean and noise references.
    """
    s = np.asarray(clean.samples, dtype=np.float64).reshape(-1)
    p_clean = power(s)
    if p_clean == 0.0:
        raise DegenerateInputError("clean signal is silent; SNR undefined")
    n = np.resize(np.asarray(noise.samples, dtype=np.float64).reshape(-1), len(s))
    p_noise = power(n)
    if p_noise == 0.0:
        raise DegenerateInputError("noise signal is silent; SNR undefined")
    gain = float(np.sqrt(p_clean / (p_noise * 10.0 ** (snr_db / 10.0))))
    n = gain * n
    y = s + n
    out_gain = 1.0
    if peak_normalize:
        peak = float(np.max(np.abs(y)))
        if peak > 0.99:
            out_gain = 0.99 / peak
    rate = clean.sample_rate
    return Mixture(
        WavBuffer(y * out_gain, rate),
        WavBuffer(s * out_gain, rate),
        WavBuffer(n * out_gain, rate),
        gain,
        out_gain,
    )
