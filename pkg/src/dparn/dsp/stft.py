"""Analysis/synthesis STFT at 48 kHz: 25 ms periodic Hann, 12.5 ms hop."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, DimensionError
from .wav import FULL_BAND_RATE, WavBuffer


@dataclass(frozen=True)
class StftConfig:
    win_length: int = 1200
    hop: int = 600
    n_fft: int = 1200
    sample_rate: int = FULL_BAND_RATE

    @property
    def n_bins(self) -> int:
        return self.n_fft // 2 + 1

    @property
    def bin_hz(self) -> float:
        return self.sample_rate / self.n_fft

    def window(self, dtype=np.float64) -> np.ndarray:
        return periodic_hann(self.win_length).astype(dtype)

    def bin_frequencies(self) -> np.ndarray:
        """Physical frequency of every bin, 0 Hz up to Nyquist."""
        return np.arange(self.n_bins) * self.bin_hz


CANONICAL = StftConfig()


def periodic_hann(n: int) -> np.ndarray:
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def n_frames(n_samples: int, cfg: StftConfig = CANONICAL) -> int:
    return max(1, -(-n_samples // cfg.hop))


def stft(x, cfg: StftConfig = CANONICAL, dtype=np.float64) -> np.ndarray:
    """Complex spectrogram of shape (T, F) with T = ceil(len / hop).

    Frame t covers samples [t*hop, t*hop + win_length); the tail is zero padded.
    Accepts a mono WavBuffer (rate checked) or a 1-D array.
    """
    if isinstance(x, WavBuffer):
        if x.sample_rate != cfg.sample_rate:
            raise ConfigurationError(
                f"stft expects {cfg.sample_rate} Hz input, got {x.sample_rate} Hz"
            )
        if x.channels != 1:
            raise ConfigurationError("stft expects mono input; downmix first")
        x = x.samples
    x = np.asarray(x, dtype=dtype)
    if x.ndim != 1:
        raise DimensionError(f"stft expects a 1-D signal, got shape {x.shape}")
    t = n_frames(len(x), cfg)
    padded = np.zeros((t - 1) * cfg.hop + cfg.win_length, dtype=dtype)
    padded[: len(x)] = x
    frames = np.lib.stride_tricks.sliding_window_view(padded, cfg.win_length)[:: cfg.hop]
    spec = np.fft.rfft(frames * cfg.window(dtype), n=cfg.n_fft, axis=-1)
    return spec.astype(np.complex128 if dtype == np.float64 else np.complex64)


def window_sumsquare(n_frames_: int, cfg: StftConfig = CANONICAL) -> np.ndarray:
    w2 = cfg.window() ** 2
    out = np.zeros((n_frames_ - 1) * cfg.hop + cfg.win_length)
    for t in range(n_frames_):
        out[t * cfg.hop : t * cfg.hop + cfg.win_length] += w2
    return out


def istft(spec: np.ndarray, cfg: StftConfig = CANONICAL, length: int | None = None) -> np.ndarray:
    """Weighted overlap-add inverse of :func:`stft` with a Hann synthesis window.

    The overlap-added signal is divided by the summed squared windows; samples
    where that sum vanishes (the very first sample) are set to zero.
    """
    spec = np.asarray(spec)
    if spec.ndim != 2 or spec.shape[1] != cfg.n_bins:
        raise DimensionError(f"istft expects (T, {cfg.n_bins}) spectrogram, got {spec.shape}")
    real_dtype = np.float32 if spec.dtype == np.complex64 else np.float64
    t = spec.shape[0]
    frames = np.fft.irfft(spec, n=cfg.n_fft, axis=-1)[:, : cfg.win_length] * cfg.window()
    out = np.zeros((t - 1) * cfg.hop + cfg.win_length)
    for i in range(t):
        out[i * cfg.hop : i * cfg.hop + cfg.win_length] += frames[i]
    norm = window_sumsquare(t, cfg)
    nz = norm > 1e-10
    out[nz] /= norm[nz]
    out[~nz] = 0.0
    if length is not None:
        out = out[:length] if length <= len(out) else np.pad(out, (0, length - len(out)))
    return out.astype(real_dtype)
