"""Synthetic speech-like and noise signals for desk-scale experiments."""

from __future__ import annotations

import numpy as np

from .wav import FULL_BAND_RATE, WavBuffer


def speech_like(duration: float, rng: np.random.Generator, rate: int = FULL_BAND_RATE) -> WavBuffer:
    """Voiced harmonic bursts with a gliding pitch, formant-like spectral tilt
    and a syllabic envelope, plus short unvoiced high-band bursts."""
    n = int(round(duration * rate))
    t = np.arange(n) / rate
    f0 = 140.0 + 40.0 * np.sin(2 * np.pi * 0.7 * t + rng.uniform(0, 2 * np.pi))
    phase = 2 * np.pi * np.cumsum(f0) / rate
    voiced = np.zeros(n)
    formants = np.array([600.0, 1500.0, 2600.0])
    for h in range(1, 60):
        fh = h * f0
        gain = np.sum(np.exp(-0.5 * ((fh[:, None] - formants) / 250.0) ** 2), axis=1) + 0.05
        gain = gain * (fh < 10000.0) / h**0.5
        voiced += gain * np.sin(h * phase + rng.uniform(0, 2 * np.pi))
    syll = 0.5 * (1 - np.cos(2 * np.pi * 3.0 * t))
    syll *= np.sin(2 * np.pi * 0.5 * t + 0.3) > -0.2
    x = voiced * syll
    # fricative-like bursts above 4 kHz
    burst = rng.standard_normal(n)
    spec = np.fft.rfft(burst)
    freqs = np.fft.rfftfreq(n, 1 / rate)
    spec[freqs < 4000.0] = 0.0
    hiss = np.fft.irfft(spec, n)
    hiss_env = (np.sin(2 * np.pi * 1.5 * t + 1.0) > 0.85).astype(float)
    x = x / np.max(np.abs(x)) + 0.3 * hiss * hiss_env / np.std(hiss)
    return WavBuffer(0.5 * x / np.max(np.abs(x)), rate)


def white_noise(duration: float, rng: np.random.Generator, rate: int = FULL_BAND_RATE) -> WavBuffer:
    n = int(round(duration * rate))
    return WavBuffer(0.1 * rng.standard_normal(n), rate)


def pink_noise(duration: float, rng: np.random.Generator, rate: int = FULL_BAND_RATE) -> WavBuffer:
    n = int(round(duration * rate))
    spec = np.fft.rfft(rng.standard_normal(n))
    f = np.fft.rfftfreq(n, 1 / rate)
    spec[1:] /= np.sqrt(f[1:] / f[1])
    spec[0] = 0.0
    x = np.fft.irfft(spec, n)
    return WavBuffer(0.1 * x / np.std(x), rate)
