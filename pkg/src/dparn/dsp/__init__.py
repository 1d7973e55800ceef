"""Waveform I/O, STFT front-end and SNR mixing."""

from .mixing import Mixture, measured_snr_db, mix_at_snr
from .stft import CANONICAL, StftConfig, istft, n_frames, periodic_hann, stft
from .wav import FULL_BAND_RATE, WavBuffer, load_wav, save_wav

__all__ = [
    "CANONICAL",
    "FULL_BAND_RATE",
    "Mixture",
    "StftConfig",
    "WavBuffer",
    "istft",
    "load_wav",
    "measured_snr_db",
    "mix_at_snr",
    "n_frames",
    "periodic_hann",
    "save_wav",
    "stft",
]
