"""RIFF/WAVE reading and writing for PCM16 and IEEE float32 data."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError, FormatError

FULL_BAND_RATE = 48000

_PCM = 0x0001
_IEEE_FLOAT = 0x0003
_EXTENSIBLE = 0xFFFE


@dataclass
class WavBuffer:
    """Audio samples in [-1, 1]; shape (n,) for mono or (n, channels)."""

    samples: np.ndarray
    sample_rate: int = FULL_BAND_RATE

    @property
    def channels(self) -> int:
        return 1 if self.samples.ndim == 1 else self.samples.shape[1]

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def __len__(self) -> int:
        return len(self.samples)

    def downmix(self) -> WavBuffer:
        if self.channels == 1:
            return WavBuffer(self.samples.reshape(-1), self.sample_rate)
        return WavBuffer(self.samples.mean(axis=1), self.sample_rate)

    def require_full_band_mono(self) -> None:
        if self.sample_rate != FULL_BAND_RATE:
            raise ConfigurationError(
                f"expected {FULL_BAND_RATE} Hz audio, got {self.sample_rate} Hz"
            )
        if self.channels != 1:
            raise ConfigurationError(
                f"expected mono audio, got {self.channels} channels (use --downmix)"
            )


def load_wav(path) -> WavBuffer:
    """Read a PCM16 or float32 WAV file.

    Raises FormatError naming the offending chunk for malformed headers,
    unsupported codecs and truncated data; nothing partial is returned.
    """
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise FormatError(f"{path}: missing RIFF/WAVE header (chunk 'RIFF')")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(raw):
        cid = raw[pos : pos + 4]
        (size,) = struct.unpack("<I", raw[pos + 4 : pos + 8])
        body = raw[pos + 8 : pos + 8 + size]
        name = cid.decode("latin-1")
        if len(body) < size:
            raise FormatError(f"{path}: chunk '{name}' truncated ({len(body)} of {size} bytes)")
        if cid == b"fmt ":
            if size < 16:
                raise FormatError(f"{path}: chunk 'fmt ' too short ({size} bytes)")
            fmt = struct.unpack("<HHIIHH", body[:16])
            if fmt[0] == _EXTENSIBLE:
                if size < 40:
                    raise FormatError(f"{path}: chunk 'fmt ' extensible header too short")
                (sub,) = struct.unpack("<H", body[24:26])
                fmt = (sub,) + fmt[1:]
        elif cid == b"data":
            data = body
        pos += 8 + size + (size & 1)

    if fmt is None:
        raise FormatError(f"{path}: no 'fmt ' chunk")
    if data is None:
        raise FormatError(f"{path}: no 'data' chunk")

    codec, channels, rate, _, block_align, bits = fmt
    if channels < 1:
        raise FormatError(f"{path}: chunk 'fmt ' declares {channels} channels")
    if codec == _PCM and bits == 16:
        samples = np.frombuffer(data, dtype="<i2").astype(np.float32) / 32768.0
    elif codec == _IEEE_FLOAT and bits == 32:
        samples = np.frombuffer(data, dtype="<f4").astype(np.float32)
    else:
        raise FormatError(
            f"{path}: chunk 'fmt ' has unsupported codec {codec:#06x} with {bits} bits"
        )
    if len(samples) % channels:
        raise FormatError(f"{path}: chunk 'data' length not a whole number of frames")
    if channels > 1:
        samples = samples.reshape(-1, channels)
    return WavBuffer(samples, int(rate))


def save_wav(path, buf: WavBuffer, subformat: str = "float32") -> None:
    """Write ``buf`` as ``float32`` or ``pcm16``; samples are clamped to [-1, 1]."""
    x = np.clip(np.asarray(buf.samples, dtype=np.float64), -1.0, 1.0)
    channels = buf.channels
    if subformat == "float32":
        payload = x.astype("<f4").tobytes()
        codec, bits = _IEEE_FLOAT, 32
    elif subformat == "pcm16":
        payload = np.clip(np.round(x * 32768.0), -32768, 32767).astype("<i2").tobytes()
        codec, bits = _PCM, 16
    else:
        raise ValueError(f"unknown subformat {subformat!r}")
    block = channels * bits // 8
    fmt = struct.pack("<HHIIHH", codec, channels, buf.sample_rate, buf.sample_rate * block, block, bits)
    chunks = b"fmt " + struct.pack("<I", len(fmt)) + fmt
    chunks += b"data" + struct.pack("<I", len(payload)) + payload
    if len(payload) & 1:
        chunks += b"\x00"
    Path(path).write_bytes(b"RIFF" + struct.pack("<I", 4 + len(chunks)) + b"WAVE" + chunks)
