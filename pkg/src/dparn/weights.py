"""Binary weight file for :class:`~dparn.model.DparnModel`.

Layout (all integers little-endian)::

    b"DPRN"            magic
    u16                format version (1)
    u32 + bytes        model configuration as compact, key-sorted JSON
    u32                number of entries
    per entry:
        u16 + bytes    parameter name (UTF-8)
        u8             dtype code (0 = float32, 1 = float64)
        u8             rank
        u32 * rank     extents
        u8             frozen flag (1 = not trainable)
        u64            byte offset into the payload
    payload            raw little-endian arrays, in entry order
    u32                CRC-32 of the payload
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from .errors import ChecksumError, FormatError, ShapeMismatchError, UnknownParameterError
from .model import DparnConfig, DparnModel

MAGIC = b"DPRN"
VERSION = 1
_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_CODES = {np.dtype("float32"): 0, np.dtype("float64"): 1}


def serialize(model: DparnModel) -> bytes:
    entries = []
    payload = bytearray()
    for name, p in model.named_parameters():
        arr = np.ascontiguousarray(p.data)
        code = _CODES[arr.dtype]
        entries.append((name, code, arr.shape, not p.trainable, len(payload)))
        payload += arr.astype(_DTYPES[code]).tobytes()

    cfg = model.config.to_json().encode()
    head = bytearray(MAGIC + struct.pack("<H", VERSION))
    head += struct.pack("<I", len(cfg)) + cfg
    head += struct.pack("<I", len(entries))
    for name, code, shape, frozen, offset in entries:
        raw = name.encode()
        head += struct.pack("<H", len(raw)) + raw
        head += struct.pack("<BB", code, len(shape))
        head += struct.pack(f"<{len(shape)}I", *shape)
        head += struct.pack("<BQ", int(frozen), offset)
    return bytes(head) + bytes(payload) + struct.pack("<I", zlib.crc32(payload))


def save_weights(model: DparnModel, path) -> None:
    Path(path).write_bytes(serialize(model))


class _Reader:
    def __init__(self, buf: bytes, path):
        self.buf, self.pos, self.path = buf, 0, path

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.buf):
            raise FormatError(f"{self.path}: header truncated at byte {self.pos}")
        out = struct.unpack_from(fmt, self.buf, self.pos)
        self.pos += size
        return out

    def raw(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise FormatError(f"{self.path}: header truncated at byte {self.pos}")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out


def read_weight_file(path) -> tuple[DparnConfig, list[dict]]:
    """Parse and integrity-check a weight file; returns the config and entries."""
    buf = Path(path).read_bytes()
    rd = _Reader(buf, path)
    if rd.raw(4) != MAGIC:
        raise FormatError(f"{path}: not a DPRN weight file (bad magic)")
    (version,) = rd.take("<H")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported weight file version {version}")
    (cfg_len,) = rd.take("<I")
    try:
        config = DparnConfig.from_json(rd.raw(cfg_len).decode())
    except (ValueError, TypeError) as exc:
        raise FormatError(f"{path}: unreadable model configuration ({exc})") from exc
    (count,) = rd.take("<I")
    entries = []
    for _ in range(count):
        (nlen,) = rd.take("<H")
        name = rd.raw(nlen).decode()
        code, rank = rd.take("<BB")
        shape = rd.take(f"<{rank}I") if rank else ()
        frozen, offset = rd.take("<BQ")
        if code not in _DTYPES:
            raise FormatError(f"{path}: entry {name} has unknown dtype code {code}")
        entries.append(dict(name=name, dtype=_DTYPES[code], shape=tuple(shape),
                            frozen=bool(frozen), offset=offset))
    if len(buf) < rd.pos + 4:
        raise FormatError(f"{path}: missing checksum")
    payload = buf[rd.pos : -4]
    (crc,) = struct.unpack("<I", buf[-4:])
    if zlib.crc32(payload) != crc:
        raise ChecksumError(f"{path}: payload checksum mismatch")
    for e in entries:
        n = int(np.prod(e["shape"], dtype=np.int64)) * e["dtype"].itemsize
        if e["offset"] + n > len(payload):
            raise FormatError(f"{path}: entry {e['name']} extends past the payload")
        e["data"] = np.frombuffer(payload, dtype=e["dtype"], count=n // e["dtype"].itemsize,
                                  offset=e["offset"]).reshape(e["shape"])
    return config, entries


def load_state(model: DparnModel, path) -> DparnModel:
    """Load weights from ``path`` into an existing model of matching topology."""
    _, entries = read_weight_file(path)
    params = model.state()
    seen = set()
    for e in entries:
        p = params.get(e["name"])
        if p is None:
            raise UnknownParameterError(f"{path}: unknown parameter {e['name']}")
        if p.shape != e["shape"]:
            raise ShapeMismatchError(
                f"{path}: parameter {e['name']} has shape {e['shape']}, model expects {p.shape}"
            )
        if p.trainable == e["frozen"]:
            raise FormatError(f"{path}: parameter {e['name']} frozen flag disagrees with model")
        p.data = e["data"].astype(p.data.dtype, copy=True)
        seen.add(e["name"])
    missing = set(params) - seen
    if missing:
        raise UnknownParameterError(f"{path}: file lacks parameters {sorted(missing)[:5]}")
    return model


def load_weights(path) -> DparnModel:
    """Build the model described by the file and load its parameters."""
    config, _ = read_weight_file(path)
    model = DparnModel(config)
    load_state(model, path)
    return model.eval()


def count_file_parameters(path, trainable_only: bool = True) -> int:
    _, entries = read_weight_file(path)
    return sum(int(np.prod(e["shape"], dtype=np.int64)) for e in entries
               if not (trainable_only and e["frozen"]))
