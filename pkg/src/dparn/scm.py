"""Spectral compression mapping (SCM) and its inverse.

The compression keeps the bins below the knee frequency untouched and maps the
band above it onto triangular filters whose centers are uniformly spaced on a
logarithmically warped axis. With the canonical constants (601 bins of 40 Hz,
256 compressed bins, 125 identity bins) the knee is 5 kHz.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError

KNEE_HZ = 5000.0
NYQUIST_HZ = 24000.0
N_BINS = 601
N_COMPRESSED = 256
N_LOW = 125
BIN_HZ = 40.0
UNWARP_SLACK = 0.01


def _check_range(value, lo, hi, what):
    v = np.asarray(value, dtype=np.float64)
    if np.any(v < lo) or np.any(v > hi) or np.any(~np.isfinite(v)):
        raise DomainError(f"{what} {value!r} outside [{lo}, {hi}]")
    return v


def _warp(f, knee):
    half = knee / 2.0
    f = np.asarray(f, dtype=np.float64)
    hi = f > knee
    safe = np.where(hi, f, knee)
    return np.where(hi, half * (np.log((safe - half) / half) + 2.0), f)


def _unwarp(fc, knee):
    half = knee / 2.0
    fc = np.asarray(fc, dtype=np.float64)
    hi = fc > knee
    return np.where(hi, half * (np.exp(np.where(hi, fc, knee) / half - 2.0) + 1.0), fc)


def warp(f_hz, knee: float = KNEE_HZ, nyquist: float = NYQUIST_HZ):
    """Map physical frequency to the compressed axis.

    Identity up to ``knee``; above it ``(knee/2) * (ln((f - knee/2) / (knee/2)) + 2)``,
    which is continuous with unit slope at the knee.
    """
    v = _warp(_check_range(f_hz, 0.0, nyquist, "frequency"), knee)
    return float(v) if v.ndim == 0 else v


def unwarp(fc, knee: float = KNEE_HZ, nyquist: float = NYQUIST_HZ):
    """Inverse of :func:`warp`: ``(knee/2) * (exp(fc / (knee/2) - 2) + 1)`` above the knee."""
    top = float(_warp(nyquist, knee))
    # inputs rounded past the top of the range (by <= 0.01) map to Nyquist
    fc = np.minimum(_check_range(fc, 0.0, top + UNWARP_SLACK, "warped frequency"), top)
    v = _unwarp(fc, knee)
    return float(v) if v.ndim == 0 else v


@dataclass(frozen=True)
class ScmLayout:
    """Bin counts that fix the geometry of the compression."""

    n_bins: int = N_BINS
    n_compressed: int = N_COMPRESSED
    n_low: int = N_LOW
    bin_hz: float = BIN_HZ

    def __post_init__(self):
        if not 0 < self.n_low < self.n_compressed < self.n_bins:
            raise DimensionError(
                f"need 0 < n_low < n_compressed < n_bins, got "
                f"{self.n_low}, {self.n_compressed}, {self.n_bins}"
            )

    @property
    def knee(self) -> float:
        return self.n_low * self.bin_hz

    @property
    def nyquist(self) -> float:
        return (self.n_bins - 1) * self.bin_hz

    @property
    def n_high(self) -> int:
        return self.n_compressed - self.n_low

    @property
    def warped_step(self) -> float:
        return (float(_warp(self.nyquist, self.knee)) - self.knee) / self.n_high

    def bin_frequencies(self) -> np.ndarray:
        return np.arange(self.n_bins) * self.bin_hz


CANONICAL_LAYOUT = ScmLayout()


def center_grid(layout: ScmLayout = CANONICAL_LAYOUT) -> np.ndarray:
    """Center frequency (Hz) of each of the ``n_compressed`` output bins."""
    low = np.arange(layout.n_low) * layout.bin_hz
    j = np.arange(1, layout.n_high + 1)
    high = _unwarp(layout.knee + j * layout.warped_step, layout.knee)
    high[-1] = layout.nyquist  # exact endpoint
    return np.concatenate([low, high])


@dataclass
class ScmMatrix:
    """Compression matrix plus the triangle geometry of its high-band rows."""

    matrix: np.ndarray  # (n_compressed, n_bins)
    layout: ScmLayout
    left: np.ndarray  # (n_high,) Hz
    center: np.ndarray
    right: np.ndarray

    @property
    def low(self) -> np.ndarray:
        return self.matrix[: self.layout.n_low]

    @property
    def high(self) -> np.ndarray:
        return self.matrix[self.layout.n_low :]


def triangle(f: np.ndarray, left: float, center: float, right: float) -> np.ndarray:
    """Triangular filter response at frequencies ``f`` (zero at ``left``)."""
    rise = (f - left) / (center - left)
    fall = (right - f) / (right - center)
    out = np.zeros_like(f, dtype=np.float64)
    up = (f > left) & (f <= center)
    down = (f > center) & (f <= right)
    out[up] = rise[up]
    out[down] = fall[down]
    return out


def build_init_matrix(layout: ScmLayout = CANONICAL_LAYOUT) -> ScmMatrix:
    """Identity block for the low band stacked on triangular high-band filters.

    Filter edges sit on the warped grid ``knee + j * step``. The first filter's
    left edge is the knee; the last filter's right edge is extrapolated one
    step beyond Nyquist, so only its rising half falls inside the spectrum.
    """
    f = layout.bin_frequencies()
    j = np.arange(layout.n_high + 2)
    edges = _unwarp(layout.knee + j * layout.warped_step, layout.knee)
    edges[layout.n_high] = layout.nyquist
    left, center, right = edges[:-2], edges[1:-1], edges[2:]

    w = np.zeros((layout.n_compressed, layout.n_bins))
    w[np.arange(layout.n_low), np.arange(layout.n_low)] = 1.0
    for r in range(layout.n_high):
        w[layout.n_low + r] = triangle(f, left[r], center[r], right[r])
    return ScmMatrix(w, layout, left, center, right)


def init_iscm(layout: ScmLayout, rng: np.random.Generator) -> np.ndarray:
    """Random (n_bins, n_compressed) inverse map, uniform in +-sqrt(1/n_compressed)."""
    bound = np.sqrt(1.0 / layout.n_compressed)
    return rng.uniform(-bound, bound, size=(layout.n_bins, layout.n_compressed))


def apply_scm(spec: np.ndarray, w) -> np.ndarray:
    """Compress a (T, n_bins) complex spectrogram to (T, n_compressed)."""
    w = w.matrix if isinstance(w, ScmMatrix) else np.asarray(w)
    spec = np.asarray(spec)
    if spec.ndim != 2 or spec.shape[1] != w.shape[1]:
        raise DimensionError(f"apply_scm: spectrogram {spec.shape} vs matrix {w.shape}")
    return spec.real @ w.T + 1j * (spec.imag @ w.T)


def apply_iscm(comp: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Expand a (T, n_compressed) representation back to (T, n_bins)."""
    comp = np.asarray(comp)
    v = np.asarray(v)
    if comp.ndim != 2 or comp.shape[1] != v.shape[1]:
        raise DimensionError(f"apply_iscm: input {comp.shape} vs matrix {v.shape}")
    return comp.real @ v.T + 1j * (comp.imag @ v.T)


def low_band_violations(matrix: np.ndarray, n_low: int) -> list[int]:
    """1-based indices of low-band rows that differ from the identity pattern."""
    expect = np.zeros((n_low, matrix.shape[1]), dtype=matrix.dtype)
    expect[np.arange(n_low), np.arange(n_low)] = 1
    bad = np.any(matrix[:n_low] != expect, axis=1)
    return [int(i) + 1 for i in np.flatnonzero(bad)]
