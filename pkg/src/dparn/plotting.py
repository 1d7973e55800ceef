"""Report figures rendered to image files (no display needed)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .scm import ScmMatrix  # noqa: E402


def plot_loss_curve(trace: list[dict], path) -> Path:
    """Total loss and its two components against step, log-scaled."""
    path = Path(path)
    steps = [r["step"] for r in trace]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for key in ("total", "loss_ri", "loss_mag"):
        ax.semilogy(steps, [r[key] for r in trace], label=key)
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_filterbank(scm: ScmMatrix, path, every: int = 1) -> Path:
    """High-band triangular filters over frequency, with the knee marked."""
    path = Path(path)
    f = scm.layout.bin_frequencies() / 1000.0
    fig, ax = plt.subplots(figsize=(7, 3.5))
    for row in scm.high[::every]:
        nz = np.flatnonzero(row)
        if nz.size:
            lo, hi = max(nz[0] - 1, 0), min(nz[-1] + 2, row.size)
            ax.plot(f[lo:hi], row[lo:hi], lw=0.7)
    ax.axvline(scm.layout.knee / 1000.0, color="k", ls="--", lw=0.8, label="knee")
    ax.set_xlabel("frequency (kHz)")
    ax.set_ylabel("weight")
    ax.set_xlim(0, scm.layout.nyquist / 1000.0)
    ax.legend(loc="upper left")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
