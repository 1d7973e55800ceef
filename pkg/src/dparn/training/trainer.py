"""Desk-scale trainer: one clip, full-clip batches, deterministic under a seed."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..autodiff import no_grad
from ..autodiff.nn import BN_MOMENTUM
from ..dsp import WavBuffer, mix_at_snr, stft
from ..errors import ConfigurationError, DivergenceError
from ..model import DparnConfig, DparnModel
from .loss import GAMMA, total_loss
from .optim import AdamConfig, AdamState, LrSchedule, adam_step, clip_global_norm, lr_at_step

log = logging.getLogger(__name__)

# Short warm-up with a scaled peak so a few hundred steps make progress.
TOY_SCHEDULE = LrSchedule(warmup=100, model_dim=80, scale=0.25)


@dataclass
class TrainConfig:
    model: DparnConfig = field(default_factory=DparnConfig.reduced)
    schedule: LrSchedule = TOY_SCHEDULE
    adam: AdamConfig = field(default_factory=AdamConfig)
    gamma: float = GAMMA
    snr_db: float = 5.0
    clip_norm: float = 5.0
    seed: int = 0


@dataclass
class TrainResult:
    model: DparnModel
    trace: list
    noisy: WavBuffer
    clean: WavBuffer

    @property
    def losses(self) -> np.ndarray:
        return np.array([row["total"] for row in self.trace])


def train_toy(clean: WavBuffer, noise: WavBuffer, steps: int, config: TrainConfig | None = None,
              callback=None) -> TrainResult:
    """Mix ``clean`` with ``noise`` at the configured SNR and fit the model to it.

    Each step runs the whole clip forward, backpropagates the compressed
    spectral loss, clips the global gradient norm and applies Adam. The trace
    holds one row per step with the pre-update loss.
    """
    config = config or TrainConfig()
    clean = clean.downmix() if clean.channels > 1 else clean
    noise = noise.downmix() if noise.channels > 1 else noise
    clean.require_full_band_mono()
    if len(clean) < clean.sample_rate:
        raise ConfigurationError("training clip must be at least 1 s long")
    mix = mix_at_snr(clean, noise, config.snr_db, peak_normalize=True)

    model = DparnModel(config.model, seed=config.seed)
    dtype = model.dtype
    noisy_spec = stft(mix.noisy.samples)
    target_spec = stft(mix.clean.samples)
    x = np.stack([noisy_spec.real, noisy_spec.imag]).astype(dtype)
    y = np.stack([target_spec.real, target_spec.imag]).astype(dtype)

    params = model.parameters()
    state = AdamState()
    trace = []
    model.train()
    for step in range(1, steps + 1):
        model.zero_grad()
        parts: dict = {}
        loss = total_loss(model(x), y, config.gamma, parts)
        value = float(loss.data)
        if not math.isfinite(value):
            raise DivergenceError(f"loss became non-finite at step {step}")
        loss.backward()
        grad_norm = clip_global_norm(params, config.clip_norm)
        lr = lr_at_step(step, config.schedule)
        adam_step(params, state, lr, config.adam)
        row = {"step": step, "lr": lr, "loss_ri": parts["loss_ri"],
               "loss_mag": parts["loss_mag"], "total": value, "grad_norm": grad_norm}
        trace.append(row)
        if callback is not None:
            callback(row)
        log.debug("step %d loss %.6g lr %.3g", step, value, lr)
    if steps > 0:
        recalibrate_batch_norm(model, x)
    model.eval()
    return TrainResult(model, trace, mix.noisy, mix.clean)


def recalibrate_batch_norm(model: DparnModel, x: np.ndarray) -> None:
    """Replace every batch-norm running statistic with the batch statistics of
    ``x`` under the final weights, so inference matches training-mode output."""
    norms = [m for m in model.modules() if hasattr(m, "bn_mean")]
    model.train()
    for m in norms:
        m.momentum = 0.0
    try:
        with no_grad():
            model(x)
    finally:
        for m in norms:
            m.momentum = BN_MOMENTUM


def write_trace_csv(trace, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "lr", "loss_ri", "loss_mag", "total"])
        for row in trace:
            writer.writerow([row["step"], f"{row['lr']:.9g}", f"{row['loss_ri']:.9g}",
                             f"{row['loss_mag']:.9g}", f"{row['total']:.9g}"])
