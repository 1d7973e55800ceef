"""Loss, optimizer, schedule and the desk-scale training loop."""

from .loss import GAMMA, compress_complex, loss_mag, loss_ri, power_compress, total_loss
from .optim import REGIME_WARMUP, AdamConfig, AdamState, LrSchedule, adam_step, clip_global_norm, lr_at_step
from .trainer import TOY_SCHEDULE, TrainConfig, TrainResult, train_toy, write_trace_csv

__all__ = [
    "GAMMA",
    "REGIME_WARMUP",
    "TOY_SCHEDULE",
    "AdamConfig",
    "AdamState",
    "LrSchedule",
    "TrainConfig",
    "TrainResult",
    "adam_step",
    "clip_global_norm",
    "compress_complex",
    "loss_mag",
    "loss_ri",
    "lr_at_step",
    "power_compress",
    "total_loss",
    "train_toy",
    "write_trace_csv",
]
