"""Self-check suites shared by the ``verify`` command and the test-suite.

Each suite returns a :class:`SuiteReport`, a list of named checks with the
measured value and the threshold it was held to.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .autodiff import default_dtype
from .autodiff.gradcheck import check_gradients
from .dsp import StftConfig, istft, stft
from .model import DparnConfig, DparnModel
from .scm import (
    CANONICAL_LAYOUT,
    KNEE_HZ,
    NYQUIST_HZ,
    build_init_matrix,
    low_band_violations,
    unwarp,
    warp,
)
from .training.loss import total_loss

GRADCHECK_TOL = 1e-4
GRADCHECK_MIN_SAMPLES = 200
MAG_EXCLUDE = 1e-6


@dataclass
class Check:
    name: str
    passed: bool
    value: float | None = None
    threshold: float | None = None
    detail: dict = field(default_factory=dict)

    def __post_init__(self):
        self.passed = bool(self.passed)
        if self.value is not None:
            self.value = float(self.value)


@dataclass
class SuiteReport:
    suite: str
    checks: list
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"suite": self.suite, "passed": self.passed, "seconds": round(self.seconds, 3),
                "checks": [asdict(c) for c in self.checks]}


def _timed(suite: str, fn) -> SuiteReport:
    t0 = time.perf_counter()
    checks = fn()
    return SuiteReport(suite, checks, time.perf_counter() - t0)


# -- SCM ---------------------------------------------------------------------

def _scm_checks(model: DparnModel | None) -> list[Check]:
    checks = []
    checks.append(Check("warp_knee_fixed", warp(KNEE_HZ) == KNEE_HZ, warp(KNEE_HZ), KNEE_HZ))
    top = warp(NYQUIST_HZ)
    checks.append(Check("warp_nyquist", abs(top - 10379.41) <= 0.01, top, 0.01))

    grid = np.arange(0.0, NYQUIST_HZ + 1.0, 1.0)
    err = float(np.max(np.abs(unwarp(warp(grid)) - grid)))
    checks.append(Check("unwarp_warp_roundtrip_hz", err <= 1e-6, err, 1e-6))

    scm = build_init_matrix(CANONICAL_LAYOUT)
    rows = low_band_violations(scm.matrix, CANONICAL_LAYOUT.n_low)
    checks.append(Check("init_low_band_identity", not rows, len(rows), 0, {"rows": rows[:10]}))

    # adjacent filters share slopes; on the overlap their sum is one
    f = CANONICAL_LAYOUT.bin_frequencies()
    hi = scm.high
    worst = 0.0
    for k in range(hi.shape[0] - 1):
        shared = (f > scm.center[k]) & (f < scm.center[k + 1])
        if shared.any():
            worst = max(worst, float(np.max(np.abs(hi[k, shared] + hi[k + 1, shared] - 1.0))))
    checks.append(Check("filter_complementarity", worst <= 1e-9, worst, 1e-9))

    if model is not None:
        mrows = low_band_violations(model.scm_low.data, model.config.n_low)
        checks.append(Check("model_low_band_identity", not mrows, len(mrows), 0,
                            {"rows": mrows[:10]}))
    return checks


def scm_suite(model: DparnModel | None = None) -> SuiteReport:
    return _timed("scm", lambda: _scm_checks(model))


# -- STFT --------------------------------------------------------------------

def roundtrip_snr_db(x: np.ndarray, cfg: StftConfig = StftConfig(), dtype=np.float64) -> float:
    """Reconstruction SNR over the interior (one window trimmed at each end)."""
    x = np.asarray(x, dtype=dtype)
    spec = stft(x, cfg, dtype=dtype)
    y = istft(spec, cfg, length=len(x))
    lo, hi = cfg.win_length, len(x) - cfg.win_length
    ref = x[lo:hi].astype(np.float64)
    err = ref - y[lo:hi].astype(np.float64)
    return float(10 * np.log10(np.sum(ref**2) / max(np.sum(err**2), 1e-300)))


def _stft_checks(seed: int) -> list[Check]:
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1, 1, 48000)
    s64 = roundtrip_snr_db(x, dtype=np.float64)
    s32 = roundtrip_snr_db(x, dtype=np.float32)
    return [Check("roundtrip_snr_64bit_db", s64 >= 120.0, s64, 120.0),
            Check("roundtrip_snr_32bit_db", s32 >= 60.0, s32, 60.0)]


def stft_suite(seed: int = 0) -> SuiteReport:
    return _timed("stft", lambda: _stft_checks(seed))


# -- gradients ---------------------------------------------------------------

GRADCHECK_CONFIG = DparnConfig.reduced(n_compressed=32, n_low=16, dtype="float64")


def _gradcheck_checks(seed: int, n_frames: int, per_param: int) -> list[Check]:
    with default_dtype(np.float64):
        model = DparnModel(GRADCHECK_CONFIG, seed=seed)
        rng = np.random.default_rng(seed + 1)
        shape = (2, n_frames, GRADCHECK_CONFIG.n_bins)
        x = rng.standard_normal(shape)
        y = rng.standard_normal(shape)
        model.train()
        with_mag = model(x).data
        keep = (np.hypot(with_mag[0], with_mag[1]) >= MAG_EXCLUDE).astype(np.float64)
        excluded = int(keep.size - keep.sum())

        def loss_fn():
            return total_loss(model(x) * keep, y * keep)

        # Biases feeding a normalization layer have an exactly zero gradient, so
        # their central differences are pure round-off (about |L| eps / h).
        # Entries below that resolution are judged against it instead.
        h = 1e-5
        floor = 2.0 * abs(float(loss_fn().data)) * np.finfo(np.float64).eps / (h * GRADCHECK_TOL)
        named = [(n, p) for n, p in model.named_parameters() if p.trainable]
        worst = None
        checked = 0
        for i, (name, p) in enumerate(named):
            res = check_gradients(loss_fn, [(name, p)], n_samples=min(per_param, p.size),
                                  eps=h, seed=seed + i, floor=floor)
            checked += res.n_checked
            if worst is None or not res.max_rel_error <= worst.max_rel_error:
                worst = res
        # frozen rows never receive gradient
        model.zero_grad()
        loss_fn().backward()
        frozen_grad = float(np.max(np.abs(model.scm_low.grad)))
    return [
        Check("max_relative_error", worst.max_rel_error <= GRADCHECK_TOL, worst.max_rel_error,
              GRADCHECK_TOL, {"worst_parameter": worst.worst_name,
                              "worst_index": list(worst.worst_index),
                              "excluded_bins": excluded,
                              "fd_floor": float(floor)}),
        Check("sampled_parameters", checked >= GRADCHECK_MIN_SAMPLES, checked,
              GRADCHECK_MIN_SAMPLES),
        Check("frozen_rows_zero_gradient", frozen_grad == 0.0, frozen_grad, 0.0),
    ]


def gradcheck_suite(seed: int = 0, n_frames: int = 4, per_param: int = 5) -> SuiteReport:
    return _timed("gradcheck", lambda: _gradcheck_checks(seed, n_frames, per_param))


SUITES = {"scm": scm_suite, "stft": stft_suite, "gradcheck": gradcheck_suite}


def run_suites(names, model: DparnModel | None = None, seed: int = 0) -> list[SuiteReport]:
    out = []
    for name in names:
        if name == "scm":
            out.append(scm_suite(model))
        elif name == "stft":
            out.append(stft_suite(seed))
        else:
            out.append(gradcheck_suite(seed))
    return out
