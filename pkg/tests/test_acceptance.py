"""Release gate: one test per acceptance criterion, each reporting PASS/FAIL.

Run alone with ``pytest tests/test_acceptance.py -v``; the verdict lines are
printed in the terminal summary (and inline with ``-s``).
"""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from dparn.autodiff import default_dtype, no_grad
from dparn.dsp import istft, stft
from dparn.dsp.synth import pink_noise, speech_like
from dparn.errors import ChecksumError
from dparn.metrics import si_sdr
from dparn.model import DparnConfig, DparnModel
from dparn.scm import build_init_matrix, unwarp, warp
from dparn.training import AdamState, LrSchedule, adam_step, lr_at_step, total_loss, train_toy
from dparn.verify import gradcheck_suite, roundtrip_snr_db
from dparn.weights import load_weights, save_weights

CANONICAL_PARAMS = 871_549


def report(n: int, name: str, passed: bool, detail: str) -> None:
    line = f"criterion {n:>2} {name:<22} {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


def test_c01_parameter_count():
    total = DparnModel(DparnConfig()).num_parameters()
    ok = 0.80e6 <= total <= 0.98e6 and total == CANONICAL_PARAMS
    report(1, "parameter-count", ok, f"{total} trainable (window 0.80M..0.98M, reference 0.89M)")


def test_c02_scm_construction():
    t0 = time.perf_counter()
    knee = warp(5000.0)
    top = warp(24000.0)
    grid = np.arange(0.0, 24001.0, 1.0)
    rt = float(np.max(np.abs(unwarp(warp(grid)) - grid)))
    scm = build_init_matrix()
    low_ok = np.array_equal(scm.low, np.eye(125, 601))
    f = scm.layout.bin_frequencies()
    comp = 0.0
    for k in range(scm.high.shape[0] - 1):
        shared = (f >= scm.center[k]) & (f <= scm.center[k + 1])
        comp = max(comp, float(np.max(np.abs(scm.high[k, shared] + scm.high[k + 1, shared] - 1))))
    secs = time.perf_counter() - t0
    ok = knee == 5000.0 and abs(top - 10379.41) <= 0.01 and rt <= 1e-6 and low_ok
    ok = ok and comp <= 1e-9 and secs < 1.0
    report(2, "scm-construction", ok,
           f"warp(24k)={top:.4f} roundtrip={rt:.1e}Hz identity={low_ok} "
           f"complementarity={comp:.1e} {secs:.2f}s")


def test_c03_stft_roundtrip():
    t0 = time.perf_counter()
    x = np.random.default_rng(0).uniform(-1, 1, 48000)
    s32 = roundtrip_snr_db(x, dtype=np.float32)
    s64 = roundtrip_snr_db(x, dtype=np.float64)
    secs = time.perf_counter() - t0
    ok = s32 >= 60 and s64 >= 120 and secs < 1.0
    report(3, "stft-roundtrip", ok, f"32-bit {s32:.1f} dB, 64-bit {s64:.1f} dB, {secs:.2f}s")


def test_c04_gradient_correctness():
    rep = gradcheck_suite(seed=0, n_frames=4)
    err, count, frozen = rep.checks
    ok = rep.passed and err.value <= 1e-4 and count.value >= 200 and rep.seconds < 300
    report(4, "gradient-check", ok,
           f"max rel err {err.value:.2e} over {int(count.value)} entries "
           f"(worst {err.detail['worst_parameter']}), {rep.seconds:.1f}s")


def test_c05_causality():
    with default_dtype(np.float64):
        model = DparnModel(DparnConfig(dtype="float64"), seed=0).eval()
        rng = np.random.default_rng(0)
        T = 10
        x = rng.standard_normal((2, T, 601))
        with no_grad():
            base = model(x).data
            leaks = []
            for t in (1, T // 2, T - 1):
                y = x.copy()
                y[:, t] += rng.standard_normal((2, 601))
                out = model(y).data
                leaks.append(float(np.max(np.abs(out[:, :t] - base[:, :t]))))
                leaks.append(-float(np.max(np.abs(out[:, t] - base[:, t]))))
    past = leaks[0::2]
    ok = all(v == 0.0 for v in past) and all(v < 0 for v in leaks[1::2])
    report(5, "causality", ok, f"max change before t: {max(past):.1e} (t=1,{T // 2},{T - 1})")


def test_c06_toy_overfit():
    rng = np.random.default_rng(0)
    clean, noise = speech_like(2.0, rng), pink_noise(2.0, rng)
    t0 = time.perf_counter()
    res = train_toy(clean, noise, steps=500)
    secs = time.perf_counter() - t0
    ratio = res.losses[-1] / res.losses[0]
    noisy_db = si_sdr(res.noisy, res.clean).value
    spec = stft(res.noisy.samples)
    est = istft(res.model.enhance_spectrogram(spec), length=len(res.noisy))
    enh_db = si_sdr(est, res.clean).value
    ok = ratio <= 0.2 and enh_db - noisy_db >= 3.0
    report(6, "toy-overfit", ok,
           f"loss ratio {ratio:.4f}, SI-SDR {noisy_db:.2f} -> {enh_db:.2f} dB "
           f"(+{enh_db - noisy_db:.2f}), {secs:.0f}s")


def test_c07_si_sdr_oracle():
    rng = np.random.default_rng(7)
    worst = 0.0
    for r in (-5, 0, 5, 10, 15):
        s = rng.standard_normal(48000)
        n = rng.standard_normal(48000)
        n -= (n @ s) / (s @ s) * s
        n *= math.sqrt((s @ s) / (n @ n) / 10 ** (r / 10))
        worst = max(worst, abs(si_sdr(s + n, s).value - r))
    report(7, "si-sdr-oracle", worst <= 0.01, f"max deviation {worst:.2e} dB over r=-5..15")


def test_c08_lr_schedule():
    worst = 0.0
    peak_ok = True
    for warmup in (40000, 5000):
        sched = LrSchedule(warmup=warmup, model_dim=80)
        for step in (1, warmup // 2, warmup, 4 * warmup):
            expect = (1 / math.sqrt(80)) * min(step**-0.5, step * warmup**-1.5)
            worst = max(worst, abs(lr_at_step(step, sched) - expect) / expect)
        peak = lr_at_step(warmup, sched)
        peak_ok &= math.isclose(peak, 1 / math.sqrt(80) / math.sqrt(warmup), rel_tol=1e-12)
        peak_ok &= peak > lr_at_step(warmup - 1, sched) and peak > lr_at_step(warmup + 1, sched)
    ok = worst <= 1e-12 and peak_ok
    report(8, "lr-schedule", ok, f"max rel deviation {worst:.1e}, peak at warm-up: {peak_ok}")


def test_c09_frozen_low_band():
    model = DparnModel(DparnConfig.reduced(), seed=0)
    init = model.scm_low.data.copy()
    params = model.parameters()
    rng = np.random.default_rng(0)
    x = rng.standard_normal((2, 3, 601)).astype(np.float32)
    y = rng.standard_normal((2, 3, 601)).astype(np.float32)
    state = AdamState()
    grads_zero = True
    for step in range(1, 101):
        model.zero_grad()
        total_loss(model(x), y).backward()
        grads_zero &= not np.any(model.scm_low.grad)
        adam_step(params, state, 1e-3)
    same = np.array_equal(model.scm_low.data, init) and model.scm_low.shape[0] == 125
    report(9, "frozen-low-band", same and grads_zero,
           f"rows 1..125 bit-identical: {same}, gradients zero: {grads_zero}")


def test_c10_weight_roundtrip(tmp_path):
    model = DparnModel(DparnConfig.reduced(), seed=4).eval()
    path = tmp_path / "w.dprn"
    save_weights(model, path)
    rng = np.random.default_rng(1)
    spec = rng.standard_normal((6, 601)) + 1j * rng.standard_normal((6, 601))
    same = np.array_equal(model.enhance_spectrogram(spec), load_weights(path).enhance_spectrogram(spec))
    buf = bytearray(path.read_bytes())
    buf[len(buf) // 2] ^= 0x04
    path.write_bytes(bytes(buf))
    try:
        load_weights(path)
        tamper = False
    except ChecksumError:
        tamper = True
    report(10, "weight-roundtrip", same and tamper,
           f"identical outputs: {same}, tamper detected: {tamper}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
