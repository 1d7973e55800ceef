import struct

import numpy as np
import pytest

from dparn.dsp import (
    CANONICAL,
    WavBuffer,
    istft,
    load_wav,
    measured_snr_db,
    mix_at_snr,
    periodic_hann,
    save_wav,
    stft,
)
from dparn.dsp.stft import window_sumsquare
from dparn.errors import ConfigurationError, DegenerateInputError, FormatError

RATE = 48000


def snr_db(ref, est):
    return 10 * np.log10(np.sum(ref**2) / np.sum((ref - est) ** 2))


def interior(x):
    return x[CANONICAL.win_length : len(x) - CANONICAL.win_length]


def test_canonical_config():
    assert CANONICAL.n_bins == 601
    assert CANONICAL.bin_hz == 40.0
    f = CANONICAL.bin_frequencies()
    assert f[0] == 0.0 and f[-1] == 24000.0


def test_periodic_hann_cola_at_half_overlap():
    w = periodic_hann(1200)
    np.testing.assert_allclose(w[:600] + w[600:], 1.0, atol=1e-15)


def test_squared_window_overlap_is_not_constant_but_positive():
    # the synthesis normalizer therefore has to be time varying
    ws = window_sumsquare(10)[1200:-1200]
    assert ws.min() >= 0.5 - 1e-12 and ws.max() <= 1.0 + 1e-12
    assert np.ptp(ws) > 0.4


def test_frame_count_and_shape():
    x = np.zeros(48000 + 1)
    spec = stft(x)
    assert spec.shape == (81, 601)


def test_tone_peak_and_leakage():
    # closed-form Hann leakage: beyond the main lobe every bin is >= 31 dB down
    t = np.arange(RATE) / RATE
    spec = np.abs(stft(np.sin(2 * np.pi * 1000 * t)))[5]
    peak = int(np.argmax(spec))
    assert peak + 1 == 26  # 1-based bin m=26 is 1000 Hz
    db = 20 * np.log10(spec / spec[peak] + 1e-300)
    far = np.ones(601, bool)
    far[peak - 1 : peak + 2] = False
    assert db[far].max() <= -31.0


def test_zero_input_gives_zero_spectrogram():
    assert not np.any(stft(np.zeros(5000)))


def test_dc_input_energy_in_first_bin():
    spec = np.abs(stft(np.ones(RATE)))[10]
    assert np.argmax(spec) == 0
    assert spec[2:].max() <= 1e-9 * spec[0]


def test_wrong_sample_rate_rejected():
    with pytest.raises(ConfigurationError):
        stft(WavBuffer(np.zeros(1000), 16000))


def test_roundtrip_white_noise_64bit():
    x = np.random.default_rng(0).standard_normal(RATE)
    y = istft(stft(x), length=len(x))
    assert snr_db(interior(x), interior(y)) >= 120.0


def test_roundtrip_white_noise_32bit():
    x = np.random.default_rng(1).standard_normal(RATE).astype(np.float32)
    y = istft(stft(x, dtype=np.float32), length=len(x))
    assert y.dtype == np.float32
    assert snr_db(interior(x.astype(np.float64)), interior(y.astype(np.float64))) >= 60.0


def test_roundtrip_speech_shaped_max_error():
    from dparn.dsp.synth import speech_like

    x = speech_like(1.0, np.random.default_rng(2)).samples
    y = istft(stft(x), length=len(x))
    assert np.max(np.abs(interior(x) - interior(y))) <= 1e-6


def test_zero_spectrogram_gives_zero_signal():
    assert not np.any(istft(np.zeros((5, 601), complex)))


def test_stft_linearity():
    rng = np.random.default_rng(3)
    x, y = rng.standard_normal(9000), rng.standard_normal(9000)
    np.testing.assert_allclose(stft(2 * x - 3 * y), 2 * stft(x) - 3 * stft(y), atol=1e-10)


def test_parseval_with_window_compensation():
    x = np.random.default_rng(4).standard_normal(4 * RATE)
    spec = stft(x)[2:-2]
    # two-sided spectral energy from the one-sided rfft
    e = 2 * np.sum(np.abs(spec) ** 2) - np.sum(np.abs(spec[:, 0]) ** 2) - np.sum(np.abs(spec[:, -1]) ** 2)
    e /= CANONICAL.n_fft
    w2 = np.sum(periodic_hann(1200) ** 2)
    est = e * CANONICAL.hop / w2
    seg = x[2 * 600 : 2 * 600 + spec.shape[0] * 600]
    assert abs(est / np.sum(seg**2) - 1) < 0.01


# ------------------------------------------------------------------ mixing
def test_equal_power_zero_db_has_unit_gain():
    rng = np.random.default_rng(5)
    s = rng.standard_normal(1000)
    n = rng.standard_normal(1000)
    n *= np.sqrt(np.mean(s**2) / np.mean(n**2))
    mix = mix_at_snr(WavBuffer(s), WavBuffer(n), 0.0)
    assert abs(mix.noise_gain - 1.0) < 1e-12


def test_high_snr_approximates_clean():
    rng = np.random.default_rng(6)
    s = rng.standard_normal(1000)
    mix = mix_at_snr(WavBuffer(s), WavBuffer(rng.standard_normal(1000)), 100.0)
    assert np.linalg.norm(mix.noisy.samples - s) <= 1e-4 * np.linalg.norm(s)


@pytest.mark.parametrize("snr", [-5.0, 0.0, 7.5, 15.0])
def test_measured_snr_matches_request(snr):
    rng = np.random.default_rng(7)
    s = rng.standard_normal(2000)
    mix = mix_at_snr(WavBuffer(s), WavBuffer(rng.standard_normal(700)), snr, peak_normalize=True)
    assert len(mix.noise) == 2000  # looped to length
    assert abs(measured_snr_db(mix.clean.samples, mix.noisy.samples - mix.clean.samples) - snr) < 0.01
    assert np.max(np.abs(mix.noisy.samples)) <= 0.99 + 1e-12


def test_silent_clean_rejected():
    with pytest.raises(DegenerateInputError):
        mix_at_snr(WavBuffer(np.zeros(10)), WavBuffer(np.ones(10)), 5.0)


# --------------------------------------------------------------------- wav
def test_float32_roundtrip_bit_identical(tmp_path):
    x = np.random.default_rng(8).uniform(-1, 1, 4801).astype(np.float32)
    save_wav(tmp_path / "a.wav", WavBuffer(x))
    y = load_wav(tmp_path / "a.wav")
    assert y.sample_rate == RATE
    assert y.samples.tobytes() == x.tobytes()


def test_pcm16_scaling(tmp_path):
    raw = np.array([16384, -32768, 32767, 0], dtype="<i2")
    path = tmp_path / "p.wav"
    fmt = struct.pack("<HHIIHH", 1, 1, RATE, RATE * 2, 2, 16)
    body = b"WAVE" + b"fmt " + struct.pack("<I", 16) + fmt + b"data" + struct.pack("<I", raw.nbytes) + raw.tobytes()
    path.write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)
    y = load_wav(path).samples
    assert abs(y[0] - 0.5) <= 1 / 32768
    assert y[1] == -1.0 and y[2] < 1.0


def test_pcm16_save_load(tmp_path):
    x = np.array([0.5, -1.0, 0.25, 2.0])
    save_wav(tmp_path / "q.wav", WavBuffer(x), subformat="pcm16")
    y = load_wav(tmp_path / "q.wav").samples
    np.testing.assert_allclose(y, [0.5, -1.0, 0.25, 32767 / 32768])


def test_stereo_and_downmix(tmp_path):
    x = np.stack([np.full(10, 0.5), np.full(10, -0.25)], axis=1)
    save_wav(tmp_path / "s.wav", WavBuffer(x))
    buf = load_wav(tmp_path / "s.wav")
    assert buf.channels == 2
    with pytest.raises(ConfigurationError):
        buf.require_full_band_mono()
    np.testing.assert_allclose(buf.downmix().samples, 0.125)


def test_truncated_file_rejected(tmp_path):
    save_wav(tmp_path / "t.wav", WavBuffer(np.zeros(100)))
    data = (tmp_path / "t.wav").read_bytes()
    (tmp_path / "t.wav").write_bytes(data[:-50])
    with pytest.raises(FormatError, match="data"):
        load_wav(tmp_path / "t.wav")


def test_bad_header_rejected(tmp_path):
    (tmp_path / "b.wav").write_bytes(b"RIFX\x00\x00\x00\x00WAVE")
    with pytest.raises(FormatError, match="RIFF"):
        load_wav(tmp_path / "b.wav")


def test_unsupported_codec_names_fmt_chunk(tmp_path):
    fmt = struct.pack("<HHIIHH", 1, 1, RATE, RATE * 3, 3, 24)
    body = b"WAVE" + b"fmt " + struct.pack("<I", 16) + fmt + b"data" + struct.pack("<I", 3) + b"\x00\x00\x00\x00"
    (tmp_path / "c.wav").write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)
    with pytest.raises(FormatError, match="fmt "):
        load_wav(tmp_path / "c.wav")
