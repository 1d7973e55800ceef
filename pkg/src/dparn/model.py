"""Dual-path attention-recurrent network (DPARN).

Signal flow for one utterance, planes stacked as (2, T, F):

    SCM -> 5 causal conv blocks -> intra (attention over frequency, per frame)
        -> inter (LSTM over time, per compressed bin) -> two transposed-conv
        decoders with concatenated skips -> one iSCM per decoder

Tensors inside the convolutional part are laid out (channel, freq, time); the
dual-path block works on (time, freq, channel).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .autodiff import (
    Module,
    Parameter,
    Tensor,
    batch_norm,
    concat,
    conv2d,
    conv2d_transpose,
    instance_norm,
    lstm,
    no_grad,
    prelu,
    relu,
    softmax,
    stack,
    transpose,
)
from .autodiff.nn import BN_MOMENTUM
from .autodiff.conv import conv_output_freq, default_freq_pad
from .errors import ConfigurationError, DimensionError
from .scm import ScmLayout, build_init_matrix, init_iscm


@dataclass(frozen=True)
class DparnConfig:
    n_bins: int = 601
    n_compressed: int = 256
    n_low: int = 125
    bin_hz: float = 40.0
    enc_channels: tuple = (16, 32, 48, 64, 80)
    enc_kernels: tuple = ((5, 2), (3, 2), (3, 2), (3, 2), (2, 1))
    enc_strides: tuple = ((2, 1), (1, 1), (1, 1), (1, 1), (1, 1))
    n_blocks: int = 2
    n_heads: int = 8
    ffn_mult: int = 4
    lstm_hidden: int = 127
    dtype: str = "float32"

    def __post_init__(self):
        for name in ("enc_channels", "enc_kernels", "enc_strides"):
            value = getattr(self, name)
            if name == "enc_channels":
                object.__setattr__(self, name, tuple(int(v) for v in value))
            else:
                object.__setattr__(self, name, tuple(tuple(int(u) for u in v) for v in value))
        if not len(self.enc_channels) == len(self.enc_kernels) == len(self.enc_strides):
            raise ConfigurationError("encoder channel/kernel/stride lists differ in length")
        if self.channels % self.n_heads:
            raise ConfigurationError(
                f"channel count {self.channels} not divisible by {self.n_heads} heads"
            )
        if self.channels % 2:
            raise ConfigurationError("positional encoding needs an even channel count")
        if self.dtype not in ("float32", "float64"):
            raise ConfigurationError(f"unsupported dtype {self.dtype}")

    @property
    def channels(self) -> int:
        return self.enc_channels[-1]

    @property
    def layout(self) -> ScmLayout:
        return ScmLayout(self.n_bins, self.n_compressed, self.n_low, self.bin_hz)

    def freq_trace(self) -> list[int]:
        """Frequency extent entering each encoder layer, then the encoder output."""
        trace = [self.n_compressed]
        for (kf, _), (sf, _) in zip(self.enc_kernels, self.enc_strides):
            trace.append(conv_output_freq(trace[-1], kf, sf, default_freq_pad(kf)))
        return trace

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> DparnConfig:
        return cls(**json.loads(text))

    @classmethod
    def reduced(cls, **overrides) -> DparnConfig:
        """Small configuration (C=16, H=4, B=1) for desk-scale training and checks."""
        base = dict(
            enc_channels=(8, 8, 16, 16, 16),
            n_blocks=1,
            n_heads=4,
            lstm_hidden=32,
        )
        base.update(overrides)
        return cls(**base)


def positional_encoding(n_pos: int, channels: int) -> np.ndarray:
    """Sinusoidal table: [p, 2i] = sin(p / 10000^(2i/C)), [p, 2i+1] = cos(...)."""
    if channels % 2:
        raise ConfigurationError("positional encoding needs an even channel count")
    pos = np.arange(n_pos, dtype=np.float64)[:, None]
    rate = 10000.0 ** (np.arange(0, channels, 2, dtype=np.float64) / channels)
    pe = np.zeros((n_pos, channels))
    pe[:, 0::2] = np.sin(pos / rate)
    pe[:, 1::2] = np.cos(pos / rate)
    return pe


def multi_head_attention(x, wq, wk, wv, wo, n_heads: int, weights_out: list | None = None):
    """Self-attention over axis -2 of ``x`` (..., N, C); leading axes are batch.

    Queries, keys and values are all ``x``. Each head sees a C/H slice of the
    projections; heads are concatenated and projected by ``wo``.
    """
    *lead, n, c = x.shape
    if c % n_heads:
        raise ConfigurationError(f"channel count {c} not divisible by {n_heads} heads")
    d = c // n_heads
    nl = len(lead)
    split = (*lead, n, n_heads, d)
    perm = (*range(nl), nl + 1, nl, nl + 2)  # (..., H, N, d)

    q = transpose((x @ wq).reshape(split), perm)
    k = transpose((x @ wk).reshape(split), perm)
    v = transpose((x @ wv).reshape(split), perm)
    kt = transpose(k, (*range(nl + 1), nl + 2, nl + 1))
    attn = softmax((q @ kt) * (1.0 / np.sqrt(d)), axis=-1)
    if weights_out is not None:
        weights_out.append(attn.data)
    heads = transpose(attn @ v, perm).reshape(*lead, n, c)
    return heads @ wo


def feed_forward(x, w1, b1, w2, b2):
    return relu(x @ w1 + b1) @ w2 + b2


class _Init:
    """Seeded initializers shared by one model build."""

    def __init__(self, rng: np.random.Generator, dtype):
        self.rng = rng
        self.dtype = dtype

    def param(self, value, trainable=True) -> Parameter:
        return Parameter(np.asarray(value, dtype=self.dtype), trainable=trainable)

    def uniform(self, shape, bound) -> Parameter:
        return self.param(self.rng.uniform(-bound, bound, size=shape))

    def glorot(self, fan_in, fan_out) -> Parameter:
        return self.uniform((fan_in, fan_out), np.sqrt(6.0 / (fan_in + fan_out)))

    def zeros(self, *shape, trainable=True) -> Parameter:
        return self.param(np.zeros(shape), trainable)

    def ones(self, *shape, trainable=True) -> Parameter:
        return self.param(np.ones(shape), trainable)


class _NormAct(Module):
    """Batch norm followed by channel-wise PReLU."""

    def __init__(self, init: _Init, ch: int):
        self.bn_gamma = init.ones(ch)
        self.bn_beta = init.zeros(ch)
        self.bn_mean = init.zeros(ch, trainable=False)
        self.bn_var = init.ones(ch, trainable=False)
        self.prelu = init.param(np.full(ch, 0.25))
        self.momentum = BN_MOMENTUM

    def __call__(self, x):
        x = batch_norm(
            x, self.bn_gamma, self.bn_beta, self.bn_mean.data, self.bn_var.data,
            self.training, self.momentum,
        )
        return prelu(x, self.prelu, axis=0)


class ConvBlock(Module):
    def __init__(self, init: _Init, cin, cout, kernel, stride):
        kf, kt = kernel
        self.stride = tuple(stride)
        self.weight = init.uniform((cout, cin, kf, kt), 1.0 / np.sqrt(cin * kf * kt))
        self.bias = init.zeros(cout)
        self.norm = _NormAct(init, cout)

    def __call__(self, x):
        return self.norm(conv2d(x, self.weight, self.bias, self.stride))


class DeconvBlock(Module):
    def __init__(self, init: _Init, cin, cout, kernel, stride, out_freq, activate=True):
        kf, kt = kernel
        self.stride = tuple(stride)
        self.out_freq = out_freq
        self.weight = init.uniform((cin, cout, kf, kt), 1.0 / np.sqrt(cin * kf * kt))
        self.bias = init.zeros(cout)
        if activate:
            self.norm = _NormAct(init, cout)

    def __call__(self, x):
        y = conv2d_transpose(x, self.weight, self.bias, self.stride, self.out_freq)
        return self.norm(y) if hasattr(self, "norm") else y


class AttentionBlock(Module):
    """One multi-head attention layer and one feed-forward layer, each residual."""

    def __init__(self, init: _Init, c: int, n_heads: int, ffn_mult: int):
        self.n_heads = n_heads
        self.wq = init.glorot(c, c)
        self.wk = init.glorot(c, c)
        self.wv = init.glorot(c, c)
        self.wo = init.glorot(c, c)
        self.ffn_w1 = init.glorot(c, ffn_mult * c)
        self.ffn_b1 = init.zeros(ffn_mult * c)
        self.ffn_w2 = init.glorot(ffn_mult * c, c)
        self.ffn_b2 = init.zeros(c)

    def __call__(self, x, weights_out=None):
        x = x + multi_head_attention(x, self.wq, self.wk, self.wv, self.wo, self.n_heads, weights_out)
        return x + feed_forward(x, self.ffn_w1, self.ffn_b1, self.ffn_w2, self.ffn_b2)


class IntraBlock(Module):
    """Attention along frequency within each frame; input/output (T, F', C)."""

    def __init__(self, init: _Init, cfg: DparnConfig, n_freq: int):
        c = cfg.channels
        self.pe = positional_encoding(n_freq, c).astype(init.dtype)
        self.blocks = [AttentionBlock(init, c, cfg.n_heads, cfg.ffn_mult) for _ in range(cfg.n_blocks)]
        self.fc_w = init.glorot(c, c)
        self.fc_b = init.zeros(c)
        self.in_gamma = init.ones(c)
        self.in_beta = init.zeros(c)
        self.use_pe = True

    def __call__(self, x, weights_out=None):
        h = x + self.pe if self.use_pe else x
        for blk in self.blocks:
            h = blk(h, weights_out)
        return instance_norm(h @ self.fc_w + self.fc_b, self.in_gamma, self.in_beta, axis=1) + x


class InterBlock(Module):
    """Causal LSTM along time for every compressed bin; input/output (T, F', C)."""

    def __init__(self, init: _Init, cfg: DparnConfig):
        c, hd = cfg.channels, cfg.lstm_hidden
        self.lstm_weight = init.uniform((4 * hd, c + hd), 1.0 / np.sqrt(hd))
        bias = np.zeros(4 * hd)
        bias[hd : 2 * hd] = 1.0  # forget gate
        self.lstm_bias = init.param(bias)
        self.fc_w = init.glorot(hd, c)
        self.fc_b = init.zeros(c)
        self.in_gamma = init.ones(c)
        self.in_beta = init.zeros(c)

    def __call__(self, x):
        h = lstm(transpose(x, (1, 0, 2)), self.lstm_weight, self.lstm_bias)
        y = transpose(h @ self.fc_w + self.fc_b, (1, 0, 2))
        return instance_norm(y, self.in_gamma, self.in_beta, axis=1) + x


class DualPathBlock(Module):
    def __init__(self, init: _Init, cfg: DparnConfig, n_freq: int):
        self.intra = IntraBlock(init, cfg, n_freq)
        self.inter = InterBlock(init, cfg)

    def __call__(self, feats, weights_out=None):
        x = transpose(feats, (2, 1, 0))
        x = self.inter(self.intra(x, weights_out))
        return transpose(x, (2, 1, 0))


class Decoder(Module):
    """Mirror of the encoder ending in one plane, followed by its own iSCM."""

    def __init__(self, init: _Init, cfg: DparnConfig):
        chans = (1,) + cfg.enc_channels
        trace = cfg.freq_trace()
        layers = []
        for i in reversed(range(len(cfg.enc_channels))):
            layers.append(
                DeconvBlock(
                    init,
                    2 * chans[i + 1],
                    chans[i] if i > 0 else 1,
                    cfg.enc_kernels[i],
                    cfg.enc_strides[i],
                    trace[i],
                    activate=i > 0,
                )
            )
        self.layers = layers
        self.iscm = init.param(init_iscm(cfg.layout, init.rng))

    def __call__(self, h, skips):
        for layer, skip in zip(self.layers, reversed(skips)):
            h = layer(concat([h, skip], axis=0))
        plane = transpose(h.reshape(h.shape[1], h.shape[2]), (1, 0))  # (T, Fc)
        return plane @ self.iscm.T


class DparnModel(Module):
    """Full network mapping (2, T, F) noisy planes to (2, T, F) estimated planes."""

    def __init__(self, cfg: DparnConfig | None = None, seed: int = 0):
        cfg = cfg or DparnConfig()
        self.config = cfg
        dtype = np.dtype(cfg.dtype).type
        init = _Init(np.random.default_rng(seed), dtype)
        w = build_init_matrix(cfg.layout).matrix
        self.scm_low = init.param(w[: cfg.n_low], trainable=False)
        self.scm_high = init.param(w[cfg.n_low :])
        chans = (2,) + cfg.enc_channels
        self.encoder = [
            ConvBlock(init, chans[i], chans[i + 1], cfg.enc_kernels[i], cfg.enc_strides[i])
            for i in range(len(cfg.enc_channels))
        ]
        self.dual_path = DualPathBlock(init, cfg, cfg.freq_trace()[-1])
        self.decoder_real = Decoder(init, cfg)
        self.decoder_imag = Decoder(init, cfg)
        self.finalize()

    @property
    def dtype(self):
        return np.dtype(self.config.dtype).type

    def scm_matrix(self) -> Tensor:
        return concat([self.scm_low, self.scm_high], axis=0)

    def __call__(self, planes, trace: list | None = None, weights_out: list | None = None) -> Tensor:
        planes = planes if isinstance(planes, Tensor) else Tensor(np.asarray(planes, dtype=self.dtype))
        if planes.ndim != 3 or planes.shape[0] != 2 or planes.shape[2] != self.config.n_bins:
            raise DimensionError(
                f"model expects (2, T, {self.config.n_bins}) planes, got {planes.shape}"
            )

        def note(name, t):
            if trace is not None:
                trace.append((name, t.shape))
            return t

        comp = note("scm", transpose(planes @ self.scm_matrix().T, (0, 2, 1)))
        h = comp
        skips = []
        for i, layer in enumerate(self.encoder):
            h = note(f"encoder.{i}", layer(h))
            skips.append(h)
        h = note("dual_path", self.dual_path(h, weights_out))
        real = note("decoder_real", self.decoder_real(h, skips))
        imag = note("decoder_imag", self.decoder_imag(h, skips))
        return note("output", stack([real, imag], axis=0))

    def enhance_spectrogram(self, spec: np.ndarray) -> np.ndarray:
        """Inference on a (T, F) complex spectrogram; returns (T, F) complex."""
        spec = np.asarray(spec)
        if spec.ndim != 2 or spec.shape[1] != self.config.n_bins:
            raise DimensionError(
                f"expected (T, {self.config.n_bins}) spectrogram, got {spec.shape}"
            )
        planes = np.stack([spec.real, spec.imag]).astype(self.dtype)
        with no_grad():
            out = self(planes).data
        return out[0].astype(np.float64) + 1j * out[1].astype(np.float64)

    def layer_table(self, n_frames: int = 1) -> list[tuple[str, tuple, int]]:
        """(layer, output shape, trainable parameter count) rows for a summary."""
        trace: list = []
        was = self.training
        self.eval()
        with no_grad():
            self(np.zeros((2, n_frames, self.config.n_bins), dtype=self.dtype), trace=trace)
        self.train(was)
        counts: dict[str, int] = {}
        for name, p in self.named_parameters():
            if not p.trainable:
                continue
            top = name.split(".")[0]
            if top == "encoder":
                top = ".".join(name.split(".")[:2])
            elif top.startswith("scm"):
                top = "scm"
            counts[top] = counts.get(top, 0) + p.size
        return [(name, shape, counts.get(name, 0)) for name, shape in trace]
