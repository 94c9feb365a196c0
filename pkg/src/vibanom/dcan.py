"""Convolutional auto-encoding reconstruction network.

Assembles the fixed three-stage architecture (convolutional feature
extraction, fully connected auto-encoding, transposed-convolution
reconstruction) over standardized vibration frames of shape
(batch, 1, axes, frame_len), and computes per-axis and aggregate
reconstruction MSE reports.

With the default configuration the encoder maps a 3 x 4096 frame to a
16 x 1 x 57 feature block (912 values flat), the five fully connected
layers auto-encode that vector through hidden width 200, and the decoder
restores the original frame size exactly. Inference never mutates the
model, so concurrent reconstruct calls on a shared model are safe;
training updates parameters in place and needs exclusive access.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nn
from .errors import ConfigurationError, DimensionError

__all__ = [
    "ConvSpec",
    "DcanConfig",
    "DcanModel",
    "ReconstructionReport",
    "build",
    "encode",
    "decode",
    "reconstruct",
    "reconstruction_report",
    "loss_and_gradients",
    "parameter_count",
]


@dataclass(frozen=True)
class ConvSpec:
    """One encoder convolution: channels, kernel and stride."""

    in_channels: int
    out_channels: int
    kernel: tuple[int, int]
    stride: tuple[int, int]


def default_conv_specs(axes: int) -> tuple[ConvSpec, ...]:
    """The pinned encoder stack; the first kernel spans all input axes."""
    return (
        ConvSpec(1, 8, (axes, 64), (1, 16)),
        ConvSpec(8, 16, (1, 13), (1, 4)),
        ConvSpec(16, 16, (1, 5), (1, 1)),
    )


@dataclass
class DcanConfig:
    """Architecture hyperparameters.

    axes is the frame height (1 or 3 vibration axes), frame_len the number
    of points per axis. conv_specs defaults to the pinned three-layer stack;
    fc_widths are the four hidden widths of the five-weight-layer
    auto-encoding module.
    """

    axes: int = 3
    frame_len: int = 4096
    leaky_slope: float = 0.01
    conv_specs: tuple[ConvSpec, ...] | None = None
    fc_widths: tuple[int, ...] = (200, 200, 200, 200)

    def __post_init__(self):
        if self.conv_specs is None:
            self.conv_specs = default_conv_specs(self.axes)
        self.conv_specs = tuple(self.conv_specs)
        self.fc_widths = tuple(self.fc_widths)

    def validate(self) -> None:
        """Raise ConfigurationError unless the layer table chains exactly."""
        if self.axes not in (1, 3):
            raise ConfigurationError(f"unsupported axis count {self.axes}; expected 1 or 3")
        if self.frame_len < 1:
            raise ConfigurationError(f"frame_len must be positive, got {self.frame_len}")
        if len(self.conv_specs) != 3:
            raise ConfigurationError(f"expected 3 convolution specs, got {len(self.conv_specs)}")
        if len(self.fc_widths) != 4:
            raise ConfigurationError(f"expected 4 hidden widths, got {len(self.fc_widths)}")
        if any(w < 1 for w in self.fc_widths):
            raise ConfigurationError("hidden widths must be positive")
        if self.conv_specs[0].in_channels != 1:
            raise ConfigurationError("first convolution must take 1 input channel")
        h, w = self.axes, self.frame_len
        for i, spec in enumerate(self.conv_specs, start=1):
            if i > 1 and spec.in_channels != self.conv_specs[i - 2].out_channels:
                raise ConfigurationError(
                    f"conv{i} expects {spec.in_channels} channels but conv{i - 1} "
                    f"produces {self.conv_specs[i - 2].out_channels}"
                )
            kh, kw = spec.kernel
            sh, sw = spec.stride
            if kh > h or kw > w:
                raise ConfigurationError(f"conv{i} kernel {spec.kernel} exceeds input {h}x{w}")
            if (h - kh) % sh != 0 or (w - kw) % sw != 0:
                raise ConfigurationError(
                    f"conv{i} stride {spec.stride} does not tile input {h}x{w}; "
                    "the decoder could not restore the frame size"
                )
            h, w = nn.conv_output_hw(h, w, spec.kernel, spec.stride)

    def conv_shape_chain(self) -> list[tuple[int, int, int]]:
        """(channels, height, width) after each encoder convolution."""
        chain = []
        h, w = self.axes, self.frame_len
        for spec in self.conv_specs:
            h, w = nn.conv_output_hw(h, w, spec.kernel, spec.stride)
            chain.append((spec.out_channels, h, w))
        return chain

    @property
    def latent_shape(self) -> tuple[int, int, int]:
        return self.conv_shape_chain()[-1]

    @property
    def flat_size(self) -> int:
        c, h, w = self.latent_shape
        return c * h * w


@dataclass
class DcanModel:
    """The assembled network: three convs, five dense layers, three deconvs."""

    config: DcanConfig
    conv1: nn.Conv2dLayer
    conv2: nn.Conv2dLayer
    conv3: nn.Conv2dLayer
    fc1: nn.DenseLayer
    fc2: nn.DenseLayer
    fc3: nn.DenseLayer
    fc4: nn.DenseLayer
    fc5: nn.DenseLayer
    deconv1: nn.ConvTranspose2dLayer
    deconv2: nn.ConvTranspose2dLayer
    deconv3: nn.ConvTranspose2dLayer

    @property
    def conv_layers(self):
        return (self.conv1, self.conv2, self.conv3)

    @property
    def fc_layers(self):
        return (self.fc1, self.fc2, self.fc3, self.fc4, self.fc5)

    @property
    def deconv_layers(self):
        return (self.deconv1, self.deconv2, self.deconv3)

    def named_parameters(self) -> dict:
        """Live references to every parameter tensor, keyed by layer name."""
        params = {}
        names = [
            ("conv1", self.conv1), ("conv2", self.conv2), ("conv3", self.conv3),
            ("fc1", self.fc1), ("fc2", self.fc2), ("fc3", self.fc3),
            ("fc4", self.fc4), ("fc5", self.fc5),
            ("deconv1", self.deconv1), ("deconv2", self.deconv2), ("deconv3", self.deconv3),
        ]
        for name, layer in names:
            params[f"{name}.weight"] = layer.weight
            params[f"{name}.bias"] = layer.bias
        return params

    def astype(self, dtype) -> "DcanModel":
        """Copy of the model with every parameter cast to dtype."""
        return DcanModel(
            self.config,
            *(l.astype(dtype) for l in self.conv_layers),
            *(l.astype(dtype) for l in self.fc_layers),
            *(l.astype(dtype) for l in self.deconv_layers),
        )


@dataclass(frozen=True)
class ReconstructionReport:
    """Reconstruction error of one frame: one MSE per axis plus the mean."""

    per_axis_mse: tuple
    total_mse: float


def build(config: DcanConfig, seed) -> DcanModel:
    """Create and initialize a model; reproducible for equal seeds."""
    config.validate()
    flat = config.flat_size
    s1, s2, s3 = config.conv_specs

    convs = [nn.Conv2dLayer.zeros(s.in_channels, s.out_channels, s.kernel, s.stride) for s in (s1, s2, s3)]
    widths = [flat, *config.fc_widths, flat]
    fcs = [nn.DenseLayer.zeros(widths[i], widths[i + 1]) for i in range(5)]
    deconvs = [
        nn.ConvTranspose2dLayer.zeros(s.out_channels, s.in_channels, s.kernel, s.stride)
        for s in (s3, s2, s1)
    ]

    children = np.random.SeedSequence(seed).spawn(11)
    for layer, child in zip([*convs, *fcs, *deconvs], children):
        nn.init_params(layer, child)
    return DcanModel(config, *convs, *fcs, *deconvs)


def parameter_count(model: DcanModel) -> int:
    return sum(p.size for p in model.named_parameters().values())


def _check_frames(model: DcanModel, frames: np.ndarray) -> None:
    cfg = model.config
    if frames.ndim != 4 or frames.shape[1:] != (1, cfg.axes, cfg.frame_len):
        raise DimensionError(
            f"frames must have shape (B, 1, {cfg.axes}, {cfg.frame_len}), got {frames.shape}"
        )


def encode(model: DcanModel, frames: np.ndarray) -> np.ndarray:
    """Flattened post-convolution features, shape (B, flat_size)."""
    _check_frames(model, frames)
    slope = model.config.leaky_slope
    h = frames
    for layer in model.conv_layers:
        h = nn.leaky_relu(nn.conv2d_forward(h, layer), slope)
    return h.reshape(h.shape[0], -1)


def decode(model: DcanModel, features: np.ndarray) -> np.ndarray:
    """Remaining pipeline after encode: FC stack, reshape, deconv stack."""
    cfg = model.config
    if features.ndim != 2 or features.shape[1] != cfg.flat_size:
        raise DimensionError(
            f"features must have shape (B, {cfg.flat_size}), got {features.shape}"
        )
    slope = cfg.leaky_slope
    h = features
    for layer in model.fc_layers[:-1]:
        h = nn.leaky_relu(nn.dense_forward(h, layer), slope)
    h = nn.dense_forward(h, model.fc_layers[-1])
    h = h.reshape(h.shape[0], *cfg.latent_shape)
    for layer in model.deconv_layers[:-1]:
        h = nn.leaky_relu(nn.conv_transpose2d_forward(h, layer), slope)
    return nn.conv_transpose2d_forward(h, model.deconv_layers[-1])


def reconstruct(model: DcanModel, frames: np.ndarray) -> np.ndarray:
    """Full deterministic forward pass; output shape equals input shape."""
    return decode(model, encode(model, frames))


def reconstruction_report(inputs: np.ndarray, reconstructions: np.ndarray) -> list:
    """One ReconstructionReport per frame of a (B, 1, A, L) batch."""
    if inputs.shape != reconstructions.shape:
        raise DimensionError(
            f"input shape {inputs.shape} != reconstruction shape {reconstructions.shape}"
        )
    if inputs.ndim != 4 or inputs.shape[1] != 1:
        raise DimensionError(f"expected (B, 1, A, L) tensors, got {inputs.shape}")
    sq = np.square(
        np.asarray(inputs, dtype=np.float64) - np.asarray(reconstructions, dtype=np.float64)
    )
    reports = []
    for f in range(inputs.shape[0]):
        per_axis = tuple(float(v) for v in sq[f, 0].mean(axis=1))
        reports.append(ReconstructionReport(per_axis, float(sq[f].mean())))
    return reports


def loss_and_gradients(model: DcanModel, frames: np.ndarray):
    """MSE reconstruction loss and its gradient for every parameter.

    Returns (loss, grads) with grads keyed exactly like named_parameters.
    The input batch is the reconstruction target, so this is the complete
    training objective for one mini-batch.
    """
    _check_frames(model, frames)
    cfg = model.config
    slope = cfg.leaky_slope
    batch = frames.shape[0]

    conv_in, conv_pre = [], []
    h = frames
    for layer in model.conv_layers:
        conv_in.append(h)
        pre = nn.conv2d_forward(h, layer)
        conv_pre.append(pre)
        h = nn.leaky_relu(pre, slope)
    h = h.reshape(batch, -1)

    fc_in, fc_pre = [], []
    for layer in model.fc_layers[:-1]:
        fc_in.append(h)
        pre = nn.dense_forward(h, layer)
        fc_pre.append(pre)
        h = nn.leaky_relu(pre, slope)
    fc_in.append(h)
    h = nn.dense_forward(h, model.fc_layers[-1])
    h = h.reshape(batch, *cfg.latent_shape)

    dec_in, dec_pre = [], []
    for layer in model.deconv_layers[:-1]:
        dec_in.append(h)
        pre = nn.conv_transpose2d_forward(h, layer)
        dec_pre.append(pre)
        h = nn.leaky_relu(pre, slope)
    dec_in.append(h)
    xhat = nn.conv_transpose2d_forward(h, model.deconv_layers[-1])

    loss = nn.mse(xhat, frames)
    grads = {}

    g = (2.0 / xhat.size) * (xhat - frames)
    names = ["deconv3", "deconv2", "deconv1"]
    for idx in (2, 1, 0):
        layer = model.deconv_layers[idx]
        if idx != 2:
            g = nn.leaky_relu_backward(dec_pre[idx], g, slope)
        g, gw, gb = nn.conv_transpose2d_backward(dec_in[idx], layer, g)
        grads[f"{names[2 - idx]}.weight"] = gw
        grads[f"{names[2 - idx]}.bias"] = gb

    g = g.reshape(batch, cfg.flat_size)
    for idx in (4, 3, 2, 1, 0):
        layer = model.fc_layers[idx]
        if idx != 4:
            g = nn.leaky_relu_backward(fc_pre[idx], g, slope)
        g, gw, gb = nn.dense_backward(fc_in[idx], layer, g)
        grads[f"fc{idx + 1}.weight"] = gw
        grads[f"fc{idx + 1}.bias"] = gb

    g = g.reshape(batch, *cfg.latent_shape)
    for idx in (2, 1, 0):
        layer = model.conv_layers[idx]
        g = nn.leaky_relu_backward(conv_pre[idx], g, slope)
        g, gw, gb = nn.conv2d_backward(conv_in[idx], layer, g)
        grads[f"conv{idx + 1}.weight"] = gw
        grads[f"conv{idx + 1}.bias"] = gb

    return loss, grads
