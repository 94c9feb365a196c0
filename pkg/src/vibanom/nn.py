"""Minimal dense-tensor kernel for the reconstruction network.

Forward and backward passes for the only layer types the model needs: valid
(unpadded) 2-D convolution, 2-D transposed convolution, fully connected
layers, LeakyReLU, mean squared error, uniform parameter initialization and
a bias-corrected Adam update.

Everything is a plain function over numpy arrays in NCHW or (batch, features)
layout. Operations preserve the dtype of their inputs: float32 is the
production mode, float64 is what the gradient-checking tests use. Functions
never mutate their arguments except ``adam_step``, which updates parameters
and optimizer moments in place for its single owning training loop; all other
operations are pure and safe to call concurrently.

The convolutions are vectorised with strided window views and ``einsum``.
The test suite pins them against a naive quadruple-loop reference to within
1e-6 relative error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigurationError, DimensionError, TrainingError

__all__ = [
    "Conv2dLayer",
    "ConvTranspose2dLayer",
    "DenseLayer",
    "AdamState",
    "conv2d_forward",
    "conv2d_backward",
    "conv_transpose2d_forward",
    "conv_transpose2d_backward",
    "dense_forward",
    "dense_backward",
    "leaky_relu",
    "leaky_relu_backward",
    "mse",
    "adam_step",
    "init_params",
    "conv_output_hw",
    "conv_transpose_output_hw",
]


def conv_output_hw(h: int, w: int, kernel: tuple[int, int], stride: tuple[int, int]) -> tuple[int, int]:
    """Spatial output size of a valid convolution: floor((n - k) / s) + 1."""
    kh, kw = kernel
    sh, sw = stride
    if kh > h:
        raise DimensionError(f"kernel height {kh} exceeds input height {h} (axis 2)")
    if kw > w:
        raise DimensionError(f"kernel width {kw} exceeds input width {w} (axis 3)")
    return (h - kh) // sh + 1, (w - kw) // sw + 1


def conv_transpose_output_hw(h: int, w: int, kernel: tuple[int, int], stride: tuple[int, int]) -> tuple[int, int]:
    """Spatial output size of a transposed convolution: (n - 1) * s + k."""
    kh, kw = kernel
    sh, sw = stride
    return (h - 1) * sh + kh, (w - 1) * sw + kw


@dataclass
class Conv2dLayer:
    """Valid (zero-padding-free) 2-D convolution parameters.

    weight has shape (out_channels, in_channels, kh, kw); bias (out_channels,).
    """

    in_channels: int
    out_channels: int
    kernel: tuple[int, int]
    stride: tuple[int, int]
    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        expected = (self.out_channels, self.in_channels, *self.kernel)
        if self.weight.shape != expected:
            raise ConfigurationError(
                f"conv weight shape {self.weight.shape} does not match {expected}"
            )
        if self.bias.shape != (self.out_channels,):
            raise ConfigurationError(f"conv bias shape {self.bias.shape} != ({self.out_channels},)")
        if min(self.kernel) < 1 or min(self.stride) < 1:
            raise ConfigurationError("kernel and stride sizes must be >= 1")

    @classmethod
    def zeros(cls, in_channels, out_channels, kernel, stride, dtype=np.float32):
        kernel = tuple(kernel)
        return cls(
            in_channels,
            out_channels,
            kernel,
            tuple(stride),
            np.zeros((out_channels, in_channels, *kernel), dtype),
            np.zeros(out_channels, dtype),
        )

    def astype(self, dtype) -> "Conv2dLayer":
        return Conv2dLayer(
            self.in_channels, self.out_channels, self.kernel, self.stride,
            self.weight.astype(dtype), self.bias.astype(dtype),
        )


@dataclass
class ConvTranspose2dLayer:
    """Transposed 2-D convolution, the linear adjoint of the valid convolution.

    weight has shape (in_channels, out_channels, kh, kw), so a forward-conv
    kernel of shape (o, i, kh, kw) can be shared directly by the transposed
    layer that maps o channels back to i channels.
    """

    in_channels: int
    out_channels: int
    kernel: tuple[int, int]
    stride: tuple[int, int]
    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        expected = (self.in_channels, self.out_channels, *self.kernel)
        if self.weight.shape != expected:
            raise ConfigurationError(
                f"transposed-conv weight shape {self.weight.shape} does not match {expected}"
            )
        if self.bias.shape != (self.out_channels,):
            raise ConfigurationError(f"bias shape {self.bias.shape} != ({self.out_channels},)")
        if min(self.kernel) < 1 or min(self.stride) < 1:
            raise ConfigurationError("kernel and stride sizes must be >= 1")

    @classmethod
    def zeros(cls, in_channels, out_channels, kernel, stride, dtype=np.float32):
        kernel = tuple(kernel)
        return cls(
            in_channels,
            out_channels,
            kernel,
            tuple(stride),
            np.zeros((in_channels, out_channels, *kernel), dtype),
            np.zeros(out_channels, dtype),
        )

    def astype(self, dtype) -> "ConvTranspose2dLayer":
        return ConvTranspose2dLayer(
            self.in_channels, self.out_channels, self.kernel, self.stride,
            self.weight.astype(dtype), self.bias.astype(dtype),
        )


@dataclass
class DenseLayer:
    """Affine map y = x @ weight.T + bias with weight shape (out, in)."""

    in_features: int
    out_features: int
    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        if self.weight.shape != (self.out_features, self.in_features):
            raise ConfigurationError(
                f"dense weight shape {self.weight.shape} != ({self.out_features}, {self.in_features})"
            )
        if self.bias.shape != (self.out_features,):
            raise ConfigurationError(f"dense bias shape {self.bias.shape} != ({self.out_features},)")

    @classmethod
    def zeros(cls, in_features, out_features, dtype=np.float32):
        return cls(
            in_features,
            out_features,
            np.zeros((out_features, in_features), dtype),
            np.zeros(out_features, dtype),
        )

    def astype(self, dtype) -> "DenseLayer":
        return DenseLayer(
            self.in_features, self.out_features,
            self.weight.astype(dtype), self.bias.astype(dtype),
        )


def _check_4d(x: np.ndarray, what: str) -> None:
    if x.ndim != 4:
        raise DimensionError(f"{what} must be 4-D (batch, channels, height, width), got {x.ndim}-D")


def _windows(x: np.ndarray, kernel: tuple[int, int], stride: tuple[int, int]) -> np.ndarray:
    """Strided view (B, C, Ho, Wo, kh, kw) of all kernel-sized patches."""
    win = sliding_window_view(x, kernel, axis=(2, 3))
    return win[:, :, :: stride[0], :: stride[1]]


def conv2d_forward(x: np.ndarray, layer: Conv2dLayer) -> np.ndarray:
    """Valid cross-correlation with stride; output (B, out_channels, Ho, Wo)."""
    _check_4d(x, "conv2d input")
    if x.shape[1] != layer.in_channels:
        raise DimensionError(
            f"conv2d input has {x.shape[1]} channels, layer expects {layer.in_channels} (axis 1)"
        )
    conv_output_hw(x.shape[2], x.shape[3], layer.kernel, layer.stride)
    win = _windows(x, layer.kernel, layer.stride)
    out = np.einsum("bchwij,ocij->bohw", win, layer.weight, optimize=True)
    out += layer.bias[None, :, None, None]
    return out


def conv2d_backward(
    x: np.ndarray, layer: Conv2dLayer, upstream: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of sum(conv2d_forward(x) * upstream) w.r.t. input, weight, bias."""
    _check_4d(x, "conv2d input")
    _check_4d(upstream, "conv2d upstream gradient")
    ho, wo = conv_output_hw(x.shape[2], x.shape[3], layer.kernel, layer.stride)
    expected = (x.shape[0], layer.out_channels, ho, wo)
    if upstream.shape != expected:
        raise DimensionError(f"upstream gradient shape {upstream.shape} != {expected}")
    kh, kw = layer.kernel
    sh, sw = layer.stride

    grad_bias = upstream.sum(axis=(0, 2, 3))
    win = _windows(x, layer.kernel, layer.stride)
    grad_weight = np.einsum("bohw,bchwij->ocij", upstream, win, optimize=True)

    grad_input = np.zeros_like(x)
    contrib = np.einsum("bohw,ocij->bchwij", upstream, layer.weight, optimize=True)
    for i in range(kh):
        for j in range(kw):
            grad_input[:, :, i : i + (ho - 1) * sh + 1 : sh, j : j + (wo - 1) * sw + 1 : sw] += contrib[..., i, j]
    return grad_input, grad_weight, grad_bias


def conv_transpose2d_forward(x: np.ndarray, layer: ConvTranspose2dLayer) -> np.ndarray:
    """Strided scatter-add upsampling; the adjoint of conv2d_forward.

    Output spatial size is (H - 1) * sh + kh by (W - 1) * sw + kw.
    """
    _check_4d(x, "transposed-conv input")
    if x.shape[1] != layer.in_channels:
        raise DimensionError(
            f"transposed-conv input has {x.shape[1]} channels, layer expects {layer.in_channels} (axis 1)"
        )
    b, _, h, w = x.shape
    kh, kw = layer.kernel
    sh, sw = layer.stride
    ho, wo = conv_transpose_output_hw(h, w, layer.kernel, layer.stride)

    out = np.zeros((b, layer.out_channels, ho, wo), dtype=x.dtype)
    contrib = np.einsum("bihw,ioxy->bohwxy", x, layer.weight, optimize=True)
    for i in range(kh):
        for j in range(kw):
            out[:, :, i : i + (h - 1) * sh + 1 : sh, j : j + (w - 1) * sw + 1 : sw] += contrib[..., i, j]
    out += layer.bias[None, :, None, None]
    return out


def conv_transpose2d_backward(
    x: np.ndarray, layer: ConvTranspose2dLayer, upstream: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of sum(conv_transpose2d_forward(x) * upstream)."""
    _check_4d(x, "transposed-conv input")
    _check_4d(upstream, "transposed-conv upstream gradient")
    ho, wo = conv_transpose_output_hw(x.shape[2], x.shape[3], layer.kernel, layer.stride)
    expected = (x.shape[0], layer.out_channels, ho, wo)
    if upstream.shape != expected:
        raise DimensionError(f"upstream gradient shape {upstream.shape} != {expected}")

    grad_bias = upstream.sum(axis=(0, 2, 3))
    # Windows of the upstream map line up one-to-one with input positions.
    win = _windows(upstream, layer.kernel, layer.stride)
    grad_input = np.einsum("bohwxy,ioxy->bihw", win, layer.weight, optimize=True)
    grad_weight = np.einsum("bihw,bohwxy->ioxy", x, win, optimize=True)
    return grad_input, grad_weight, grad_bias


def dense_forward(x: np.ndarray, layer: DenseLayer) -> np.ndarray:
    """Affine map over a (batch, features) input."""
    if x.ndim != 2:
        raise DimensionError(f"dense input must be 2-D (batch, features), got {x.ndim}-D")
    if x.shape[1] != layer.in_features:
        raise DimensionError(
            f"dense input has {x.shape[1]} features, layer expects {layer.in_features} (axis 1)"
        )
    return x @ layer.weight.T + layer.bias


def dense_backward(
    x: np.ndarray, layer: DenseLayer, upstream: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact gradients of the affine map."""
    if upstream.shape != (x.shape[0], layer.out_features):
        raise DimensionError(
            f"upstream gradient shape {upstream.shape} != ({x.shape[0]}, {layer.out_features})"
        )
    grad_input = upstream @ layer.weight
    grad_weight = upstream.T @ x
    grad_bias = upstream.sum(axis=0)
    return grad_input, grad_weight, grad_bias


def leaky_relu(x: np.ndarray, slope: float = 0.01) -> np.ndarray:
    """Elementwise x if x >= 0 else slope * x."""
    return np.where(x >= 0, x, x * slope)


def leaky_relu_backward(x: np.ndarray, upstream: np.ndarray, slope: float = 0.01) -> np.ndarray:
    """Upstream scaled by 1 where x >= 0 (including exactly 0) else by slope."""
    dt = x.dtype.type
    return upstream * np.where(x >= 0, dt(1.0), dt(slope))


def mse(a: np.ndarray, b: np.ndarray) -> float:
    """Mean over all elements of the squared difference."""
    if a.shape != b.shape:
        raise DimensionError(f"mse operands have different shapes: {a.shape} vs {b.shape}")
    d = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    return float(np.mean(d * d))


@dataclass
class AdamState:
    """Optimizer state: one first/second moment pair per named parameter."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    first_moment: dict = field(default_factory=dict)
    second_moment: dict = field(default_factory=dict)

    def __post_init__(self):
        if min(self.lr, self.beta1, self.beta2, self.epsilon) <= 0:
            raise ConfigurationError("Adam hyperparameters must be positive")

    @classmethod
    def for_params(cls, params: dict, lr: float = 1e-3, beta1: float = 0.9,
                   beta2: float = 0.999, epsilon: float = 1e-8) -> "AdamState":
        state = cls(lr=lr, beta1=beta1, beta2=beta2, epsilon=epsilon)
        for name, p in params.items():
            state.first_moment[name] = np.zeros_like(p)
            state.second_moment[name] = np.zeros_like(p)
        return state


def adam_step(params: dict, grads: dict, state: AdamState) -> None:
    """One bias-corrected Adam update, applied to the parameters in place.

    Deterministic given inputs; raises TrainingError naming the parameter if
    any gradient element is non-finite.
    """
    state.step_count += 1
    t = state.step_count
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise DimensionError(f"gradient shape {g.shape} != parameter '{name}' shape {p.shape}")
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient for parameter '{name}'")
        m = state.first_moment[name]
        v = state.second_moment[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)


def _fan_in(layer) -> int:
    if isinstance(layer, Conv2dLayer):
        return layer.in_channels * layer.kernel[0] * layer.kernel[1]
    if isinstance(layer, ConvTranspose2dLayer):
        return layer.in_channels * layer.kernel[0] * layer.kernel[1]
    if isinstance(layer, DenseLayer):
        return layer.in_features
    raise ConfigurationError(f"cannot initialize object of type {type(layer).__name__}")


def init_params(layer, seed):
    """Fill weights uniformly in [-s, s] with s = sqrt(1 / fan_in); zero biases.

    Reproducible: equal seeds give identical draws. Returns the same layer.
    """
    rng = np.random.default_rng(seed)
    s = math.sqrt(1.0 / _fan_in(layer))
    layer.weight[...] = rng.uniform(-s, s, size=layer.weight.shape)
    layer.bias[...] = 0
    return layer
