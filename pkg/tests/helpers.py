"""Shared numeric oracles for the test suite.

Independent, deliberately slow reference implementations that the fast
library code is checked against: central finite differences for gradients
and quadruple-loop convolutions, plus a forward evaluator that records
which LeakyReLU branch every activation took (finite differences are only
a valid oracle while a perturbation stays inside one linear region).
"""

import numpy as np


def rel_err(a, b) -> float:
    """Norm-relative disagreement: ||a - b|| / max(||a||, ||b||, tiny)."""
    a = np.asarray(a)
    b = np.asarray(b)
    kind = np.complex128 if (np.iscomplexobj(a) or np.iscomplexobj(b)) else np.float64
    a = a.astype(kind).ravel()
    b = b.astype(kind).ravel()
    denom = max(np.linalg.norm(a), np.linalg.norm(b), np.finfo(np.float64).tiny)
    return float(np.linalg.norm(a - b) / denom)


def numeric_grad(f, x, eps: float = 1e-5) -> np.ndarray:
    """Central finite differences of the scalar function f at x."""
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.ravel()
    gflat = grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        hi = f(x)
        flat[i] = orig - eps
        lo = f(x)
        flat[i] = orig
        gflat[i] = (hi - lo) / (2.0 * eps)
    return grad


def direct_dft(x) -> np.ndarray:
    """O(N^2) definition-level DFT (per-bin loop keeps memory bounded)."""
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[0]
    idx = np.arange(n)
    out = np.empty(n, dtype=np.complex128)
    for k in range(n):
        out[k] = np.sum(x * np.exp(-2j * np.pi * k * idx / n))
    return out


def naive_conv2d(x, weight, bias, stride):
    """Quadruple-loop valid cross-correlation, float64."""
    x = np.asarray(x, dtype=np.float64)
    weight = np.asarray(weight, dtype=np.float64)
    b, _, h, w = x.shape
    o, _, kh, kw = weight.shape
    sh, sw = stride
    ho = (h - kh) // sh + 1
    wo = (w - kw) // sw + 1
    out = np.zeros((b, o, ho, wo), dtype=np.float64)
    for n in range(b):
        for f in range(o):
            for i in range(ho):
                for j in range(wo):
                    patch = x[n, :, i * sh : i * sh + kh, j * sw : j * sw + kw]
                    out[n, f, i, j] = np.sum(patch * weight[f]) + bias[f]
    return out


def dcan_loss_and_branches(model, x):
    """Reconstruction loss plus the concatenated LeakyReLU branch pattern.

    A central-difference estimate at a parameter coordinate is trustworthy
    only if both perturbed passes reproduce the unperturbed branch pattern;
    otherwise the finite-difference window straddles an activation kink.
    """
    from vibanom import nn

    slope = model.config.leaky_slope
    branches = []
    h = x
    for layer in model.conv_layers:
        pre = nn.conv2d_forward(h, layer)
        branches.append(pre >= 0)
        h = nn.leaky_relu(pre, slope)
    h = h.reshape(h.shape[0], -1)
    for layer in model.fc_layers[:-1]:
        pre = nn.dense_forward(h, layer)
        branches.append(pre >= 0)
        h = nn.leaky_relu(pre, slope)
    h = nn.dense_forward(h, model.fc_layers[-1])
    h = h.reshape(h.shape[0], *model.config.latent_shape)
    for layer in model.deconv_layers[:-1]:
        pre = nn.conv_transpose2d_forward(h, layer)
        branches.append(pre >= 0)
        h = nn.leaky_relu(pre, slope)
    xhat = nn.conv_transpose2d_forward(h, model.deconv_layers[-1])
    loss = float(np.mean((np.asarray(xhat, np.float64) - np.asarray(x, np.float64)) ** 2))
    return loss, np.concatenate([b.ravel() for b in branches])


def naive_conv_transpose2d(x, weight, bias, stride):
    """Loop-based scatter-add transposed convolution, float64.

    weight has shape (in_channels, out_channels, kh, kw).
    """
    x = np.asarray(x, dtype=np.float64)
    weight = np.asarray(weight, dtype=np.float64)
    b, c, h, w = x.shape
    _, o, kh, kw = weight.shape
    sh, sw = stride
    ho = (h - 1) * sh + kh
    wo = (w - 1) * sw + kw
    out = np.zeros((b, o, ho, wo), dtype=np.float64)
    for n in range(b):
        for ci in range(c):
            for i in range(h):
                for j in range(w):
                    out[n, :, i * sh : i * sh + kh, j * sw : j * sw + kw] += (
                        x[n, ci, i, j] * weight[ci]
                    )
    for f in range(o):
        out[:, f] += bias[f]
    return out


def reference_alarm_replay(flags, window_len=30, fresh=16, sensitized=12):
    """Brute-force hysteresis reference.

    Keeps the entire stream history and recomputes every decision from
    the rule definition by slicing, instead of maintaining a bounded
    state. Returns the list of fired booleans, one per input flag.
    """
    history = []  # (is_anomalous, fired) for every sample ever seen
    fired_flags = []
    for anom in flags:
        anom = bool(anom)
        window = history[-(window_len - 1):] if window_len > 1 else []
        count = sum(1 for a, _ in window if a) + (1 if anom else 0)
        prior = any(f for _, f in window)
        fired = anom and (count > sensitized if prior else count > fresh)
        history.append((anom, fired))
        fired_flags.append(fired)
    return fired_flags


def make_mini_ims(root, set_dir_names=("1st_test", "2nd_test", "3rd_test")):
    """Miniature IMS tree; every column holds the constant set*100 + channel.

    Set1: 8 channels x 2 files, Set2: 4 x 2, Set3: 4 x 1; each file has
    two 4096-point windows per channel.
    """
    from vibanom.ingest import FRAME_LEN

    rows = 2 * FRAME_LEN
    layout = [
        (set_dir_names[0], 1, 8, ["2004.02.12.10.32.39", "2004.02.12.10.42.39"]),
        (set_dir_names[1], 2, 4, ["2004.02.12.10.32.39", "2004.02.12.10.42.39"]),
        (set_dir_names[2], 3, 4, ["2004.03.04.09.27.46"]),
    ]
    for dirname, set_no, cols, names in layout:
        directory = root / dirname
        directory.mkdir(parents=True)
        matrix = np.empty((rows, cols))
        for c in range(cols):
            matrix[:, c] = set_no * 100 + (c + 1)
        body = "\n".join("\t".join("%.5f" % v for v in row) for row in matrix)
        for name in names:
            (directory / name).write_text(body + "\n")
