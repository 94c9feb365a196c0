"""Input standardization, the training loop, and checkpoint persistence.

Frames enter training raw (in g); per-axis standardization statistics are
fitted over the training set only and applied inside the loop, so scoring
and monitoring can reuse the exact same transform later. Training is plain
shuffled mini-batch Adam on the reconstruction MSE with early stopping on a
held-out validation split; it is deterministic for a fixed seed.

Checkpoints are a portable little-endian binary format: a magic tag and
format version, a JSON metadata block (architecture and training summary),
then named float32 tensors with explicit shapes. Round trips are bit-exact.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass

import numpy as np

from . import dcan, nn
from .errors import (
    CalibrationError,
    CheckpointError,
    CheckpointFormatError,
    CheckpointTruncatedError,
    CheckpointVersionError,
    ConfigurationError,
    DimensionError,
    TrainingError,
)

__all__ = [
    "StandardizationStats",
    "TrainConfig",
    "EpochStats",
    "fit_standardization",
    "standardize",
    "destandardize",
    "train",
    "should_stop",
    "save_checkpoint",
    "load_checkpoint",
    "read_checkpoint_metadata",
    "write_loss_csv",
]

CHECKPOINT_MAGIC = b"DCAN"
CHECKPOINT_VERSION = 1
STD_FLOOR = 1e-8


@dataclass
class StandardizationStats:
    """Per-axis location and scale of the training data, in g."""

    per_axis_mean: np.ndarray
    per_axis_std: np.ndarray

    def __post_init__(self):
        self.per_axis_mean = np.asarray(self.per_axis_mean, dtype=np.float32)
        self.per_axis_std = np.asarray(self.per_axis_std, dtype=np.float32)
        if self.per_axis_mean.shape != self.per_axis_std.shape or self.per_axis_mean.ndim != 1:
            raise DimensionError("mean and std must be 1-D arrays of equal length")

    @property
    def axes(self) -> int:
        return len(self.per_axis_mean)


@dataclass
class TrainConfig:
    """Hyperparameters of the training loop."""

    lr: float = 1e-3
    batch_size: int = 64
    max_epochs: int = 200
    patience: int = 10
    seed: int = 0
    validation_fraction: float = 0.1

    def validate(self) -> None:
        if self.lr <= 0:
            raise ConfigurationError(f"lr must be positive, got {self.lr}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_epochs < 1:
            raise ConfigurationError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.patience < 1:
            raise ConfigurationError(f"patience must be >= 1, got {self.patience}")
        if not 0 < self.validation_fraction <= 0.5:
            raise ConfigurationError(
                f"validation_fraction must lie in (0, 0.5], got {self.validation_fraction}"
            )


@dataclass(frozen=True)
class EpochStats:
    """One row of the loss history."""

    epoch: int
    train_mse: float
    val_mse: float


def _check_frame_stack(frames: np.ndarray) -> None:
    if frames.ndim != 4 or frames.shape[1] != 1:
        raise DimensionError(f"expected frames of shape (N, 1, A, L), got {frames.shape}")


def fit_standardization(frames: np.ndarray) -> StandardizationStats:
    """Per-axis mean and population standard deviation over all points.

    Requires at least 2 frames; a near-constant axis (std below 1e-8) is a
    calibration failure naming the axis.
    """
    _check_frame_stack(frames)
    if frames.shape[0] < 2:
        raise CalibrationError(f"need at least 2 frames to fit statistics, got {frames.shape[0]}")
    means = []
    stds = []
    for axis in range(frames.shape[2]):
        values = frames[:, 0, axis, :]
        mean = float(values.mean(dtype=np.float64))
        std = float(values.std(dtype=np.float64))  # population (divide by N)
        if std < STD_FLOOR:
            raise CalibrationError(
                f"axis {axis} is constant (std {std:.3e} below floor {STD_FLOOR:.0e})"
            )
        means.append(mean)
        stds.append(std)
    return StandardizationStats(np.array(means), np.array(stds))


def standardize(frames: np.ndarray, stats: StandardizationStats) -> np.ndarray:
    """(x - mean_axis) / std_axis, applied per axis; preserves dtype."""
    _check_frame_stack(frames)
    if frames.shape[2] != stats.axes:
        raise DimensionError(f"frames have {frames.shape[2]} axes, stats cover {stats.axes}")
    mean = stats.per_axis_mean.astype(frames.dtype)[None, None, :, None]
    std = stats.per_axis_std.astype(frames.dtype)[None, None, :, None]
    return (frames - mean) / std


def destandardize(frames: np.ndarray, stats: StandardizationStats) -> np.ndarray:
    """Inverse of standardize."""
    _check_frame_stack(frames)
    if frames.shape[2] != stats.axes:
        raise DimensionError(f"frames have {frames.shape[2]} axes, stats cover {stats.axes}")
    mean = stats.per_axis_mean.astype(frames.dtype)[None, None, :, None]
    std = stats.per_axis_std.astype(frames.dtype)[None, None, :, None]
    return frames * std + mean


def should_stop(val_losses, patience: int) -> bool:
    """Early-stop rule: no strict validation improvement for patience epochs.

    val_losses holds one value per completed epoch; the best epoch is the
    first one reaching the minimum (ties are not improvements).
    """
    if len(val_losses) <= patience:
        return False
    best_index = int(np.argmin(val_losses))
    return (len(val_losses) - 1) - best_index >= patience


def batched_mse(model: dcan.DcanModel, frames: np.ndarray, chunk: int = 256) -> float:
    """Mean reconstruction MSE over a frame stack, bounded memory."""
    total = 0.0
    for start in range(0, frames.shape[0], chunk):
        part = frames[start : start + chunk]
        total += nn.mse(dcan.reconstruct(model, part), part) * part.shape[0]
    return total / frames.shape[0]


def train(
    model: dcan.DcanModel,
    frames: np.ndarray,
    stats: StandardizationStats,
    config: TrainConfig,
    on_batch=None,
):
    """Train the model in place on raw normal frames; returns (model, history).

    Frames are standardized with stats before any gradient work. A seeded
    permutation splits off the validation frames once, then each epoch
    shuffles the training split with a fresh permutation from the same
    generator. Training stops early when the validation loss has not
    improved for config.patience epochs. The optional on_batch callback
    receives (epoch, batch_index, batch) before each gradient step, which
    is how the tests prove validation frames never feed a gradient.
    """
    config.validate()
    _check_frame_stack(frames)
    n = frames.shape[0]
    if n < 2:
        raise TrainingError(f"need at least 2 frames to train, got {n}")

    x = standardize(frames.astype(np.float32, copy=False), stats)
    rng = np.random.default_rng(config.seed)
    n_val = max(1, int(round(n * config.validation_fraction)))
    split = rng.permutation(n)
    x_val = x[split[:n_val]]
    x_train = x[split[n_val:]]
    n_train = x_train.shape[0]

    params = model.named_parameters()
    state = nn.AdamState.for_params(params, lr=config.lr)
    history = []

    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(n_train)
        total = 0.0
        for batch_index, start in enumerate(range(0, n_train, config.batch_size)):
            batch = x_train[order[start : start + config.batch_size]]
            if on_batch is not None:
                on_batch(epoch, batch_index, batch)
            loss, grads = dcan.loss_and_gradients(model, batch)
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {epoch}, batch {batch_index}")
            nn.adam_step(params, grads, state)
            total += loss * batch.shape[0]
        train_mse = total / n_train
        val_mse = batched_mse(model, x_val)
        if not np.isfinite(val_mse):
            raise TrainingError(f"non-finite validation loss at epoch {epoch}")
        history.append(EpochStats(epoch, float(train_mse), float(val_mse)))
        if should_stop([h.val_mse for h in history], config.patience):
            break
    return model, history


def write_loss_csv(history, path) -> None:
    """Export the loss history as `epoch,train_mse,val_mse` rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_mse", "val_mse"])
        for row in history:
            writer.writerow([row.epoch, repr(row.train_mse), repr(row.val_mse)])


def _read_exact(fh, count: int, what: str) -> bytes:
    data = fh.read(count)
    if len(data) != count:
        raise CheckpointTruncatedError(
            f"checkpoint truncated while reading {what}: wanted {count} bytes, got {len(data)}"
        )
    return data


def _config_to_metadata(config: dcan.DcanConfig) -> dict:
    return {
        "axes": config.axes,
        "frame_len": config.frame_len,
        "leaky_slope": config.leaky_slope,
        "conv_specs": [
            [s.in_channels, s.out_channels, list(s.kernel), list(s.stride)]
            for s in config.conv_specs
        ],
        "fc_widths": list(config.fc_widths),
    }


def _config_from_metadata(meta: dict) -> dcan.DcanConfig:
    try:
        specs = tuple(
            dcan.ConvSpec(s[0], s[1], tuple(s[2]), tuple(s[3])) for s in meta["conv_specs"]
        )
        return dcan.DcanConfig(
            axes=meta["axes"],
            frame_len=meta["frame_len"],
            leaky_slope=meta["leaky_slope"],
            conv_specs=specs,
            fc_widths=tuple(meta["fc_widths"]),
        )
    except (KeyError, IndexError, TypeError) as exc:
        raise CheckpointFormatError(f"invalid architecture metadata: {exc}") from exc


def save_checkpoint(
    model: dcan.DcanModel,
    stats: StandardizationStats,
    path,
    training_meta: dict | None = None,
) -> None:
    """Write the model, stats and metadata; every tensor must be float32."""
    tensors = dict(model.named_parameters())
    tensors["stats.mean"] = stats.per_axis_mean
    tensors["stats.std"] = stats.per_axis_std
    for name, arr in tensors.items():
        if arr.dtype != np.float32:
            raise CheckpointError(f"tensor '{name}' has dtype {arr.dtype}; checkpoints are float32 only")

    metadata = {
        "config": _config_to_metadata(model.config),
        "training": training_meta or {},
    }
    blob = json.dumps(metadata, sort_keys=True).encode("utf-8")

    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", CHECKPOINT_VERSION))
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(struct.pack("<I", len(tensors)))
        for name, arr in tensors.items():
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", arr.ndim))
            for dim in arr.shape:
                fh.write(struct.pack("<I", dim))
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def read_checkpoint_metadata(path) -> dict:
    """Read only the JSON metadata block (architecture and training summary)."""
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic tag")
        if magic != CHECKPOINT_MAGIC:
            raise CheckpointFormatError(f"bad magic {magic!r}; not a checkpoint file")
        version = struct.unpack("<I", _read_exact(fh, 4, "format version"))[0]
        if version != CHECKPOINT_VERSION:
            raise CheckpointVersionError(
                f"unsupported checkpoint version {version}; this build reads {CHECKPOINT_VERSION}"
            )
        meta_len = struct.unpack("<I", _read_exact(fh, 4, "metadata length"))[0]
        try:
            return json.loads(_read_exact(fh, meta_len, "metadata").decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CheckpointFormatError(f"unreadable metadata block: {exc}") from exc


def load_checkpoint(path):
    """Read a checkpoint back into (model, stats); bit-exact by contract.

    Raises CheckpointFormatError on a bad magic tag or malformed content,
    CheckpointVersionError on an unsupported version, and
    CheckpointTruncatedError when the file ends early. No partial model is
    ever returned.
    """
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic tag")
        if magic != CHECKPOINT_MAGIC:
            raise CheckpointFormatError(f"bad magic {magic!r}; not a checkpoint file")
        version = struct.unpack("<I", _read_exact(fh, 4, "format version"))[0]
        if version != CHECKPOINT_VERSION:
            raise CheckpointVersionError(
                f"unsupported checkpoint version {version}; this build reads {CHECKPOINT_VERSION}"
            )
        meta_len = struct.unpack("<I", _read_exact(fh, 4, "metadata length"))[0]
        try:
            metadata = json.loads(_read_exact(fh, meta_len, "metadata").decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CheckpointFormatError(f"unreadable metadata block: {exc}") from exc

        tensor_count = struct.unpack("<I", _read_exact(fh, 4, "tensor count"))[0]
        tensors = {}
        for _ in range(tensor_count):
            name_len = struct.unpack("<H", _read_exact(fh, 2, "tensor name length"))[0]
            name = _read_exact(fh, name_len, "tensor name").decode("utf-8")
            ndim = struct.unpack("<B", _read_exact(fh, 1, f"rank of '{name}'"))[0]
            shape = tuple(
                struct.unpack("<I", _read_exact(fh, 4, f"shape of '{name}'"))[0]
                for _ in range(ndim)
            )
            count = int(np.prod(shape, dtype=np.int64)) if ndim else 1
            raw = _read_exact(fh, 4 * count, f"data of '{name}'")
            tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(shape).astype(np.float32)
        if fh.read(1):
            raise CheckpointFormatError("trailing bytes after the last tensor")

    config = _config_from_metadata(metadata.get("config", {}))
    model = dcan.build(config, seed=0)
    for name, param in model.named_parameters().items():
        if name not in tensors:
            raise CheckpointFormatError(f"checkpoint is missing tensor '{name}'")
        stored = tensors[name]
        if stored.shape != param.shape:
            raise CheckpointFormatError(
                f"tensor '{name}' has shape {stored.shape}, expected {param.shape}"
            )
        param[...] = stored
    for required in ("stats.mean", "stats.std"):
        if required not in tensors:
            raise CheckpointFormatError(f"checkpoint is missing tensor '{required}'")
    stats = StandardizationStats(tensors["stats.mean"], tensors["stats.std"])
    return model, stats
