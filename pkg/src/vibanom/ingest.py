"""Frame ingestion: NASA IMS bearing files, mill CSV, and binary frames.

Raw recordings become Frame objects: A axes x 4096 points of float32
acceleration plus a timestamp and a source label. IMS files are
whitespace-separated channel columns named by their capture time
(YYYY.MM.DD.HH.MM.SS, interpreted as UTC for determinism); each channel
column is cut into non-overlapping 4096-point windows. Window k of a
file gets timestamp file_ts + k: a synthetic one-second tiebreaker that
keeps per-channel sequences strictly chronological (files are 600 s
apart, so order is never disturbed).

The binary frame format "FRME" is the bit-exact interchange format:
  magic "FRME" | u32 version (1) | u8 axes | u32 frame_len |
  then per frame: u64 timestamp | axes*frame_len float32, axis-major.
All integers and floats are little-endian.
"""

from __future__ import annotations

import io
import os
import re
import struct
import warnings
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    ConfigurationError,
    DataWarning,
    DimensionError,
    FrameAssemblyError,
    IngestError,
    ParseError,
)
from .signals import MODEL_FRAME_LEN as FRAME_LEN

FRAME_MAGIC = b"FRME"
FRAME_FORMAT_VERSION = 1
DEFAULT_TRAIN_SIZE = 30000
MILL_CSV_HEADER = "timestamp,axis,index,value"
MILL_AXIS_NAMES = ("x", "y", "z")  # longitudinal, lateral, axial

# capture-time file names, e.g. 2004.02.12.10.32.39
_TIMESTAMP_NAME = re.compile(r"^\d{4}\.\d{2}\.\d{2}\.\d{2}\.\d{2}\.\d{2}$")


@dataclass(frozen=True, eq=False)
class Frame:
    """One sampling event: A axes x 4096 points, in g."""

    data: np.ndarray
    timestamp: int
    source: str = ""
    window_index: int = 0

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float32)
        if data.ndim != 2:
            raise DimensionError(
                "frame data must be 2-D (axes, points), got ndim %d" % data.ndim
            )
        if data.shape[0] < 1:
            raise DimensionError("frame needs at least one axis")
        if data.shape[1] != FRAME_LEN:
            raise DimensionError(
                "frame must have exactly %d points per axis, got %d"
                % (FRAME_LEN, data.shape[1])
            )
        if not np.all(np.isfinite(data)):
            raise IngestError("frame contains non-finite values")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "timestamp", int(self.timestamp))
        if self.window_index < 0:
            raise ConfigurationError("window_index must be >= 0")

    @property
    def axes(self) -> int:
        return int(self.data.shape[0])


def stack_frames(frames: Sequence[Frame]) -> np.ndarray:
    """Stack frames into the model input layout (B, 1, A, 4096)."""
    if len(frames) == 0:
        raise DimensionError("cannot stack an empty frame list")
    axes = frames[0].axes
    for k, frame in enumerate(frames):
        if frame.axes != axes:
            raise DimensionError(
                "frame %d has %d axes, expected %d" % (k, frame.axes, axes)
            )
    return np.stack([f.data for f in frames]).astype(np.float32)[:, None, :, :]


@dataclass(frozen=True, eq=False)
class ImsRecording:
    """One IMS capture file: rows x channels of acceleration values."""

    timestamp: int
    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise DimensionError("recording matrix must be 2-D")
        if matrix.shape[0] < 1 or matrix.shape[1] < 1:
            raise DimensionError(
                "recording matrix must be non-empty, got shape %r"
                % (matrix.shape,)
            )
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "timestamp", int(self.timestamp))

    @property
    def channel_count(self) -> int:
        return int(self.matrix.shape[1])

    def channel(self, number: int) -> np.ndarray:
        """1-based channel column, matching the dataset's Ch naming."""
        if not 1 <= number <= self.channel_count:
            raise DimensionError(
                "channel %d out of range 1..%d" % (number, self.channel_count)
            )
        return self.matrix[:, number - 1]


@dataclass(frozen=True)
class SplitSpec:
    """Train/test split by (set, channel); channels are 1-based."""

    test_channels: Tuple[Tuple[str, int], ...] = (
        ("Set1", 5),
        ("Set1", 7),
        ("Set2", 1),
    )
    train_size: int = DEFAULT_TRAIN_SIZE

    def __post_init__(self):
        if self.train_size < 1:
            raise ConfigurationError("train_size must be >= 1")
        for entry in self.test_channels:
            set_name, channel = entry
            if not re.match(r"^Set[1-9]\d*$", set_name) or channel < 1:
                raise ConfigurationError(
                    "bad test channel entry %r (expected ('SetK', n))"
                    % (entry,)
                )

    def is_test_channel(self, set_name: str, channel: int) -> bool:
        return (set_name, channel) in self.test_channels


def timestamp_from_filename(filename: str) -> int:
    """Parse a YYYY.MM.DD.HH.MM.SS capture name to UTC epoch seconds."""
    name = os.path.basename(filename)
    candidates = [name]
    stem, ext = os.path.splitext(name)
    if ext and stem not in candidates:
        candidates.append(stem)
    for candidate in candidates:
        try:
            moment = datetime.strptime(candidate, "%Y.%m.%d.%H.%M.%S")
        except ValueError:
            continue
        return int(moment.replace(tzinfo=timezone.utc).timestamp())
    raise ParseError(
        "%s: file name is not a YYYY.MM.DD.HH.MM.SS timestamp" % filename
    )


def _diagnose_table(text: str, filename: str):
    """Pinpoint the first ragged row or non-numeric token."""
    expected = None
    row = 0
    for line in text.splitlines():
        if not line.strip():
            continue
        row += 1
        tokens = line.split()
        for col, token in enumerate(tokens, start=1):
            try:
                float(token)
            except ValueError:
                raise ParseError(
                    "%s: row %d, column %d: non-numeric token %r"
                    % (filename, row, col, token)
                ) from None
        if expected is None:
            expected = len(tokens)
        elif len(tokens) != expected:
            raise ParseError(
                "%s: row %d has %d columns, expected %d"
                % (filename, row, len(tokens), expected)
            )


def parse_ims_file(text: str, filename: str) -> ImsRecording:
    """Parse one whitespace-separated IMS capture file."""
    timestamp = timestamp_from_filename(filename)
    if not text.strip():
        raise ParseError("%s: empty file" % filename)
    try:
        matrix = np.loadtxt(io.StringIO(text), dtype=np.float64, ndmin=2)
    except ValueError as exc:
        _diagnose_table(text, filename)
        raise ParseError("%s: %s" % (filename, exc)) from exc
    if not np.all(np.isfinite(matrix)):
        raise ParseError("%s: non-finite value in data" % filename)
    return ImsRecording(timestamp=timestamp, matrix=matrix)


def windowize(
    channel_series,
    frame_len: int = FRAME_LEN,
    hop: int = FRAME_LEN,
    *,
    source: str = "",
    timestamp: int = 0,
) -> List[Frame]:
    """Cut a 1-D series into consecutive windows of frame_len points.

    Window k starts at sample k*hop and is stamped timestamp + k; the
    trailing remainder shorter than frame_len is discarded. A series
    shorter than one frame yields an empty list with a DataWarning.
    """
    series = np.asarray(channel_series, dtype=np.float32)
    if series.ndim != 1:
        raise DimensionError("channel series must be 1-D")
    if frame_len < 1 or hop < 1:
        raise ConfigurationError("frame_len and hop must be >= 1")
    if series.size < frame_len:
        warnings.warn(
            "series of %d points is shorter than one %d-point frame; "
            "no frames produced" % (series.size, frame_len),
            DataWarning,
        )
        return []
    count = 1 + (series.size - frame_len) // hop
    frames = []
    for k in range(count):
        start = k * hop
        chunk = series[start:start + frame_len].reshape(1, frame_len).copy()
        frames.append(
            Frame(
                data=chunk,
                timestamp=int(timestamp) + k,
                source=source,
                window_index=k,
            )
        )
    return frames


_SET_ORDINALS = {1: "1st", 2: "2nd", 3: "3rd", 4: "4th"}


def _normalize_dir_name(name: str) -> str:
    return re.sub(r"[\s_\-.]+", "", name.lower())


def _set_name_candidates(set_number: int) -> Tuple[str, ...]:
    ordinal = _SET_ORDINALS.get(set_number, "%dth" % set_number)
    return (
        "%stest" % ordinal,
        "set%d" % set_number,
        "test%d" % set_number,
    )


def _data_files(directory: Path) -> List[Path]:
    files = [
        child
        for child in directory.iterdir()
        if child.is_file() and _TIMESTAMP_NAME.match(child.name)
    ]
    return sorted(files, key=lambda p: p.name)


def resolve_set_dir(root_dir, set_number: int) -> Path:
    """Locate the directory of one IMS test set under root_dir.

    Accepts the download's 1st_test/2nd_test/3rd_test naming as well as
    Set1/set_1/Test1 variants, case-insensitively, searching root_dir
    and one level below it (archives often nest a same-named folder).
    """
    root = Path(root_dir)
    if not root.is_dir():
        raise IngestError("dataset root %s is not a directory" % root)
    wanted = _set_name_candidates(set_number)

    def matches(path: Path) -> bool:
        return _normalize_dir_name(path.name) in wanted

    candidates = [child for child in sorted(root.iterdir()) if child.is_dir()]
    hits = [c for c in candidates if matches(c)]
    if not hits:
        for child in candidates:
            hits.extend(
                sub for sub in sorted(child.iterdir())
                if sub.is_dir() and matches(sub)
            )
    if not hits:
        found = ", ".join(c.name for c in candidates) or "(nothing)"
        raise IngestError(
            "could not find set %d under %s; found: %s"
            % (set_number, root, found)
        )
    chosen = hits[0]
    # descend through a nested same-named folder (zip-in-zip layout)
    while not _data_files(chosen):
        inner = [c for c in sorted(chosen.iterdir()) if c.is_dir()]
        named = [c for c in inner if matches(c)]
        if named:
            chosen = named[0]
            continue
        if len(inner) == 1:
            chosen = inner[0]
            continue
        raise IngestError(
            "%s contains no timestamp-named data files" % chosen
        )
    return chosen


class _Reservoir:
    """Algorithm R: uniform sample of fixed size from a stream."""

    def __init__(self, size: int, rng: np.random.Generator):
        self.size = size
        self.rng = rng
        self.items: List[Frame] = []
        self.seen = 0

    def offer(self, item: Frame):
        self.seen += 1
        if len(self.items) < self.size:
            self.items.append(item)
        else:
            j = int(self.rng.integers(0, self.seen))
            if j < self.size:
                self.items[j] = item


def build_nasa_splits(
    root_dir,
    spec: Optional[SplitSpec] = None,
    seed: int = 0,
) -> Tuple[List[Frame], Dict[str, List[Frame]]]:
    """Split the IMS dataset into train frames and test sequences.

    Test channels keep their full chronological frame sequences; every
    other channel feeds a seeded reservoir subsample of spec.train_size
    frames. Returns (train_frames, {"SetK/ChN": frames}).
    """
    if spec is None:
        spec = SplitSpec()
    rng = np.random.default_rng(seed)
    reservoir = _Reservoir(spec.train_size, rng)
    test_sequences: Dict[str, List[Frame]] = {
        "%s/Ch%d" % (set_name, channel): []
        for set_name, channel in spec.test_channels
    }
    set_numbers = sorted({int(s[3:]) for s, _ in spec.test_channels} | {1, 2, 3})
    for set_number in set_numbers:
        set_name = "Set%d" % set_number
        set_dir = resolve_set_dir(root_dir, set_number)
        for path in _data_files(set_dir):
            recording = parse_ims_file(path.read_text(), path.name)
            for channel in range(1, recording.channel_count + 1):
                label = "%s/Ch%d" % (set_name, channel)
                frames = windowize(
                    recording.channel(channel),
                    source=label,
                    timestamp=recording.timestamp,
                )
                if spec.is_test_channel(set_name, channel):
                    test_sequences[label].extend(frames)
                else:
                    for frame in frames:
                        reservoir.offer(frame)
    if reservoir.seen < spec.train_size:
        warnings.warn(
            "requested %d training frames but only %d are available"
            % (spec.train_size, reservoir.seen),
            DataWarning,
        )
    for label, frames in test_sequences.items():
        stamps = [f.timestamp for f in frames]
        if any(b <= a for a, b in zip(stamps, stamps[1:])):
            raise IngestError(
                "test sequence %s is not strictly chronological" % label
            )
    return reservoir.items, test_sequences


def write_frames(path, frames: Sequence[Frame]):
    """Write frames to the FRME binary format (bit-exact)."""
    frames = list(frames)
    if not frames:
        raise DimensionError("refusing to write an empty frame file")
    axes = frames[0].axes
    for k, frame in enumerate(frames):
        if frame.axes != axes:
            raise DimensionError(
                "frame %d has %d axes, expected %d" % (k, frame.axes, axes)
            )
        if frame.timestamp < 0:
            raise ConfigurationError(
                "frame %d has negative timestamp %d" % (k, frame.timestamp)
            )
    with open(path, "wb") as fh:
        fh.write(FRAME_MAGIC)
        fh.write(struct.pack("<I", FRAME_FORMAT_VERSION))
        fh.write(struct.pack("<B", axes))
        fh.write(struct.pack("<I", FRAME_LEN))
        for frame in frames:
            fh.write(struct.pack("<Q", frame.timestamp))
            fh.write(np.ascontiguousarray(frame.data, dtype="<f4").tobytes())


def read_frames(path, *, source: str = "") -> List[Frame]:
    """Read a FRME binary file; values round-trip bit-identically."""
    blob = Path(path).read_bytes()
    header_len = 4 + 4 + 1 + 4
    if len(blob) < header_len:
        raise ParseError("%s: truncated header" % path)
    if blob[:4] != FRAME_MAGIC:
        raise ParseError("%s: not a FRME frame file" % path)
    (version,) = struct.unpack_from("<I", blob, 4)
    if version != FRAME_FORMAT_VERSION:
        raise ParseError(
            "%s: unsupported frame format version %d" % (path, version)
        )
    (axes,) = struct.unpack_from("<B", blob, 8)
    (frame_len,) = struct.unpack_from("<I", blob, 9)
    if axes < 1:
        raise ParseError("%s: axis count must be >= 1" % path)
    if frame_len != FRAME_LEN:
        raise ParseError(
            "%s: frame length %d unsupported, expected %d"
            % (path, frame_len, FRAME_LEN)
        )
    record_len = 8 + axes * frame_len * 4
    body = blob[header_len:]
    if len(body) % record_len != 0:
        raise ParseError(
            "%s: truncated frame record (%d stray bytes)"
            % (path, len(body) % record_len)
        )
    frames = []
    for k in range(len(body) // record_len):
        offset = k * record_len
        (timestamp,) = struct.unpack_from("<Q", body, offset)
        data = np.frombuffer(
            body, dtype="<f4", count=axes * frame_len, offset=offset + 8
        ).reshape(axes, frame_len).copy()
        frames.append(
            Frame(data=data, timestamp=timestamp, source=source, window_index=k)
        )
    return frames


def write_mill_csv(frames: Sequence[Frame]) -> str:
    """Serialize 3-axis frames as timestamp,axis,index,value rows."""
    lines = [MILL_CSV_HEADER]
    for frame in frames:
        if frame.axes != len(MILL_AXIS_NAMES):
            raise DimensionError(
                "mill CSV needs %d-axis frames, got %d"
                % (len(MILL_AXIS_NAMES), frame.axes)
            )
        for axis_index, axis_name in enumerate(MILL_AXIS_NAMES):
            for i in range(FRAME_LEN):
                lines.append(
                    "%d,%s,%d,%s"
                    % (
                        frame.timestamp,
                        axis_name,
                        i,
                        repr(float(frame.data[axis_index, i])),
                    )
                )
    return "\n".join(lines) + "\n"


def parse_mill_frames(csv_text: str, *, source: str = "mill") -> List[Frame]:
    """Assemble 3-axis frames from timestamp,axis,index,value rows."""
    pending: Dict[int, Dict[str, np.ndarray]] = {}
    lines = csv_text.splitlines()
    start = 1 if lines and lines[0].strip() == MILL_CSV_HEADER else 0
    for lineno in range(start, len(lines)):
        line = lines[lineno].strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise ParseError(
                "line %d: expected 4 fields, got %d" % (lineno + 1, len(parts))
            )
        try:
            timestamp = int(parts[0])
            index = int(parts[2])
            value = float(parts[3])
        except ValueError:
            raise ParseError(
                "line %d: non-numeric field in %r" % (lineno + 1, line)
            ) from None
        axis = parts[1].strip().lower()
        if axis not in MILL_AXIS_NAMES:
            raise ParseError(
                "line %d: unknown axis %r (expected x, y, or z)"
                % (lineno + 1, parts[1])
            )
        if not 0 <= index < FRAME_LEN:
            raise ParseError(
                "line %d: index %d out of range 0..%d"
                % (lineno + 1, index, FRAME_LEN - 1)
            )
        if not np.isfinite(value):
            raise ParseError("line %d: non-finite value" % (lineno + 1,))
        frame_axes = pending.setdefault(timestamp, {})
        if axis not in frame_axes:
            frame_axes[axis] = np.full(FRAME_LEN, np.nan, dtype=np.float64)
        if not np.isnan(frame_axes[axis][index]):
            raise ParseError(
                "line %d: duplicate point (timestamp %d, axis %s, index %d)"
                % (lineno + 1, timestamp, axis, index)
            )
        frame_axes[axis][index] = value
    frames = []
    for timestamp in sorted(pending):
        frame_axes = pending[timestamp]
        rows = []
        for axis_name in MILL_AXIS_NAMES:
            if axis_name not in frame_axes:
                raise FrameAssemblyError(
                    "frame at timestamp %d is missing axis %s"
                    % (timestamp, axis_name)
                )
            column = frame_axes[axis_name]
            filled = int(np.count_nonzero(~np.isnan(column)))
            if filled != FRAME_LEN:
                raise FrameAssemblyError(
                    "frame at timestamp %d: axis %s has %d of %d points"
                    % (timestamp, axis_name, filled, FRAME_LEN)
                )
            rows.append(column)
        frames.append(
            Frame(
                data=np.stack(rows).astype(np.float32),
                timestamp=timestamp,
                source=source,
            )
        )
    return frames
