"""Fleet orchestration: per-location predictors over frame streams.

A fleet is a list of predictors, each owning a trained checkpoint, a
score normalization, an alarm configuration, and a location label. Every
frame routed to a predictor produces exactly one StatusReport, appended
to a newline-delimited report log whose records round-trip losslessly
(floats are serialized with repr, which preserves the exact value).

Reconstruction error is computed in standardized space, matching how
the score normalization was calibrated.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import dcan
from .errors import ConfigurationError, ParseError, RoutingError
from .ingest import Frame, stack_frames
from .scoring import (
    AlarmConfig,
    AlarmLevel,
    HysteresisState,
    ScoreNormalization,
    calibrate,
    evaluate,
)
from .training import load_checkpoint, standardize

DEFAULT_LOCATIONS = (
    "motor-left",
    "motor-right",
    "gear-left",
    "gear-right",
    "cylinder-left",
    "cylinder-right",
)

# report lines are space-separated key:value pairs, so these tokens must
# stay free of spaces and colons
_TOKEN = re.compile(r"^[A-Za-z0-9_.\-/]+$")

REPORT_FIELDS = (
    "ts",
    "predictor",
    "location",
    "axis_mse",
    "total_mse",
    "score",
    "level",
    "alarm",
    "window_anomalous",
)


@dataclass(frozen=True)
class PredictorSpec:
    """One fault predictor: identity, model checkpoint, alarm settings."""

    id: str
    location: str
    checkpoint: str
    normalization: Optional[ScoreNormalization] = None
    alarm: AlarmConfig = field(default_factory=AlarmConfig)

    def __post_init__(self):
        for label, value in (("id", self.id), ("location", self.location)):
            if not _TOKEN.match(value or ""):
                raise ConfigurationError(
                    "predictor %s %r may not contain spaces or colons"
                    % (label, value)
                )
        if not self.checkpoint:
            raise ConfigurationError(
                "predictor %s needs a checkpoint path" % self.id
            )


@dataclass(frozen=True)
class FleetConfig:
    """A deployed set of predictors plus the shared report log path."""

    predictors: Tuple[PredictorSpec, ...]
    report_log: str = "reports.log"

    def __post_init__(self):
        predictors = tuple(self.predictors)
        if not predictors:
            raise ConfigurationError("a fleet needs at least one predictor")
        ids = [p.id for p in predictors]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ConfigurationError(
                "duplicate predictor ids: %s" % ", ".join(dupes)
            )
        object.__setattr__(self, "predictors", predictors)

    def predictor(self, predictor_id: str) -> PredictorSpec:
        for spec in self.predictors:
            if spec.id == predictor_id:
                return spec
        raise RoutingError("unknown predictor id %r" % predictor_id)


def default_fleet_config(
    checkpoint_dir: str = "checkpoints", report_log: str = "reports.log"
) -> FleetConfig:
    """The six-location mill deployment with conventional paths."""
    predictors = tuple(
        PredictorSpec(
            id=name,
            location=name,
            checkpoint="%s/%s.ckpt" % (checkpoint_dir, name),
        )
        for name in DEFAULT_LOCATIONS
    )
    return FleetConfig(predictors=predictors, report_log=report_log)


@dataclass(frozen=True)
class StatusReport:
    """One predictor's verdict on one frame."""

    timestamp: int
    predictor_id: str
    location: str
    per_axis_mse: Tuple[float, ...]
    total_mse: float
    score: float
    level: AlarmLevel
    alarm_fired: bool
    anomalous_in_window: int

    def __post_init__(self):
        object.__setattr__(
            self, "per_axis_mse", tuple(float(v) for v in self.per_axis_mse)
        )
        object.__setattr__(self, "level", AlarmLevel(self.level))
        if self.alarm_fired and self.level < AlarmLevel.LOW:
            raise ConfigurationError(
                "a fired alarm requires at least the low level"
            )


def format_report(report: StatusReport) -> str:
    """Serialize to one log line; parse_report inverts this losslessly."""
    values = (
        str(report.timestamp),
        report.predictor_id,
        report.location,
        ",".join(repr(v) for v in report.per_axis_mse),
        repr(report.total_mse),
        repr(report.score),
        report.level.name.lower(),
        "1" if report.alarm_fired else "0",
        str(report.anomalous_in_window),
    )
    return " ".join(
        "%s:%s" % (key, value) for key, value in zip(REPORT_FIELDS, values)
    )


def parse_report(line: str) -> StatusReport:
    """Parse one report-log line back into a StatusReport."""
    tokens = line.strip().split(" ")
    if len(tokens) != len(REPORT_FIELDS):
        raise ParseError(
            "report line has %d fields, expected %d: %r"
            % (len(tokens), len(REPORT_FIELDS), line)
        )
    values = {}
    for key, token in zip(REPORT_FIELDS, tokens):
        prefix = key + ":"
        if not token.startswith(prefix):
            raise ParseError(
                "expected field %r, got token %r" % (key, token)
            )
        values[key] = token[len(prefix):]
    try:
        level = AlarmLevel[values["level"].upper()]
    except KeyError:
        raise ParseError("unknown alarm level %r" % values["level"]) from None
    if values["alarm"] not in ("0", "1"):
        raise ParseError("alarm flag must be 0 or 1, got %r" % values["alarm"])
    try:
        return StatusReport(
            timestamp=int(values["ts"]),
            predictor_id=values["predictor"],
            location=values["location"],
            per_axis_mse=tuple(
                float(v) for v in values["axis_mse"].split(",")
            ),
            total_mse=float(values["total_mse"]),
            score=float(values["score"]),
            level=level,
            alarm_fired=values["alarm"] == "1",
            anomalous_in_window=int(values["window_anomalous"]),
        )
    except ValueError as exc:
        raise ParseError("bad report line %r: %s" % (line, exc)) from None


def write_report_log(reports: Sequence[StatusReport], path, append: bool = True):
    """Append reports to the log, one line each."""
    mode = "a" if append else "w"
    with open(path, mode, encoding="utf-8") as fh:
        for report in reports:
            fh.write(format_report(report) + "\n")


def read_report_log(path) -> List[StatusReport]:
    reports = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            reports.append(parse_report(line))
    return reports


def _normalization_to_dict(norm: Optional[ScoreNormalization]):
    if norm is None:
        return None
    return {"mu": norm.mu, "sigma": norm.sigma}


def _alarm_to_dict(alarm: AlarmConfig) -> dict:
    return {
        "level_thresholds": list(alarm.level_thresholds),
        "window_len": alarm.window_len,
        "trigger_fresh": alarm.trigger_fresh,
        "trigger_sensitized": alarm.trigger_sensitized,
    }


def fleet_config_to_dict(config: FleetConfig) -> dict:
    return {
        "report_log": config.report_log,
        "predictors": [
            {
                "id": spec.id,
                "location": spec.location,
                "checkpoint": spec.checkpoint,
                "normalization": _normalization_to_dict(spec.normalization),
                "alarm": _alarm_to_dict(spec.alarm),
            }
            for spec in config.predictors
        ],
    }


def fleet_config_from_dict(data: dict) -> FleetConfig:
    try:
        entries = data["predictors"]
        report_log = data.get("report_log", "reports.log")
        predictors = []
        for entry in entries:
            norm_data = entry.get("normalization")
            normalization = (
                None
                if norm_data is None
                else ScoreNormalization(
                    mu=float(norm_data["mu"]), sigma=float(norm_data["sigma"])
                )
            )
            alarm_data = entry.get("alarm")
            alarm = (
                AlarmConfig()
                if alarm_data is None
                else AlarmConfig(
                    level_thresholds=tuple(alarm_data["level_thresholds"]),
                    window_len=int(alarm_data["window_len"]),
                    trigger_fresh=int(alarm_data["trigger_fresh"]),
                    trigger_sensitized=int(alarm_data["trigger_sensitized"]),
                )
            )
            predictors.append(
                PredictorSpec(
                    id=entry["id"],
                    location=entry["location"],
                    checkpoint=entry["checkpoint"],
                    normalization=normalization,
                    alarm=alarm,
                )
            )
    except (KeyError, TypeError) as exc:
        raise ConfigurationError("malformed fleet config: %s" % exc) from exc
    return FleetConfig(predictors=tuple(predictors), report_log=report_log)


def save_fleet_config(config: FleetConfig, path):
    text = json.dumps(fleet_config_to_dict(config), indent=2, sort_keys=True)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_fleet_config(path) -> FleetConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            "fleet config %s is not valid JSON: %s" % (path, exc)
        ) from exc
    if not isinstance(data, dict):
        raise ConfigurationError(
            "fleet config %s must be a JSON object" % path
        )
    return fleet_config_from_dict(data)


def _reconstruction_reports(model, stats, frames: Sequence[Frame], chunk: int = 64):
    """Standardize, reconstruct, and report, chunked to bound memory."""
    batch = standardize(stack_frames(frames), stats)
    reports = []
    for start in range(0, batch.shape[0], chunk):
        part = batch[start:start + chunk]
        reports.extend(dcan.reconstruction_report(part, dcan.reconstruct(model, part)))
    return reports


def _ordered_stream(spec: PredictorSpec, frames: Sequence[Frame]) -> List[Frame]:
    ordered = sorted(frames, key=lambda f: (f.timestamp, f.window_index))
    for earlier, later in zip(ordered, ordered[1:]):
        if later.timestamp == earlier.timestamp:
            raise RoutingError(
                "predictor %s got two frames for timestamp %d; one report "
                "per sampling time" % (spec.id, earlier.timestamp)
            )
    return ordered


def evaluate_stream(
    spec: PredictorSpec, model, stats, frames: Sequence[Frame]
) -> List[StatusReport]:
    """Run one predictor over its frames in timestamp order."""
    if spec.normalization is None:
        raise ConfigurationError(
            "predictor %s has no calibration; run calibrate first" % spec.id
        )
    ordered = _ordered_stream(spec, frames)
    axes = ordered[0].axes
    if model.config.axes != axes:
        raise ConfigurationError(
            "predictor %s: checkpoint expects %d axes but frames have %d"
            % (spec.id, model.config.axes, axes)
        )
    recon = _reconstruction_reports(model, stats, ordered)
    state = HysteresisState()
    reports = []
    for frame, rr in zip(ordered, recon):
        decision, state = evaluate(
            rr.total_mse, spec.normalization, spec.alarm, state
        )
        reports.append(
            StatusReport(
                timestamp=frame.timestamp,
                predictor_id=spec.id,
                location=spec.location,
                per_axis_mse=rr.per_axis_mse,
                total_mse=rr.total_mse,
                score=decision.score,
                level=decision.level,
                alarm_fired=decision.alarm_fired,
                anomalous_in_window=decision.anomalous_in_window,
            )
        )
    return reports


def run_fleet(
    fleet: FleetConfig,
    frame_streams: Dict[str, Sequence[Frame]],
    log_path=None,
) -> List[StatusReport]:
    """Route frame streams to their predictors and append the report log.

    Streams are keyed by predictor id; each predictor processes its
    frames in timestamp order, independently of the others. Reports are
    appended to log_path (default: the fleet's report_log) and returned
    in processing order: fleet order, then frame order.
    """
    unknown = sorted(set(frame_streams) - {p.id for p in fleet.predictors})
    if unknown:
        raise RoutingError(
            "no predictor for stream id(s): %s" % ", ".join(unknown)
        )
    all_reports: List[StatusReport] = []
    for spec in fleet.predictors:
        frames = frame_streams.get(spec.id, ())
        if not frames:
            continue
        model, stats = load_checkpoint(spec.checkpoint)
        all_reports.extend(evaluate_stream(spec, model, stats, frames))
    destination = fleet.report_log if log_path is None else log_path
    if destination:
        write_report_log(all_reports, destination, append=True)
    return all_reports


def calibrate_predictor(
    checkpoint_path, frames: Sequence[Frame]
) -> ScoreNormalization:
    """Fit score normalization from normal frames via a checkpoint."""
    model, stats = load_checkpoint(checkpoint_path)
    if len(frames) > 0 and frames[0].axes != model.config.axes:
        raise ConfigurationError(
            "checkpoint expects %d axes but frames have %d"
            % (model.config.axes, frames[0].axes)
        )
    reports = _reconstruction_reports(model, stats, frames)
    return calibrate([r.total_mse for r in reports])
