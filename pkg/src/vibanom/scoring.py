"""Anomaly scoring and alarm logic.

Reconstruction MSE values are normalized against a calibration set of
normal frames, classified into discrete alarm levels by fixed thresholds,
and smoothed by a windowed hysteresis rule that suppresses isolated
false positives: a fresh window needs more than 16 anomalous samples out
of 30 to fire, while a window that already contains a fired alarm stays
sensitized and refires at more than 12.

All types here are immutable; `hysteresis_step` returns a new state
rather than mutating its argument, so callers can snapshot and replay
alarm histories freely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Tuple

import numpy as np

from .errors import CalibrationError, ConfigurationError


class AlarmLevel(IntEnum):
    """Discrete alarm severity; comparisons follow severity order."""

    NONE = 0
    LOW = 1
    MEDIUM = 2
    HIGH = 3


@dataclass(frozen=True)
class ScoreNormalization:
    """Location/scale of the calibration MSE distribution."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma)):
            raise CalibrationError("normalization parameters must be finite")
        if self.sigma <= 0.0:
            raise CalibrationError(
                "sigma must be positive, got %r" % (self.sigma,)
            )


def calibrate(mse_values: Iterable[float]) -> ScoreNormalization:
    """Fit score normalization from calibration-set MSE values.

    Uses the population standard deviation (divide by N, not N-1).
    Requires at least two values that are not all identical, since a
    zero-spread calibration set cannot define a scale.
    """
    values = np.asarray(list(mse_values), dtype=np.float64)
    if values.ndim != 1:
        values = values.ravel()
    if values.size < 2:
        raise CalibrationError(
            "calibration needs at least 2 MSE values, got %d" % values.size
        )
    if not np.all(np.isfinite(values)):
        raise CalibrationError("calibration values must be finite")
    mu = float(np.mean(values))
    sigma = float(np.std(values))  # population std
    if sigma <= 0.0:
        raise CalibrationError(
            "calibration values are all equal; cannot derive a scale"
        )
    return ScoreNormalization(mu=mu, sigma=sigma)


def score(mse: float, normalization: ScoreNormalization) -> float:
    """Normalize an MSE value to z-score units."""
    return (float(mse) - normalization.mu) / normalization.sigma


@dataclass(frozen=True)
class AlarmConfig:
    """Thresholds and hysteresis parameters.

    level_thresholds are in score (z) units, strictly increasing
    (low, medium, high). A sample is anomalous when its score strictly
    exceeds the low threshold. window_len bounds the hysteresis window;
    trigger_fresh / trigger_sensitized are the anomalous-count triggers
    for windows without / with a previously fired alarm.
    """

    level_thresholds: Tuple[float, float, float] = (3.0, 5.0, 8.0)
    window_len: int = 30
    trigger_fresh: int = 16
    trigger_sensitized: int = 12

    def __post_init__(self):
        thresholds = tuple(float(t) for t in self.level_thresholds)
        if len(thresholds) != 3:
            raise ConfigurationError(
                "level_thresholds needs exactly 3 values, got %d"
                % len(thresholds)
            )
        if not all(math.isfinite(t) for t in thresholds):
            raise ConfigurationError("level_thresholds must be finite")
        if not (thresholds[0] < thresholds[1] < thresholds[2]):
            raise ConfigurationError(
                "level_thresholds must be strictly increasing, got %r"
                % (thresholds,)
            )
        object.__setattr__(self, "level_thresholds", thresholds)
        # must allow a fresh trigger to fit in the window, and the
        # sensitized trigger must genuinely lower the bar
        if self.trigger_sensitized < 1:
            raise ConfigurationError(
                "trigger_sensitized must be >= 1, got %d"
                % self.trigger_sensitized
            )
        if self.trigger_fresh <= self.trigger_sensitized:
            raise ConfigurationError(
                "trigger_fresh (%d) must exceed trigger_sensitized (%d)"
                % (self.trigger_fresh, self.trigger_sensitized)
            )
        if self.window_len < self.trigger_fresh:
            raise ConfigurationError(
                "window_len (%d) must be >= trigger_fresh (%d)"
                % (self.window_len, self.trigger_fresh)
            )


def classify(score_value: float, config: AlarmConfig) -> AlarmLevel:
    """Map a score to the highest alarm level it strictly exceeds."""
    low, medium, high = config.level_thresholds
    s = float(score_value)
    if s > high:
        return AlarmLevel.HIGH
    if s > medium:
        return AlarmLevel.MEDIUM
    if s > low:
        return AlarmLevel.LOW
    return AlarmLevel.NONE


@dataclass(frozen=True)
class WindowSlot:
    """One processed sample in the hysteresis window."""

    is_anomalous: bool
    alarm_fired: bool


@dataclass(frozen=True)
class HysteresisState:
    """Sliding window of recent samples, oldest first, newest last."""

    slots: Tuple[WindowSlot, ...] = ()

    @property
    def anomalous_count(self) -> int:
        return sum(1 for s in self.slots if s.is_anomalous)

    @property
    def any_fired(self) -> bool:
        return any(s.alarm_fired for s in self.slots)


def hysteresis_step(
    state: HysteresisState, is_anomalous: bool, config: AlarmConfig
) -> Tuple[HysteresisState, bool]:
    """Advance the alarm window by one sample.

    The oldest slot is evicted once the window holds window_len samples.
    The anomalous count includes the current sample; the sensitized path
    applies when any *previous* slot still in the window fired.
    """
    is_anomalous = bool(is_anomalous)
    previous = state.slots
    if len(previous) >= config.window_len:
        previous = previous[-(config.window_len - 1):] if config.window_len > 1 else ()
    count = sum(1 for s in previous if s.is_anomalous) + (1 if is_anomalous else 0)
    prior_fired = any(s.alarm_fired for s in previous)
    if prior_fired:
        fired = is_anomalous and count > config.trigger_sensitized
    else:
        fired = is_anomalous and count > config.trigger_fresh
    new_state = HysteresisState(
        slots=previous + (WindowSlot(is_anomalous=is_anomalous, alarm_fired=fired),)
    )
    return new_state, fired


@dataclass(frozen=True)
class AlarmDecision:
    """Outcome of evaluating one reconstruction MSE."""

    score: float
    level: AlarmLevel
    alarm_fired: bool
    anomalous_in_window: int

    def __post_init__(self):
        if self.alarm_fired and self.level < AlarmLevel.LOW:
            raise ConfigurationError(
                "alarm cannot fire on a sample below the low threshold"
            )
        if self.anomalous_in_window < 0:
            raise ConfigurationError("anomalous_in_window must be >= 0")


def evaluate(
    mse: float,
    normalization: ScoreNormalization,
    config: AlarmConfig,
    state: HysteresisState,
) -> Tuple[AlarmDecision, HysteresisState]:
    """Score one MSE, classify it, and advance the hysteresis window."""
    score_value = score(mse, normalization)
    level = classify(score_value, config)
    new_state, fired = hysteresis_step(state, level >= AlarmLevel.LOW, config)
    decision = AlarmDecision(
        score=score_value,
        level=level,
        alarm_fired=fired,
        anomalous_in_window=new_state.anomalous_count,
    )
    return decision, new_state
