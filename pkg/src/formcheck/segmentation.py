"""Velocity-threshold state machine splitting a squat into five movement phases.

The driving signal is the mean of the left/right knee flexion angle, smoothed
with a centered moving average. Phase transitions fire when the signed
angular speed crosses an onset threshold and release when it falls below a
lower offset threshold (hysteresis); detected onsets are then walked back to
the offset-level crossing so boundaries land where motion actually starts.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import List, Tuple

import numpy as np

from .errors import ConfigError, InvalidInputError, NotFoundError, SegmentationError
from .motion import Trajectory, euler_from_quats


class SegmentLabel(str, Enum):
    PREPARATION = "preparation"
    GOING_DOWN = "going_down"
    IS_DOWN = "is_down"
    GOING_UP = "going_up"
    WRAP_UP = "wrap_up"


CANONICAL_ORDER: Tuple[SegmentLabel, ...] = (
    SegmentLabel.PREPARATION,
    SegmentLabel.GOING_DOWN,
    SegmentLabel.IS_DOWN,
    SegmentLabel.GOING_UP,
    SegmentLabel.WRAP_UP,
)


@dataclass(frozen=True)
class SegmentConfig:
    onset_speed: float = 15.0  # deg/s, |speed| above this starts a moving phase
    offset_speed: float = 5.0  # deg/s, |speed| below this ends a moving phase
    min_duration: int = 12  # frames, minimum length of any segment
    smooth_window: int = 11  # frames, centered moving average

    def __post_init__(self):
        if self.offset_speed >= self.onset_speed:
            raise ConfigError("offset_speed must be below onset_speed (hysteresis)")
        if self.min_duration < 1 or self.smooth_window < 1 or self.smooth_window % 2 == 0:
            raise ConfigError("min_duration >= 1 and odd smooth_window >= 1 required")

    def to_dict(self) -> dict:
        return {
            "onset_speed": self.onset_speed,
            "offset_speed": self.offset_speed,
            "min_duration": self.min_duration,
            "smooth_window": self.smooth_window,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SegmentConfig":
        unknown = set(d) - {"onset_speed", "offset_speed", "min_duration", "smooth_window"}
        if unknown:
            raise ConfigError(f"unknown segmentation keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class Boundary:
    label: SegmentLabel
    start: int  # first frame, inclusive
    end: int  # last frame, inclusive


@dataclass(frozen=True)
class Segmentation:
    boundaries: Tuple[Boundary, ...]

    def __post_init__(self):
        bs = tuple(self.boundaries)
        if not bs:
            raise InvalidInputError("a segmentation needs at least one boundary")
        labels = [b.label for b in bs]
        if labels != [l for l in CANONICAL_ORDER if l in labels]:
            raise InvalidInputError("segments must appear in canonical order")
        if bs[0].start != 0:
            raise InvalidInputError("segments must start at frame 0")
        for prev, nxt in zip(bs, bs[1:]):
            if nxt.start != prev.end + 1:
                raise InvalidInputError("segments must be contiguous and non-overlapping")
        for b in bs:
            if b.end < b.start:
                raise InvalidInputError(f"empty segment {b.label.value}")
        object.__setattr__(self, "boundaries", bs)

    @property
    def labels(self) -> Tuple[SegmentLabel, ...]:
        return tuple(b.label for b in self.boundaries)

    @property
    def n_frames(self) -> int:
        return self.boundaries[-1].end + 1

    def bounds(self, label: SegmentLabel) -> Boundary:
        for b in self.boundaries:
            if b.label == label:
                return b
        raise NotFoundError(f"segment {label.value} not present")


def knee_bend_angle(t: Trajectory) -> np.ndarray:
    """Mean left/right knee flexion per frame, positive when bending.

    Under the default rig the shin flexion channel goes negative as the knee
    bends, so the raw channel is negated here.
    """
    sk = t.skeleton
    knees = [sk.index_of("left_shin"), sk.index_of("right_shin")]
    euler = euler_from_quats(t.rotations[:, knees, :])
    return -euler[:, :, 0].mean(axis=1)


def _smooth(x: np.ndarray, window: int) -> np.ndarray:
    if window <= 1 or x.size < window:
        return x
    kernel = np.full(window, 1.0 / window)
    pad = window // 2
    padded = np.concatenate([np.full(pad, x[0]), x, np.full(pad, x[-1])])
    return np.convolve(padded, kernel, mode="valid")


def segment(t: Trajectory, cfg: SegmentConfig = SegmentConfig()) -> Segmentation:
    """Split a squat into the five canonical movement segments.

    Raises SegmentationError (naming the last reached state) if the motion
    never goes through the canonical descend/hold/ascend order.
    """
    if t.n_frames < 5 * cfg.min_duration:
        raise InvalidInputError(
            f"trajectory too short to segment: {t.n_frames} < {5 * cfg.min_duration} frames"
        )
    angle = _smooth(knee_bend_angle(t), cfg.smooth_window)
    speed = np.degrees(np.gradient(angle)) * t.sample_rate  # deg/s, signed
    onset, offset = cfg.onset_speed, cfg.offset_speed
    n = t.n_frames

    def walk_back(i: int, floor: int) -> int:
        # Move an onset back to where |speed| last sat below the offset level.
        j = i
        while j > floor and abs(speed[j - 1]) > offset:
            j -= 1
        return j

    state = SegmentLabel.PREPARATION
    state_start = 0
    cuts: List[int] = []  # start frames of going_down, is_down, going_up, wrap_up
    for i in range(n):
        dwell = i - state_start
        if state is SegmentLabel.PREPARATION:
            if speed[i] < -onset:
                raise SegmentationError(
                    "knee extension onset before any descent", state.value
                )
            if speed[i] > onset:
                cut = max(walk_back(i, state_start), cfg.min_duration)
                cuts.append(cut)
                state, state_start = SegmentLabel.GOING_DOWN, cut
        elif state is SegmentLabel.GOING_DOWN:
            if dwell >= cfg.min_duration and abs(speed[i]) < offset:
                cuts.append(i)
                state, state_start = SegmentLabel.IS_DOWN, i
        elif state is SegmentLabel.IS_DOWN:
            if dwell >= cfg.min_duration and speed[i] < -onset:
                cut = max(walk_back(i, state_start), state_start + cfg.min_duration)
                cuts.append(cut)
                state, state_start = SegmentLabel.GOING_UP, cut
        elif state is SegmentLabel.GOING_UP:
            if dwell >= cfg.min_duration and abs(speed[i]) < offset:
                cuts.append(i)
                state, state_start = SegmentLabel.WRAP_UP, i
    if state is not SegmentLabel.WRAP_UP:
        raise SegmentationError("movement did not complete the five phases", state.value)
    if n - cuts[-1] < cfg.min_duration:
        raise SegmentationError("wrap-up shorter than min_duration", state.value)
    edges = [0] + cuts + [n]
    return Segmentation(
        tuple(
            Boundary(label, edges[k], edges[k + 1] - 1)
            for k, label in enumerate(CANONICAL_ORDER)
        )
    )


def extract_segment(t: Trajectory, s: Segmentation, label: SegmentLabel) -> Trajectory:
    """Sub-trajectory covering one movement segment; metadata preserved."""
    b = s.bounds(label)
    if b.end >= t.n_frames:
        raise InvalidInputError("segmentation does not fit the trajectory")
    return t.slice(b.start, b.end + 1)
