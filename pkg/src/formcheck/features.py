"""Flat feature vectors from reference-warped trajectories, plus standardization.

Ordering is frame-major, joint-minor, channel-innermost, so the flat index of
(frame f, joint j, channel c) is ``(f * k + j) * n_channels + c``. The index
map is exposed both ways for tracing selected features back to the skeleton.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import List, Sequence, Tuple

import numpy as np

from .errors import InvalidInputError, StructureError
from .motion import Trajectory, euler_from_quats

STD_EPS = 1e-12


class FeatureSet(str, Enum):
    EULER = "euler"
    POSITIONS = "positions"
    EULER_POSITIONS = "euler+positions"
    QUATERNIONS = "quaternions"


_CHANNELS = {
    FeatureSet.EULER: ("flexion", "abduction", "twist"),
    FeatureSet.POSITIONS: ("pos_x", "pos_y", "pos_z"),
    FeatureSet.EULER_POSITIONS: ("flexion", "abduction", "twist", "pos_x", "pos_y", "pos_z"),
    FeatureSet.QUATERNIONS: ("quat_w", "quat_x", "quat_y", "quat_z"),
}


@dataclass(frozen=True)
class FeatureLayout:
    """Shape of a feature vector: which (frame, joint, channel) each entry is."""

    n_frames: int
    n_joints: int
    feature_set: FeatureSet

    @property
    def channel_names(self) -> Tuple[str, ...]:
        return _CHANNELS[self.feature_set]

    @property
    def n_channels(self) -> int:
        return len(self.channel_names)

    @property
    def size(self) -> int:
        return self.n_frames * self.n_joints * self.n_channels

    def to_flat(self, frame: int, joint: int, channel: int) -> int:
        if not (0 <= frame < self.n_frames and 0 <= joint < self.n_joints
                and 0 <= channel < self.n_channels):
            raise InvalidInputError(f"({frame}, {joint}, {channel}) outside layout")
        return (frame * self.n_joints + joint) * self.n_channels + channel

    def from_flat(self, index: int) -> Tuple[int, int, int]:
        if not 0 <= index < self.size:
            raise InvalidInputError(f"flat index {index} outside layout of size {self.size}")
        index, channel = divmod(index, self.n_channels)
        frame, joint = divmod(index, self.n_joints)
        return frame, joint, channel

    def frame_of(self, indices) -> np.ndarray:
        """Frame index per flat feature index (vectorized)."""
        return np.asarray(indices) // (self.n_joints * self.n_channels)


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    layout: FeatureLayout

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size != self.layout.size:
            raise StructureError(f"expected {self.layout.size} values, got shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def index_map(self) -> np.ndarray:
        """(size, 3) array of (frame, joint, channel) per entry."""
        idx = np.arange(self.layout.size)
        rest, channel = np.divmod(idx, self.layout.n_channels)
        frame, joint = np.divmod(rest, self.layout.n_joints)
        return np.stack([frame, joint, channel], axis=1)


def extract(warped: Trajectory, feature_set: FeatureSet = FeatureSet.EULER_POSITIONS) -> FeatureVector:
    """Flatten a warped trajectory into a feature vector."""
    layout = FeatureLayout(warped.n_frames, warped.n_joints, feature_set)
    if feature_set is FeatureSet.EULER:
        block = euler_from_quats(warped.rotations)
    elif feature_set is FeatureSet.POSITIONS:
        block = warped.positions
    elif feature_set is FeatureSet.EULER_POSITIONS:
        block = np.concatenate([euler_from_quats(warped.rotations), warped.positions], axis=2)
    elif feature_set is FeatureSet.QUATERNIONS:
        block = warped.rotations
    else:  # pragma: no cover - enum is exhaustive
        raise InvalidInputError(f"unknown feature set {feature_set}")
    return FeatureVector(block.reshape(-1), layout)


def extract_matrix(warped: Sequence[Trajectory], feature_set: FeatureSet) -> Tuple[np.ndarray, FeatureLayout]:
    """Stack extracted vectors of equally shaped trajectories into (n, d)."""
    vectors = [extract(t, feature_set) for t in warped]
    layout = vectors[0].layout
    for v in vectors[1:]:
        if v.layout != layout:
            raise StructureError("trajectories disagree in length or joint count")
    return np.stack([v.values for v in vectors]), layout


@dataclass(frozen=True)
class Scaler:
    """Per-feature mean/std (population); near-constant features map to 0."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mean, dtype=float)
        s = np.asarray(self.std, dtype=float)
        if m.shape != s.shape or m.ndim != 1:
            raise StructureError("mean and std must be equal-length 1-D arrays")
        m.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "mean", m)
        object.__setattr__(self, "std", s)

    @property
    def n_features(self) -> int:
        return self.mean.size

    def transform(self, values: np.ndarray) -> np.ndarray:
        v = np.asarray(values, dtype=float)
        if v.shape[-1] != self.n_features:
            raise StructureError(f"expected {self.n_features} features, got {v.shape[-1]}")
        live = self.std >= STD_EPS
        out = np.zeros_like(v)
        np.divide(v - self.mean, self.std, out=out, where=live)
        return np.where(live, out, 0.0)

    def inverse_transform(self, values: np.ndarray) -> np.ndarray:
        v = np.asarray(values, dtype=float)
        if v.shape[-1] != self.n_features:
            raise StructureError(f"expected {self.n_features} features, got {v.shape[-1]}")
        return np.where(self.std >= STD_EPS, v * self.std + self.mean, self.mean)

    def subset(self, indices) -> "Scaler":
        """Scaler restricted to the given feature indices (for masked inputs)."""
        idx = np.asarray(indices, dtype=np.int64)
        return Scaler(self.mean[idx], self.std[idx])


def _as_matrix(vectors) -> np.ndarray:
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        return vectors
    rows: List[np.ndarray] = []
    width = None
    for v in vectors:
        row = v.values if isinstance(v, FeatureVector) else np.asarray(v, dtype=float)
        if width is None:
            width = row.size
        elif row.size != width:
            raise StructureError(f"feature vectors of unequal length: {row.size} vs {width}")
        rows.append(row)
    return np.stack(rows)


def fit_scaler(vectors) -> Scaler:
    """Fit per-feature mean/std on training vectors only (population std)."""
    X = _as_matrix(vectors)
    if X.shape[0] < 2:
        raise InvalidInputError("need at least 2 vectors to fit a scaler")
    return Scaler(X.mean(axis=0), X.std(axis=0))


def apply_scaler(scaler: Scaler, vector: FeatureVector) -> FeatureVector:
    return FeatureVector(scaler.transform(vector.values), vector.layout)
