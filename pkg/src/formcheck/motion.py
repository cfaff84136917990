"""Skeleton trajectory model, quaternion math, and Euler conversions.

Conventions used throughout the package:

* Quaternions are stored as ``[w, x, y, z]`` arrays and are unit-norm after
  construction. ``q`` and ``-q`` describe the same rotation.
* Joint rotations are relative to the parent joint; the root (hips) rotation
  is relative to its pose at the start of the movement.
* Positions are metric: y is absolute height, x/z are relative to the root
  position at the start of the movement (start orientation removed).
* Euler decomposition is intrinsic Z-X-Y, with channels mapped to
  (flexion/extension, abduction/adduction, twist). Within ``GIMBAL_EPS`` of
  the singular pitch the twist channel is set to 0 and the remaining rotation
  is folded into the flexion channel, so the decomposition stays
  deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import InvalidInputError, StructureError

# Construction rejects quaternions whose norm is further than this from 1.
NORM_TOL = 1e-3
# Angular distance (radians) to the singular pitch below which the Euler
# decomposition switches to the gimbal-lock branch.
GIMBAL_EPS = 1e-4

IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])


class EulerTriple(NamedTuple):
    """Joint angles in radians, each wrapped to (-pi, pi]."""

    flexion_extension: float
    abduction_adduction: float
    twist: float


@dataclass(frozen=True)
class Joint:
    """One joint of the skeleton tree; ``parent`` is None only for the root."""

    index: int
    name: str
    parent: Optional[int]


@dataclass(frozen=True)
class Skeleton:
    joints: tuple[Joint, ...]

    def __post_init__(self):
        if not self.joints or self.joints[0].parent is not None:
            raise StructureError("joint 0 must be the parentless root")
        for i, j in enumerate(self.joints):
            if j.index != i:
                raise StructureError(f"joint {j.name} has index {j.index}, expected {i}")
            if j.parent is not None and not 0 <= j.parent < i:
                raise StructureError(f"joint {j.name} references parent {j.parent} out of order")

    @property
    def n_joints(self) -> int:
        return len(self.joints)

    def index_of(self, name: str) -> int:
        for j in self.joints:
            if j.name == name:
                return j.index
        raise KeyError(name)


_DEFAULT_JOINTS = [
    ("hips", None),
    ("spine", "hips"),
    ("chest", "spine"),
    ("neck", "chest"),
    ("head", "neck"),
    ("left_shoulder", "chest"),
    ("left_upper_arm", "left_shoulder"),
    ("left_forearm", "left_upper_arm"),
    ("left_hand", "left_forearm"),
    ("right_shoulder", "chest"),
    ("right_upper_arm", "right_shoulder"),
    ("right_forearm", "right_upper_arm"),
    ("right_hand", "right_forearm"),
    ("left_thigh", "hips"),
    ("left_shin", "left_thigh"),
    ("left_foot", "left_shin"),
    ("right_thigh", "hips"),
    ("right_shin", "right_thigh"),
    ("right_foot", "right_shin"),
]


def default_skeleton() -> Skeleton:
    """The 19-joint full-body rig used by the synthetic generator."""
    names = [n for n, _ in _DEFAULT_JOINTS]
    joints = tuple(
        Joint(i, name, None if parent is None else names.index(parent))
        for i, (name, parent) in enumerate(_DEFAULT_JOINTS)
    )
    return Skeleton(joints)


def _as_quat_array(q, name="quaternion"):
    arr = np.asarray(q, dtype=float)
    if arr.shape[-1] != 4:
        raise StructureError(f"{name} must have 4 components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite components")
    return arr


def normalize_quats(q, tol: float = NORM_TOL):
    """Re-normalize quaternion array(s); reject norms off by more than tol."""
    arr = _as_quat_array(q)
    norms = np.linalg.norm(arr, axis=-1)
    dev = np.abs(norms - 1.0)
    if np.any(dev > tol):
        worst = float(dev.max())
        raise InvalidInputError(f"quaternion norm deviates from 1 by {worst:.2e} (> {tol:g})")
    if np.all(dev <= 1e-12):
        # Already unit within float noise; keep bits identical so that
        # re-wrapping normalized data is exact.
        return arr
    return arr / norms[..., None]


def quat_distance(a, b) -> float:
    """Rotation distance 1 - |<a, b>|, in [0, 1] and blind to the q/-q sign."""
    qa = _as_quat_array(a, "a")
    qb = _as_quat_array(b, "b")
    if qa.shape != (4,) or qb.shape != (4,):
        raise StructureError("quat_distance expects single quaternions")
    return float(1.0 - abs(float(np.dot(qa, qb))))


def quat_multiply(a, b):
    """Hamilton product a*b for [w, x, y, z] arrays (broadcasts)."""
    aw, ax, ay, az = np.moveaxis(np.asarray(a, dtype=float), -1, 0)
    bw, bx, by, bz = np.moveaxis(np.asarray(b, dtype=float), -1, 0)
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def quat_conjugate(q):
    arr = np.asarray(q, dtype=float).copy()
    arr[..., 1:] *= -1.0
    return arr


def quat_from_axis_angle(axis, angle):
    """Unit quaternion rotating ``angle`` radians about ``axis`` (broadcasts over angle)."""
    ax = np.asarray(axis, dtype=float)
    ax = ax / np.linalg.norm(ax)
    ang = np.asarray(angle, dtype=float)
    half = 0.5 * ang
    s = np.sin(half)
    return np.stack(
        [np.cos(half), ax[0] * s, ax[1] * s, ax[2] * s],
        axis=-1,
    )


def rotate_vectors(q, v):
    """Apply rotation q to 3-vectors v (broadcasts over leading dims)."""
    qa = np.asarray(q, dtype=float)
    va = np.asarray(v, dtype=float)
    w = qa[..., 0]
    u = qa[..., 1:]
    # v' = v + 2 w (u x v) + 2 u x (u x v)
    uv = np.cross(u, va)
    return va + 2.0 * (w[..., None] * uv + np.cross(u, uv))


def _wrap_angle(a):
    """Wrap to (-pi, pi]."""
    out = np.mod(np.asarray(a, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    return np.where(out <= -np.pi, out + 2.0 * np.pi, out)


def euler_from_quats(q):
    """Vectorized intrinsic Z-X-Y decomposition of unit quats (..., 4) -> (..., 3)."""
    arr = np.asarray(q, dtype=float)
    w, x, y, z = arr[..., 0], arr[..., 1], arr[..., 2], arr[..., 3]
    r12 = 2.0 * (x * y - w * z)
    r22 = 1.0 - 2.0 * (x * x + z * z)
    r31 = 2.0 * (x * z - w * y)
    r33 = 1.0 - 2.0 * (x * x + y * y)
    r32 = np.clip(2.0 * (y * z + w * x), -1.0, 1.0)
    r13 = 2.0 * (x * z + w * y)
    r11 = 1.0 - 2.0 * (y * y + z * z)

    abduction = np.arcsin(r32)
    flexion = np.arctan2(-r12, r22)
    twist = np.arctan2(-r31, r33)

    locked = np.abs(r32) >= np.cos(GIMBAL_EPS)
    if np.any(locked):
        # Fold the free rotation into flexion, zero the twist.
        folded = np.arctan2(np.sign(r32) * r13, r11)
        flexion = np.where(locked, folded, flexion)
        twist = np.where(locked, 0.0, twist)
    return np.stack(
        [_wrap_angle(flexion), abduction, _wrap_angle(twist)], axis=-1
    )


def quats_from_euler(euler):
    """Inverse of euler_from_quats: (..., 3) angles -> (..., 4) unit quats."""
    ang = np.asarray(euler, dtype=float)
    hf = 0.5 * ang[..., 0]
    ha = 0.5 * ang[..., 1]
    ht = 0.5 * ang[..., 2]
    zero = np.zeros_like(hf)
    qz = np.stack([np.cos(hf), zero, zero, np.sin(hf)], axis=-1)
    qx = np.stack([np.cos(ha), np.sin(ha), zero, zero], axis=-1)
    qy = np.stack([np.cos(ht), zero, np.sin(ht), zero], axis=-1)
    return quat_multiply(quat_multiply(qz, qx), qy)


def to_euler(q) -> EulerTriple:
    """Decompose one unit quaternion into the package's Euler channels."""
    arr = normalize_quats(q)
    if arr.shape != (4,):
        raise StructureError("to_euler expects a single quaternion")
    f, a, t = euler_from_quats(arr)
    return EulerTriple(float(f), float(a), float(t))


def from_euler(triple) -> np.ndarray:
    """Compose a unit quaternion from (flexion, abduction, twist) radians."""
    return quats_from_euler(np.asarray(triple, dtype=float))


@dataclass(frozen=True)
class Frame:
    """One skeleton pose: per-joint rotations (k, 4) and positions (k, 3)."""

    rotations: np.ndarray
    positions: np.ndarray

    def __post_init__(self):
        rot = normalize_quats(self.rotations)
        pos = np.asarray(self.positions, dtype=float)
        if rot.ndim != 2:
            raise StructureError(f"rotations must be (k, 4), got {rot.shape}")
        if pos.shape != (rot.shape[0], 3):
            raise StructureError(
                f"positions shape {pos.shape} does not match {rot.shape[0]} joints"
            )
        if not np.all(np.isfinite(pos)):
            raise InvalidInputError("positions contain non-finite values")
        rot.setflags(write=False)
        pos.setflags(write=False)
        object.__setattr__(self, "rotations", rot)
        object.__setattr__(self, "positions", pos)

    @property
    def n_joints(self) -> int:
        return self.rotations.shape[0]


def frame_distance(a: Frame, b: Frame) -> float:
    """Sum of per-joint quaternion distances between two poses."""
    if a.n_joints != b.n_joints:
        raise StructureError(f"joint count mismatch: {a.n_joints} vs {b.n_joints}")
    dots = np.abs(np.einsum("kc,kc->k", a.rotations, b.rotations))
    return float(np.sum(1.0 - dots))


@dataclass(frozen=True)
class Trajectory:
    """A recorded movement: frame-stacked rotations (n, k, 4) and positions (n, k, 3).

    Immutable after construction; the arrays are read-only views, so a
    trajectory can be shared freely across threads.
    """

    rotations: np.ndarray
    positions: np.ndarray
    sample_rate: float
    subject_id: str
    sample_id: str
    skeleton: Skeleton = field(default_factory=default_skeleton, repr=False)

    def __post_init__(self):
        rot = normalize_quats(self.rotations)
        pos = np.asarray(self.positions, dtype=float)
        if rot.ndim != 3 or rot.shape[0] == 0:
            raise InvalidInputError(f"rotations must be non-empty (n, k, 4), got {rot.shape}")
        if pos.shape != (rot.shape[0], rot.shape[1], 3):
            raise StructureError(
                f"positions shape {pos.shape} does not match rotations {rot.shape}"
            )
        if not np.all(np.isfinite(pos)):
            raise InvalidInputError("positions contain non-finite values")
        if not self.sample_rate > 0:
            raise InvalidInputError(f"sample_rate must be positive, got {self.sample_rate}")
        if rot.shape[1] != self.skeleton.n_joints:
            raise StructureError(
                f"{rot.shape[1]} joints in data but skeleton has {self.skeleton.n_joints}"
            )
        rot = np.ascontiguousarray(rot)
        pos = np.ascontiguousarray(pos)
        rot.setflags(write=False)
        pos.setflags(write=False)
        object.__setattr__(self, "rotations", rot)
        object.__setattr__(self, "positions", pos)

    @property
    def n_frames(self) -> int:
        return self.rotations.shape[0]

    @property
    def n_joints(self) -> int:
        return self.rotations.shape[1]

    def frame(self, i: int) -> Frame:
        return Frame(self.rotations[i], self.positions[i])

    def frames(self):
        return [self.frame(i) for i in range(self.n_frames)]

    def slice(self, start: int, stop: int, sample_id: Optional[str] = None) -> "Trajectory":
        """Sub-trajectory of frames [start, stop); metadata preserved."""
        if not 0 <= start < stop <= self.n_frames:
            raise InvalidInputError(f"bad slice [{start}, {stop}) for {self.n_frames} frames")
        return Trajectory(
            self.rotations[start:stop],
            self.positions[start:stop],
            self.sample_rate,
            self.subject_id,
            sample_id if sample_id is not None else self.sample_id,
            self.skeleton,
        )

    def with_frames(self, rotations, positions, sample_id: Optional[str] = None) -> "Trajectory":
        return Trajectory(
            rotations,
            positions,
            self.sample_rate,
            self.subject_id,
            sample_id if sample_id is not None else self.sample_id,
            self.skeleton,
        )


def trajectory_from_frames(
    frames: Sequence[Frame],
    sample_rate: float,
    subject_id: str,
    sample_id: str,
    skeleton: Optional[Skeleton] = None,
) -> Trajectory:
    if not frames:
        raise InvalidInputError("cannot build a trajectory from zero frames")
    rot = np.stack([f.rotations for f in frames])
    pos = np.stack([f.positions for f in frames])
    return Trajectory(
        rot, pos, sample_rate, subject_id, sample_id, skeleton or default_skeleton()
    )
