"""Deterministic synthetic squat generator with parameterized error injection.

Squats are synthesized channel-first: per-joint Euler profiles (plus a root
pose) are built from smooth eased keypose transitions, converted to
quaternions, and pushed through forward kinematics with a per-frame ground
constraint that keeps the feet planted. Error patterns are injected as edits
on the Euler channels (or, for wrong dynamics, as a timeline remap) before
the kinematic pass, so every label is true by construction, and every
injected pattern is verifiable by a geometric oracle on the raw trajectory.

World axes: y up, x forward, z lateral (right positive). All sagittal motion
(hip/knee/ankle flexion, torso lean) therefore rotates about z and lands in
the first Euler channel; lateral splay rotates about x and lands in the
second.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidInputError
from .motion import (
    Skeleton,
    Trajectory,
    default_skeleton,
    euler_from_quats,
    quat_conjugate,
    quat_multiply,
    quats_from_euler,
    rotate_vectors,
)
from .patterns import PATTERN_IDS, LabeledSample, PatternLabel, pattern_by_id
from .segmentation import (
    Boundary,
    CANONICAL_ORDER,
    SegmentConfig,
    SegmentLabel,
    Segmentation,
    segment,
)

# Bone offsets in the parent's local frame (meters, unscaled).
_BASE_OFFSETS = {
    "hips": (0.0, 0.0, 0.0),
    "spine": (0.0, 0.13, 0.0),
    "chest": (0.0, 0.19, 0.0),
    "neck": (0.0, 0.17, 0.0),
    "head": (0.0, 0.11, 0.0),
    "left_shoulder": (0.0, 0.15, -0.07),
    "left_upper_arm": (0.0, 0.0, -0.12),
    "left_forearm": (0.0, -0.27, 0.0),
    "right_shoulder": (0.0, 0.15, 0.07),
    "right_upper_arm": (0.0, 0.0, 0.12),
    "right_forearm": (0.0, -0.27, 0.0),
    "left_hand": (0.0, -0.24, 0.0),
    "right_hand": (0.0, -0.24, 0.0),
    "left_thigh": (0.0, -0.06, -0.10),
    "left_shin": (0.0, -0.44, 0.0),
    "left_foot": (0.0, -0.43, 0.0),
    "right_thigh": (0.0, -0.06, 0.10),
    "right_shin": (0.0, -0.44, 0.0),
    "right_foot": (0.0, -0.43, 0.0),
}

# Mirrored joint pairs and the per-channel sign flip for symmetry comparisons:
# flexion is shared-sign (both sides rotate about the common lateral axis),
# abduction and twist are mirrored.
MIRROR_PAIRS = (
    ("left_shoulder", "right_shoulder"),
    ("left_upper_arm", "right_upper_arm"),
    ("left_forearm", "right_forearm"),
    ("left_hand", "right_hand"),
    ("left_thigh", "right_thigh"),
    ("left_shin", "right_shin"),
    ("left_foot", "right_foot"),
)
MIRROR_SIGNS = np.array([1.0, -1.0, -1.0])

_PHASE_SECONDS = {
    SegmentLabel.PREPARATION: 0.62,
    SegmentLabel.GOING_DOWN: 1.0,
    SegmentLabel.IS_DOWN: 0.65,
    SegmentLabel.GOING_UP: 0.9,
    SegmentLabel.WRAP_UP: 0.72,
}

# Default per-pattern injection intensity ranges. The two patterns that are
# hard for classifiers by nature (subtle and temporally variable) default to
# low intensities.
DEFAULT_INTENSITY_RANGES: Dict[str, Tuple[float, float]] = {
    "arched_neck": (0.55, 1.0),
    "feet_distance_not_sufficient": (0.7, 1.0),
    "hips_do_not_initiate_movement": (0.5, 0.9),
    "hollow_back": (0.6, 1.0),
    "incorrect_weight_distribution": (0.55, 1.0),
    "knees_tremble_sideways": (0.35, 0.55),
    "legs_extended_at_end": (0.65, 1.0),
    "not_symmetric": (0.3, 0.5),
    "too_deep": (0.65, 1.0),
    "wrong_dynamics": (0.6, 1.0),
}

# Positive / labeled proportions shaped after the real corpus counts.
TABLE_ERROR_RATES: Dict[str, float] = {
    "arched_neck": 33 / 62,
    "feet_distance_not_sufficient": 45 / 78,
    "hips_do_not_initiate_movement": 23 / 74,
    "hollow_back": 34 / 76,
    "incorrect_weight_distribution": 51 / 67,
    "knees_tremble_sideways": 23 / 56,
    "legs_extended_at_end": 42 / 80,
    "not_symmetric": 17 / 63,
    "too_deep": 51 / 85,
    "wrong_dynamics": 61 / 88,
}
TABLE_LABELED_FRACTIONS: Dict[str, float] = {
    "arched_neck": 62 / 95,
    "feet_distance_not_sufficient": 78 / 95,
    "hips_do_not_initiate_movement": 74 / 95,
    "hollow_back": 76 / 95,
    "incorrect_weight_distribution": 67 / 95,
    "knees_tremble_sideways": 56 / 95,
    "legs_extended_at_end": 80 / 95,
    "not_symmetric": 63 / 95,
    "too_deep": 85 / 95,
    "wrong_dynamics": 88 / 95,
}


@dataclass(frozen=True)
class ErrorSpec:
    """One error to inject: which pattern, how strongly, where, and its quirks.

    ``seed`` drives the pattern's idiosyncrasies (tremble frequency/phase,
    which joints go asymmetric); intensity 0 is the no-op boundary case.
    """

    pattern: str
    intensity: float
    phases: Tuple[SegmentLabel, ...] = ()
    seed: int = 0

    def __post_init__(self):
        pattern_by_id(self.pattern)
        if not 0.0 <= self.intensity <= 1.0:
            raise InvalidInputError(f"intensity must be in [0, 1], got {self.intensity}")


@dataclass(frozen=True)
class SubjectStyle:
    """Per-subject execution style, reproducible from (corpus seed, subject index)."""

    tempo: float  # duration multiplier
    depth: float  # knee bend target, radians
    bone_scale: float
    standing_knee: float
    hip_ratio: float
    spine_ratio: float
    arm_ratio: float
    stance: float  # thigh abduction at stand, radians
    noise: float  # channel noise amplitude, radians
    posture_offsets: Tuple[Tuple[int, int, float], ...]  # (joint, channel, radians)


def subject_style(seed: int, subject_index: int, skeleton: Skeleton) -> SubjectStyle:
    rng = np.random.default_rng(np.random.SeedSequence((seed, 1, subject_index)))
    offsets = []
    for name in ("spine", "chest", "neck", "left_upper_arm", "right_upper_arm"):
        j = skeleton.index_of(name)
        offsets.append((j, 0, float(rng.uniform(-0.03, 0.03))))
        offsets.append((j, 2, float(rng.uniform(-0.02, 0.02))))
    return SubjectStyle(
        tempo=float(rng.uniform(0.88, 1.18)),
        depth=float(rng.uniform(1.42, 1.62)),
        bone_scale=float(rng.uniform(0.92, 1.08)),
        standing_knee=float(rng.uniform(0.09, 0.14)),
        hip_ratio=float(rng.uniform(0.84, 0.92)),
        spine_ratio=float(rng.uniform(0.20, 0.26)),
        arm_ratio=float(rng.uniform(0.35, 0.55)),
        stance=float(rng.uniform(0.10, 0.14)),
        noise=float(rng.uniform(0.003, 0.005)),
        posture_offsets=tuple(offsets),
    )


@dataclass(frozen=True)
class GenConfig:
    n_subjects: int = 49
    samples_per_subject: int = 2
    max_samples: Optional[int] = 95
    sample_rate: float = 120.0
    duration_scale: float = 1.0
    seed: int = 0
    error_rates: Mapping[str, float] = field(default_factory=lambda: dict(TABLE_ERROR_RATES))
    labeled_fractions: Mapping[str, float] = field(
        default_factory=lambda: dict(TABLE_LABELED_FRACTIONS)
    )
    intensity_ranges: Mapping[str, Tuple[float, float]] = field(
        default_factory=lambda: dict(DEFAULT_INTENSITY_RANGES)
    )

    def __post_init__(self):
        for pid, rate in self.error_rates.items():
            pattern_by_id(pid)
            if not 0.0 <= rate <= 1.0:
                raise InvalidInputError(f"error rate for {pid} must be in [0, 1], got {rate}")


@dataclass(frozen=True)
class SyntheticCorpus:
    samples: Tuple[LabeledSample, ...]
    boundaries: Mapping[str, Segmentation]  # keyed by sample_id, true phase bounds
    config: GenConfig

    def boundary_of(self, sample: LabeledSample) -> Segmentation:
        return self.boundaries[sample.sample_id]


# ---------------------------------------------------------------------------
# kinematics


def bone_offsets(skeleton: Skeleton, bone_scale: float = 1.0) -> np.ndarray:
    out = np.array([_BASE_OFFSETS[j.name] for j in skeleton.joints])
    return out * bone_scale


def forward_kinematics(
    skeleton: Skeleton, rotations: np.ndarray, root_path: np.ndarray, offsets: np.ndarray
) -> np.ndarray:
    """World positions (n, k, 3) from local rotations, root path, bone offsets."""
    n, k, _ = rotations.shape
    glob = np.empty((n, k, 4))
    pos = np.empty((n, k, 3))
    glob[:, 0] = rotations[:, 0]
    pos[:, 0] = root_path
    for j in range(1, k):
        p = skeleton.joints[j].parent
        glob[:, j] = quat_multiply(glob[:, p], rotations[:, j])
        pos[:, j] = pos[:, p] + rotate_vectors(glob[:, p], offsets[j])
    return pos


def recover_offsets(t: Trajectory) -> np.ndarray:
    """Bone offsets in parent frames, recovered exactly from frame 0."""
    sk = t.skeleton
    n0rot = t.rotations[:1]
    glob = np.empty((sk.n_joints, 4))
    glob[0] = n0rot[0, 0]
    offsets = np.zeros((sk.n_joints, 3))
    for j in range(1, sk.n_joints):
        p = sk.joints[j].parent
        glob[j] = quat_multiply(glob[p], n0rot[0, j])
        delta = t.positions[0, j] - t.positions[0, p]
        offsets[j] = rotate_vectors(quat_conjugate(glob[p]), delta)
    return offsets


def _feet_indices(skeleton: Skeleton) -> Tuple[int, int]:
    return skeleton.index_of("left_foot"), skeleton.index_of("right_foot")


def _assemble(
    skeleton: Skeleton,
    channels: np.ndarray,
    offsets: np.ndarray,
    sample_rate: float,
    subject_id: str,
    sample_id: str,
    ground_targets: Optional[Tuple[float, float, float]] = None,
) -> Trajectory:
    """Channels -> quats -> FK -> ground-constrained trajectory.

    The root is translated per frame so the lower foot stays at ground level
    and the stance center stays put; y stays absolute, x/z become relative to
    the root start position.
    """
    rotations = quats_from_euler(channels)
    n = rotations.shape[0]
    root_path = np.zeros((n, 3))
    root_path[:, 1] = 1.0
    pos = forward_kinematics(skeleton, rotations, root_path, offsets)
    lf, rf = _feet_indices(skeleton)
    feet_y = np.minimum(pos[:, lf, 1], pos[:, rf, 1])
    feet_x = 0.5 * (pos[:, lf, 0] + pos[:, rf, 0])
    feet_z = 0.5 * (pos[:, lf, 2] + pos[:, rf, 2])
    if ground_targets is None:
        ground_targets = (float(feet_y[0]), float(feet_x[0]), float(feet_z[0]))
    gy, gx, gz = ground_targets
    shift = np.stack([gx - feet_x, gy - feet_y, gz - feet_z], axis=1)
    pos = pos + shift[:, None, :]
    # x/z relative to the root start position (start orientation is identity).
    pos[:, :, 0] -= pos[0, 0, 0]
    pos[:, :, 2] -= pos[0, 0, 2]
    return Trajectory(rotations, pos, sample_rate, subject_id, sample_id, skeleton)


# ---------------------------------------------------------------------------
# clean squat synthesis


def _ease(a: float, b: float, n: int) -> np.ndarray:
    s = np.linspace(0.0, 1.0, n, endpoint=False)
    return a + (b - a) * 0.5 * (1.0 - np.cos(np.pi * s))


def _smooth_noise(rng, n: int, amp: float, window: int = 45) -> np.ndarray:
    raw = rng.standard_normal(n + window)
    kernel = np.hanning(window)
    kernel /= kernel.sum()
    out = np.convolve(raw, kernel, mode="same")[window // 2 : window // 2 + n]
    peak = np.abs(out).max()
    return out * (amp / peak) if peak > 0 else out


def _phase_lengths(style: SubjectStyle, cfg: GenConfig, rng) -> Dict[SegmentLabel, int]:
    out = {}
    for label in CANONICAL_ORDER:
        seconds = _PHASE_SECONDS[label] * style.tempo * cfg.duration_scale
        seconds *= float(rng.uniform(0.95, 1.05))
        out[label] = max(int(round(seconds * cfg.sample_rate)), 2)
    return out


def _clean_channels(
    skeleton: Skeleton,
    style: SubjectStyle,
    cfg: GenConfig,
    rng,
) -> Tuple[np.ndarray, Segmentation, float]:
    """Euler channel profiles (n, k, 3) for one clean squat + true boundaries."""
    lengths = _phase_lengths(style, cfg, rng)
    depth = style.depth + float(rng.uniform(-0.04, 0.04))
    sk_angle = style.standing_knee
    bend = np.concatenate(
        [
            np.full(lengths[SegmentLabel.PREPARATION], sk_angle),
            _ease(sk_angle, depth, lengths[SegmentLabel.GOING_DOWN]),
            np.full(lengths[SegmentLabel.IS_DOWN], depth),
            _ease(depth, sk_angle, lengths[SegmentLabel.GOING_UP]),
            np.full(lengths[SegmentLabel.WRAP_UP], sk_angle),
        ]
    )
    n = bend.size
    k = skeleton.n_joints
    ch = np.zeros((n, k, 3))
    idx = {j.name: j.index for j in skeleton.joints}
    hip = style.hip_ratio * bend
    dev = bend - sk_angle
    for side in ("left", "right"):
        ch[:, idx[f"{side}_thigh"], 0] = hip
        ch[:, idx[f"{side}_shin"], 0] = -bend
        ch[:, idx[f"{side}_foot"], 0] = bend - hip
        ch[:, idx[f"{side}_upper_arm"], 0] = style.arm_ratio * dev
    ch[:, idx["left_thigh"], 1] = style.stance
    ch[:, idx["right_thigh"], 1] = -style.stance
    ch[:, idx["spine"], 0] = style.spine_ratio * dev
    ch[:, idx["chest"], 0] = 0.45 * style.spine_ratio * dev
    ch[:, idx["neck"], 0] = -0.05 * dev
    for j, c, off in style.posture_offsets:
        ch[:, j, c] += off
    # Smooth per-channel noise; bigger on the arms than on the torso/legs.
    for j in range(k):
        name = skeleton.joints[j].name
        amp = style.noise * (1.2 if ("arm" in name or "hand" in name) else 1.0)
        for c in range(3):
            # Keep thigh abduction quiet: it is the tremble oracle's band.
            scale = 0.5 if (c == 1 and "thigh" in name) else 1.0
            ch[:, j, c] += _smooth_noise(rng, n, scale * amp * float(rng.uniform(0.5, 1.0)))
    edges = np.cumsum([lengths[l] for l in CANONICAL_ORDER])
    starts = [0, *edges[:-1]]
    bounds = Segmentation(
        tuple(
            Boundary(label, int(s), int(e) - 1)
            for label, s, e in zip(CANONICAL_ORDER, starts, edges)
        )
    )
    return ch, bounds, depth


# ---------------------------------------------------------------------------
# error injection (channel edits)


def _movement_ramp(n: int, bounds: Segmentation) -> np.ndarray:
    """0 during stillness, eased to 1 across the descent, back down in wrap-up."""
    down = bounds.bounds(SegmentLabel.GOING_DOWN)
    up = bounds.bounds(SegmentLabel.GOING_UP)
    ramp = np.zeros(n)
    d0, d1 = down.start, down.end + 1
    ramp[d0:d1] = 0.5 * (1.0 - np.cos(np.pi * np.linspace(0, 1, d1 - d0, endpoint=False)))
    ramp[d1 : up.start] = 1.0
    u0, u1 = up.start, up.end + 1
    ramp[u0:u1] = 0.5 * (1.0 + np.cos(np.pi * np.linspace(0, 1, u1 - u0, endpoint=False)))
    return ramp


def _knee_bend_channels(ch: np.ndarray, idx: Mapping[str, int]) -> np.ndarray:
    return -0.5 * (ch[:, idx["left_shin"], 0] + ch[:, idx["right_shin"], 0])


def _edit_channels(
    ch: np.ndarray,
    bounds: Segmentation,
    spec: ErrorSpec,
    skeleton: Skeleton,
    sample_rate: float,
) -> Tuple[np.ndarray, Segmentation]:
    """Apply one pattern's channel edit; wrong_dynamics also remaps the timeline."""
    i = spec.intensity
    if i == 0.0:
        return ch, bounds
    rng = np.random.default_rng(np.random.SeedSequence((spec.seed, 7)))
    idx = {j.name: j.index for j in skeleton.joints}
    ch = ch.copy()
    n = ch.shape[0]
    ramp = _movement_ramp(n, bounds)
    pid = spec.pattern

    if pid == "arched_neck":
        ch[:, idx["neck"], 0] -= 0.40 * i * ramp
        ch[:, idx["head"], 0] -= 0.12 * i * ramp
    elif pid == "feet_distance_not_sufficient":
        scale = 1.0 - i
        ch[:, idx["left_thigh"], 1] *= scale
        ch[:, idx["right_thigh"], 1] *= scale
    elif pid == "hips_do_not_initiate_movement":
        lag = max(1, int(round(36.0 * i * sample_rate / 120.0)))
        for side in ("left", "right"):
            thigh = ch[:, idx[f"{side}_thigh"], 0]
            delayed = np.concatenate([np.full(lag, thigh[0]), thigh[:-lag]])
            ch[:, idx[f"{side}_thigh"], 0] = delayed
            # Keep the foot flat for the delayed hip angle.
            ch[:, idx[f"{side}_foot"], 0] = -ch[:, idx[f"{side}_shin"], 0] - delayed
    elif pid == "hollow_back":
        ch[:, idx["spine"], 0] -= 0.72 * i * ramp
        ch[:, idx["chest"], 0] += 0.10 * i * ramp
    elif pid == "incorrect_weight_distribution":
        ch[:, idx["hips"], 0] += 0.30 * i * ramp
    elif pid == "knees_tremble_sideways":
        amp = 0.065 * i
        freq = float(rng.uniform(3.2, 4.5))
        phase = float(rng.uniform(0.0, 2 * np.pi))
        env = np.zeros(n)
        for label in (SegmentLabel.GOING_DOWN, SegmentLabel.GOING_UP):
            b = bounds.bounds(label)
            m = b.end + 1 - b.start
            env[b.start : b.end + 1] = np.sin(np.pi * np.linspace(0, 1, m)) ** 2
        wob = amp * env * np.sin(2 * np.pi * freq * np.arange(n) / sample_rate + phase)
        ch[:, idx["left_thigh"], 1] += wob
        ch[:, idx["right_thigh"], 1] -= wob
    elif pid == "legs_extended_at_end":
        # Re-target the ascent so it lands on a locked-out knee angle.
        up = bounds.bounds(SegmentLabel.GOING_UP)
        seg = slice(up.start, n)
        bend = _knee_bend_channels(ch, idx)[seg]
        depth = float(bend[0])
        standing = float(bend[-1])
        target = standing * (1.0 - i)
        scale = (depth - target) / max(depth - standing, 1e-9)
        delta = (target + (bend - standing) * scale) - bend
        for side in ("left", "right"):
            ch[seg, idx[f"{side}_shin"], 0] -= delta
            ch[seg, idx[f"{side}_thigh"], 0] += 0.88 * delta
            ch[seg, idx[f"{side}_foot"], 0] = -(
                ch[seg, idx[f"{side}_thigh"], 0] + ch[seg, idx[f"{side}_shin"], 0]
            )
    elif pid == "not_symmetric":
        sites = [
            ("upper_arm", 0, 0.22),
            ("thigh", 1, 0.12),
            ("shin", 0, 0.12),
            ("forearm", 0, 0.20),
        ]
        picks = rng.choice(len(sites), size=int(rng.integers(1, 3)), replace=False)
        for p in picks:
            base, c, mag = sites[p]
            side = "left" if rng.random() < 0.5 else "right"
            ch[:, idx[f"{side}_{base}"], c] += mag * i * ramp
    elif pid == "too_deep":
        bend = _knee_bend_channels(ch, idx)
        base = bend[bounds.bounds(SegmentLabel.PREPARATION).end]
        depth = float(bend.max() - base)
        m = (depth + 0.55 * i) / max(depth, 1e-9)
        for side in ("left", "right"):
            for joint in ("thigh", "shin", "foot"):
                col = ch[:, idx[f"{side}_{joint}"], 0]
                ch[:, idx[f"{side}_{joint}"], 0] = col[0] + (col - col[0]) * m
    elif pid == "wrong_dynamics":
        # Depth overshoot near the end of the descent, then compressed phases.
        down = bounds.bounds(SegmentLabel.GOING_DOWN)
        m = down.end + 1 - down.start
        s = np.linspace(0, 1, m, endpoint=False)
        bump = 0.06 * i * np.sin(np.pi * np.clip((s - 0.70) / 0.30, 0.0, 1.0)) ** 2
        for side in ("left", "right"):
            ch[down.start : down.end + 1, idx[f"{side}_shin"], 0] -= bump
            ch[down.start : down.end + 1, idx[f"{side}_thigh"], 0] += 0.88 * bump
        ch, bounds = _remap_phases(ch, bounds, 1.0 - 0.68 * i)
    else:  # pragma: no cover - pattern registry is closed
        raise InvalidInputError(f"no injection rule for pattern {pid!r}")
    return ch, bounds


def _remap_phases(
    ch: np.ndarray, bounds: Segmentation, factor: float
) -> Tuple[np.ndarray, Segmentation]:
    """Compress the moving phases to ``factor`` of their length (frame remap)."""
    pieces = []
    new_bounds = []
    cursor = 0
    for b in bounds.boundaries:
        m = b.end + 1 - b.start
        if b.label in (SegmentLabel.GOING_DOWN, SegmentLabel.IS_DOWN, SegmentLabel.GOING_UP):
            new_m = max(int(round(m * factor)), 2)
            take = np.round(np.linspace(0, m - 1, new_m)).astype(np.int64)
        else:
            new_m = m
            take = np.arange(m)
        pieces.append(ch[b.start : b.end + 1][take])
        new_bounds.append(Boundary(b.label, cursor, cursor + new_m - 1))
        cursor += new_m
    return np.concatenate(pieces), Segmentation(tuple(new_bounds))


_INJECTION_ORDER = {pid: 0 for pid in PATTERN_IDS}
_INJECTION_ORDER["wrong_dynamics"] = 1  # timeline remap happens late
_INJECTION_ORDER["hips_do_not_initiate_movement"] = 2  # frame lag must survive the remap


def inject_error(t: Trajectory, spec: ErrorSpec, bounds: Optional[Segmentation] = None) -> Trajectory:
    """Re-synthesize ``t`` with one error pattern injected.

    Works on any generator-produced squat: the Euler channels are recovered
    exactly, edited, and pushed back through FK with the original ground
    targets. Intensity 0 returns the trajectory unchanged.
    """
    out, _ = _inject_tracked(t, spec, bounds)
    return out


def _inject_tracked(
    t: Trajectory, spec: ErrorSpec, bounds: Optional[Segmentation] = None
) -> Tuple[Trajectory, Segmentation]:
    if bounds is None:
        bounds = segment(t, _segment_config_for(t.sample_rate))
    if spec.intensity == 0.0:
        return t, bounds
    ch = euler_from_quats(t.rotations)
    offsets = recover_offsets(t)
    lf, rf = _feet_indices(t.skeleton)
    gy = float(min(t.positions[0, lf, 1], t.positions[0, rf, 1]))
    gx = float(0.5 * (t.positions[0, lf, 0] + t.positions[0, rf, 0]))
    gz = float(0.5 * (t.positions[0, lf, 2] + t.positions[0, rf, 2]))
    ch, new_bounds = _edit_channels(ch, bounds, spec, t.skeleton, t.sample_rate)
    out = _assemble(
        t.skeleton, ch, offsets, t.sample_rate, t.subject_id, t.sample_id,
        ground_targets=(gy, gx, gz),
    )
    return out, new_bounds


def _segment_config_for(sample_rate: float) -> SegmentConfig:
    # Frame-count knobs scale with the rate so short test corpora segment too.
    scale = sample_rate / 120.0
    return SegmentConfig(
        min_duration=max(4, int(round(12 * scale))),
        smooth_window=max(3, int(round(11 * scale)) | 1),
    )


# ---------------------------------------------------------------------------
# corpus generation


def _make_sample(
    skeleton: Skeleton,
    style: SubjectStyle,
    cfg: GenConfig,
    subject_id: str,
    sample_id: str,
    sample_entropy: Tuple[int, ...],
) -> Tuple[LabeledSample, Segmentation]:
    rng = np.random.default_rng(np.random.SeedSequence(sample_entropy))
    ch, bounds, _ = _clean_channels(skeleton, style, cfg, rng)
    offsets = bone_offsets(skeleton, style.bone_scale)

    present: Dict[str, bool] = {}
    specs: List[ErrorSpec] = []
    for pid in PATTERN_IDS:
        rate = cfg.error_rates.get(pid, 0.0)
        hit = bool(rng.random() < rate)
        present[pid] = hit
        lo, hi = cfg.intensity_ranges.get(pid, (0.5, 1.0))
        intensity = float(rng.uniform(lo, hi))
        seed = int(rng.integers(0, 2**31 - 1))
        if hit:
            specs.append(ErrorSpec(pid, intensity, seed=seed))
    specs.sort(key=lambda s: (_INJECTION_ORDER[s.pattern], s.pattern))
    for spec in specs:
        ch, bounds = _edit_channels(ch, bounds, spec, skeleton, cfg.sample_rate)

    traj = _assemble(skeleton, ch, offsets, cfg.sample_rate, subject_id, sample_id)

    labels: Dict[str, PatternLabel] = {}
    for pid in PATTERN_IDS:
        labeled = rng.random() < cfg.labeled_fractions.get(pid, 1.0)
        if labeled:
            labels[pid] = PatternLabel.PRESENT if present[pid] else PatternLabel.ABSENT
        else:
            labels[pid] = PatternLabel.UNLABELED
    if all(v is PatternLabel.UNLABELED for v in labels.values()):
        pid = PATTERN_IDS[0]
        labels[pid] = PatternLabel.PRESENT if present[pid] else PatternLabel.ABSENT
    return LabeledSample(traj, labels), bounds


def generate_corpus(cfg: GenConfig = GenConfig()) -> SyntheticCorpus:
    """Deterministic synthetic corpus with per-pattern ternary labels.

    The default shape is 49 subjects with up to 2 samples each, capped at 95
    samples, at 120 Hz.
    """
    skeleton = default_skeleton()
    # Spread the sample cap over all subjects: trailing subjects drop samples
    # one by one until the corpus fits, so every subject contributes.
    counts = [cfg.samples_per_subject] * cfg.n_subjects
    if cfg.max_samples is not None:
        excess = sum(counts) - cfg.max_samples
        s = cfg.n_subjects - 1
        while excess > 0:
            if counts[s] > 1:
                counts[s] -= 1
                excess -= 1
            s = s - 1 if s > 0 else cfg.n_subjects - 1
    samples: List[LabeledSample] = []
    boundaries: Dict[str, Segmentation] = {}
    for s in range(cfg.n_subjects):
        subject_id = f"s{s:02d}"
        style = subject_style(cfg.seed, s, skeleton)
        for e in range(counts[s]):
            sample_id = f"{subject_id}e{e:02d}"
            sample, bounds = _make_sample(
                skeleton, style, cfg, subject_id, sample_id, (cfg.seed, 2, s, e)
            )
            samples.append(sample)
            boundaries[sample_id] = bounds
    return SyntheticCorpus(tuple(samples), boundaries, cfg)


# ---------------------------------------------------------------------------
# geometric oracles


def _movement_window(bounds: Segmentation) -> Tuple[int, int]:
    down = bounds.bounds(SegmentLabel.GOING_DOWN)
    up = bounds.bounds(SegmentLabel.GOING_UP)
    return down.start, up.end + 1


def _prep_mean(x: np.ndarray, bounds: Segmentation) -> float:
    prep = bounds.bounds(SegmentLabel.PREPARATION)
    return float(x[prep.start : prep.end + 1].mean())


def _smoothed(x: np.ndarray, window: int) -> np.ndarray:
    kernel = np.full(window, 1.0 / window)
    pad = window // 2
    padded = np.concatenate([np.full(pad, x[0]), x, np.full(pad, x[-1])])
    return np.convolve(padded, kernel, mode="valid")


ORACLE_THRESHOLDS: Dict[str, float] = {
    "arched_neck": -0.145,
    "feet_distance_not_sufficient": 0.30,
    "hips_do_not_initiate_movement": 8.0,
    "hollow_back": 0.125,
    "incorrect_weight_distribution": 0.05,
    "knees_tremble_sideways": 0.0045,
    "legs_extended_at_end": 0.067,
    "not_symmetric": 0.0115,
    "too_deep": 1.713,
    "wrong_dynamics": 7.0,
}


def oracle_measure(pattern_id: str, t: Trajectory, bounds: Segmentation) -> float:
    """Scalar geometric evidence for one pattern, measured on the raw trajectory."""
    sk = t.skeleton
    idx = {j.name: j.index for j in sk.joints}
    euler = euler_from_quats(t.rotations)
    w0, w1 = _movement_window(bounds)
    bend = -0.5 * (euler[:, idx["left_shin"], 0] + euler[:, idx["right_shin"], 0])

    if pattern_id == "arched_neck":
        neck = euler[:, idx["neck"], 0]
        return float(neck[w0:w1].mean() - _prep_mean(neck, bounds))
    if pattern_id == "feet_distance_not_sufficient":
        gap = t.positions[:, idx["right_foot"], 2] - t.positions[:, idx["left_foot"], 2]
        return float(np.abs(gap).mean() / t.positions[0, idx["hips"], 1])
    if pattern_id == "hips_do_not_initiate_movement":
        hip = 0.5 * (euler[:, idx["left_thigh"], 0] + euler[:, idx["right_thigh"], 0])
        down = bounds.bounds(SegmentLabel.IS_DOWN)
        b = _smoothed(bend - bend[0], 9)[: down.end]
        h = _smoothed(hip - hip[0], 9)[: down.end]
        b_on = int(np.argmax(b > 0.15 * b.max()))
        h_on = int(np.argmax(h > 0.15 * h.max()))
        return float(h_on - b_on)
    if pattern_id == "hollow_back":
        spine = euler[:, idx["spine"], 0]
        return float(spine[w0:w1].mean() - _prep_mean(spine, bounds))
    if pattern_id == "incorrect_weight_distribution":
        pitch = euler[:, idx["hips"], 0]
        return float(pitch[w0:w1].mean() - _prep_mean(pitch, bounds))
    if pattern_id == "knees_tremble_sideways":
        # The wobble is mirror-symmetric, so the half-difference of the two
        # abduction channels keeps it at full strength while one-sided
        # offsets halve and independent noise partially cancels. Light
        # pre-smoothing strips resampling artifacts without touching the
        # 3-4.5 Hz tremble band.
        window = max(3, int(round(0.3 * t.sample_rate)) | 1)
        mirror = 0.5 * (
            euler[:, idx["left_thigh"], 1] - euler[:, idx["right_thigh"], 1]
        )
        mirror = _smoothed(mirror, 5)
        hp = mirror - _smoothed(mirror, window)
        return float(np.sqrt(np.mean(hp[w0:w1] ** 2)))
    if pattern_id == "legs_extended_at_end":
        wrap = bounds.bounds(SegmentLabel.WRAP_UP)
        half = wrap.start + (wrap.end + 1 - wrap.start) // 2
        return float(bend[half : wrap.end + 1].mean())
    if pattern_id == "not_symmetric":
        worst = 0.0
        for lname, rname in MIRROR_PAIRS:
            li, ri = idx[lname], idx[rname]
            for c in range(3):
                dl = euler[:, li, c] - _prep_mean(euler[:, li, c], bounds)
                dr = euler[:, ri, c] - _prep_mean(euler[:, ri, c], bounds)
                diff = dl[w0:w1] - MIRROR_SIGNS[c] * dr[w0:w1]
                worst = max(worst, abs(float(diff.mean())))
        return worst
    if pattern_id == "too_deep":
        return float(_smoothed(bend, 9).max())
    if pattern_id == "wrong_dynamics":
        # Peak descent speed, normalized by depth and by the whole recording
        # duration. Rushed phases raise the peak without stretching the
        # still phases, so the measure is invariant to overall tempo and to
        # the corpus duration scale. Descent only: the ascent is naturally
        # faster and other patterns (legs extended) change its range.
        down = bounds.bounds(SegmentLabel.GOING_DOWN)
        sm = _smoothed(bend, 11)
        speed = np.abs(np.gradient(sm)) * t.sample_rate
        dev = sm.max() - sm[: bounds.bounds(SegmentLabel.PREPARATION).end + 1].mean()
        peak = speed[down.start : down.end + 1].max()
        return float(peak * (t.n_frames / t.sample_rate) / max(dev, 1e-9))
    raise InvalidInputError(f"no oracle for pattern {pattern_id!r}")


def oracle_detects(pattern_id: str, t: Trajectory, bounds: Segmentation) -> bool:
    value = oracle_measure(pattern_id, t, bounds)
    thr = ORACLE_THRESHOLDS[pattern_id]
    if pattern_id in ("arched_neck", "hollow_back", "feet_distance_not_sufficient",
                      "legs_extended_at_end"):
        return value < thr
    return value > thr


def passes_clean_checks(t: Trajectory, bounds: Segmentation) -> bool:
    """True when no geometric oracle fires: the squat looks correct."""
    return not any(oracle_detects(pid, t, bounds) for pid in PATTERN_IDS)
