import numpy as np
import pytest

from conftest import K, make_trajectory

from formcheck.errors import (
    ConfigError,
    InvalidInputError,
    NotFoundError,
    SegmentationError,
)
from formcheck.evaluation import time_callable
from formcheck.motion import quats_from_euler
from formcheck.patterns import PatternLabel
from formcheck.segmentation import (
    CANONICAL_ORDER,
    SegmentConfig,
    SegmentLabel,
    Segmentation,
    extract_segment,
    segment,
)
from formcheck.synth import GenConfig, generate_corpus

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def constant_pose_trajectory(n=200):
    rot = np.tile(IDENTITY, (n, K, 1))
    return make_trajectory(rot)


def rising_first_squat(small_corpus):
    """A squat whose motion starts by extending from depth: the canonical
    descend-hold-ascend order is unreachable from frame 0."""
    s = small_corpus.samples[0]
    b = small_corpus.boundary_of(s)
    down = b.bounds(SegmentLabel.GOING_DOWN)
    t = s.trajectory
    # Clamp everything before mid-descent to the deep pose: the first
    # above-threshold knee motion is then extension.
    mid = down.end
    rot = np.concatenate([np.repeat(t.rotations[mid:mid + 1], mid, axis=0), t.rotations[mid:]])
    pos = np.concatenate([np.repeat(t.positions[mid:mid + 1], mid, axis=0), t.positions[mid:]])
    return make_trajectory(rot, pos, sample_rate=t.sample_rate)


class TestSegment:
    def test_clean_boundaries_close_to_truth(self, clean_corpus):
        for s in clean_corpus.samples:
            got = segment(s.trajectory)
            want = clean_corpus.boundary_of(s)
            for g, w in zip(got.boundaries, want.boundaries):
                assert g.label == w.label
                assert abs(g.start - w.start) <= 6, (s.sample_id, g.label)

    def test_labels_cover_and_order(self, small_corpus):
        for s in small_corpus.samples:
            got = segment(s.trajectory)
            assert got.labels == CANONICAL_ORDER
            assert got.boundaries[0].start == 0
            assert got.boundaries[-1].end == s.trajectory.n_frames - 1

    def test_constant_pose_fails_at_preparation(self):
        with pytest.raises(SegmentationError) as ei:
            segment(constant_pose_trajectory())
        assert ei.value.last_state == "preparation"

    def test_rising_first_fails_in_order(self, small_corpus):
        with pytest.raises(SegmentationError) as ei:
            segment(rising_first_squat(small_corpus))
        assert ei.value.last_state == "preparation"

    def test_too_short_rejected(self):
        with pytest.raises(InvalidInputError):
            segment(constant_pose_trajectory(30))

    def test_determinism(self, small_corpus):
        t = small_corpus.samples[3].trajectory
        a = segment(t)
        b = segment(t)
        assert a == b

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            SegmentConfig(onset_speed=5.0, offset_speed=10.0)
        with pytest.raises(ConfigError):
            SegmentConfig(smooth_window=4)

    def test_throughput_under_1ms_per_frame(self, small_corpus):
        t = small_corpus.samples[0].trajectory
        ms = time_callable(lambda: segment(t), reps=5, warmup=1)
        assert ms / t.n_frames < 1.0


class TestExtractSegment:
    def test_full_range_identity(self, small_corpus):
        s = small_corpus.samples[0]
        t = s.trajectory
        one = Segmentation(
            (type(segment(t).boundaries[0])(SegmentLabel.PREPARATION, 0, t.n_frames - 1),)
        )
        out = extract_segment(t, one, SegmentLabel.PREPARATION)
        assert np.array_equal(out.rotations, t.rotations)
        assert np.array_equal(out.positions, t.positions)

    def test_slicing_contract(self, small_corpus):
        s = small_corpus.samples[1]
        seg = segment(s.trajectory)
        b = seg.bounds(SegmentLabel.GOING_DOWN)
        out = extract_segment(s.trajectory, seg, SegmentLabel.GOING_DOWN)
        assert out.n_frames == b.end - b.start + 1
        assert out.subject_id == s.subject_id

    def test_partition_property(self, small_corpus):
        s = small_corpus.samples[2]
        t = s.trajectory
        seg = segment(t)
        pieces = [extract_segment(t, seg, l) for l in CANONICAL_ORDER]
        rot = np.concatenate([p.rotations for p in pieces])
        pos = np.concatenate([p.positions for p in pieces])
        assert np.array_equal(rot, t.rotations)
        assert np.array_equal(pos, t.positions)

    def test_missing_label(self, small_corpus):
        t = small_corpus.samples[0].trajectory
        seg = segment(t)
        only_prep = Segmentation(seg.boundaries[:1])
        with pytest.raises(NotFoundError):
            extract_segment(t, only_prep, SegmentLabel.IS_DOWN)


class TestSegmentationType:
    def test_rejects_gaps_and_disorder(self, small_corpus):
        t = small_corpus.samples[0].trajectory
        good = segment(t)
        B = type(good.boundaries[0])
        with pytest.raises(InvalidInputError):
            Segmentation((B(SegmentLabel.GOING_DOWN, 0, 10), B(SegmentLabel.PREPARATION, 11, 20)))
        with pytest.raises(InvalidInputError):
            Segmentation((B(SegmentLabel.PREPARATION, 0, 10), B(SegmentLabel.GOING_DOWN, 12, 20)))
