import numpy as np
import pytest

from formcheck.align import framewise_distance, select_reference, warp_to_reference
from formcheck.errors import InvalidInputError
from formcheck.motion import euler_from_quats
from formcheck.patterns import PATTERN_IDS, PatternLabel
from formcheck.segmentation import SegmentLabel, segment
from formcheck.synth import (
    ErrorSpec,
    GenConfig,
    SyntheticCorpus,
    generate_corpus,
    inject_error,
    oracle_detects,
    oracle_measure,
    passes_clean_checks,
)

LOWER_IS_ERROR = (
    "arched_neck", "hollow_back", "feet_distance_not_sufficient", "legs_extended_at_end",
)


class TestGenerateCorpus:
    def test_default_shape(self):
        corpus = generate_corpus(GenConfig(seed=0))
        assert len(corpus.samples) == 95
        assert len({s.subject_id for s in corpus.samples}) == 49
        assert all(s.trajectory.sample_rate == 120.0 for s in corpus.samples)

    def test_zero_rates_all_absent_and_clean(self, clean_corpus):
        for s in clean_corpus.samples:
            assert all(v is PatternLabel.ABSENT for v in s.labels.values())
            assert passes_clean_checks(s.trajectory, clean_corpus.boundary_of(s))

    def test_too_deep_rate_one(self):
        rates = {p: 0.0 for p in PATTERN_IDS}
        rates["too_deep"] = 1.0
        corpus = generate_corpus(
            GenConfig(n_subjects=6, samples_per_subject=2, max_samples=None,
                      duration_scale=0.8, seed=5, error_rates=rates,
                      labeled_fractions={})
        )
        for s in corpus.samples:
            assert s.labels["too_deep"] is PatternLabel.PRESENT
            assert oracle_detects("too_deep", s.trajectory, corpus.boundary_of(s))

    def test_same_seed_identical(self):
        cfg = GenConfig(n_subjects=4, samples_per_subject=2, max_samples=None,
                        duration_scale=0.8, seed=9)
        c1 = generate_corpus(cfg)
        c2 = generate_corpus(cfg)
        for a, b in zip(c1.samples, c2.samples):
            assert np.array_equal(a.trajectory.rotations, b.trajectory.rotations)
            assert np.array_equal(a.trajectory.positions, b.trajectory.positions)
            assert a.labels == b.labels

    def test_invalid_rates_rejected(self):
        with pytest.raises(InvalidInputError):
            GenConfig(error_rates={"too_deep": 1.5})

    def test_oracles_match_labels(self, small_corpus):
        for s in small_corpus.samples:
            b = small_corpus.boundary_of(s)
            for p in PATTERN_IDS:
                lab = s.labels[p]
                if lab is PatternLabel.UNLABELED:
                    continue
                assert oracle_detects(p, s.trajectory, b) == (lab is PatternLabel.PRESENT), (
                    s.sample_id, p, oracle_measure(p, s.trajectory, b)
                )

    def test_style_realism_inter_vs_intra(self, clean_corpus):
        samples = clean_corpus.samples
        segs = [segment(s.trajectory) for s in samples]
        ref = select_reference([s.trajectory for s in samples], [g.labels for g in segs])
        warped = [warp_to_reference(s.trajectory, ref) for s in samples]
        intra, inter = [], []
        for i in range(len(samples)):
            for j in range(i + 1, len(samples)):
                d = framewise_distance(warped[i], warped[j])
                if samples[i].subject_id == samples[j].subject_id:
                    intra.append(d)
                else:
                    inter.append(d)
        assert np.mean(inter) > np.mean(intra)


class TestInjectError:
    def _clean_sample(self, clean_corpus, i=0):
        s = clean_corpus.samples[i]
        return s.trajectory, clean_corpus.boundary_of(s)

    def test_intensity_zero_is_identity(self, clean_corpus):
        t, b = self._clean_sample(clean_corpus)
        out = inject_error(t, ErrorSpec("too_deep", 0.0), b)
        assert out is t

    def test_feet_gap_shrinks(self, clean_corpus):
        t, b = self._clean_sample(clean_corpus)
        before = oracle_measure("feet_distance_not_sufficient", t, b)
        out = inject_error(t, ErrorSpec("feet_distance_not_sufficient", 0.9), b)
        after = oracle_measure("feet_distance_not_sufficient", out, b)
        assert after < before
        assert oracle_detects("feet_distance_not_sufficient", out, b)

    def test_two_patterns_compose(self, clean_corpus):
        t, b = self._clean_sample(clean_corpus, 1)
        out = inject_error(t, ErrorSpec("feet_distance_not_sufficient", 0.9), b)
        out = inject_error(out, ErrorSpec("arched_neck", 0.9), b)
        assert oracle_detects("feet_distance_not_sufficient", out, b)
        assert oracle_detects("arched_neck", out, b)

    def test_unknown_pattern_rejected(self):
        with pytest.raises(InvalidInputError):
            ErrorSpec("nonexistent_pattern", 0.5)

    def test_intensity_monotonic(self, clean_corpus):
        t, b = self._clean_sample(clean_corpus, 2)
        depths = [
            oracle_measure("too_deep", inject_error(t, ErrorSpec("too_deep", i), b), b)
            for i in (0.3, 0.6, 0.9)
        ]
        assert depths[0] < depths[1] < depths[2]

    def test_injection_keeps_feet_on_ground(self, clean_corpus):
        t, b = self._clean_sample(clean_corpus, 3)
        sk = t.skeleton
        feet = [sk.index_of("left_foot"), sk.index_of("right_foot")]
        out = inject_error(t, ErrorSpec("too_deep", 1.0), b)
        ground_before = np.minimum(*[t.positions[:, f, 1] for f in feet])
        ground_after = np.minimum(*[out.positions[:, f, 1] for f in feet])
        assert np.allclose(ground_before.min(), ground_after.min(), atol=1e-6)

    def test_clean_segmentation_survives_every_pattern(self, clean_corpus):
        t, b = self._clean_sample(clean_corpus, 4)
        for p in PATTERN_IDS:
            out = inject_error(t, ErrorSpec(p, 0.8, seed=3), b)
            seg = segment(out)  # must not raise
            assert seg.labels[-1] is SegmentLabel.WRAP_UP


class TestBoundaryTruth:
    def test_boundaries_cover_trajectories(self, small_corpus):
        for s in small_corpus.samples:
            b = small_corpus.boundary_of(s)
            assert b.n_frames == s.trajectory.n_frames
