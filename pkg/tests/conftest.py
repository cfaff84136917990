import numpy as np
import pytest

from formcheck.motion import Trajectory, default_skeleton
from formcheck.synth import GenConfig, generate_corpus

SKELETON = default_skeleton()
K = SKELETON.n_joints


def make_trajectory(rotations, positions=None, sample_rate=120.0,
                    subject_id="s00", sample_id="s00e00"):
    rotations = np.asarray(rotations, dtype=float)
    if positions is None:
        positions = np.zeros((rotations.shape[0], rotations.shape[1], 3))
    return Trajectory(rotations, positions, sample_rate, subject_id, sample_id, SKELETON)


def random_rotation_trajectory(rng, n_frames, subject_id="s00", sample_id="s00e00"):
    q = rng.standard_normal((n_frames, K, 4))
    q /= np.linalg.norm(q, axis=2, keepdims=True)
    return make_trajectory(q, subject_id=subject_id, sample_id=sample_id)


@pytest.fixture(scope="session")
def small_corpus():
    """12 subjects, ~24 short squats with the default error rates."""
    return generate_corpus(
        GenConfig(n_subjects=12, samples_per_subject=2, max_samples=None,
                  duration_scale=0.8, seed=101)
    )


@pytest.fixture(scope="session")
def clean_corpus():
    """All error rates zero: every sample is a correct squat."""
    return generate_corpus(
        GenConfig(n_subjects=8, samples_per_subject=2, max_samples=None,
                  duration_scale=0.8, seed=202,
                  error_rates={}, labeled_fractions={})
    )


@pytest.fixture(scope="session")
def planted_block_selection():
    """Random-probe selection on a corpus whose only class signal is a planted
    knee-flexion offset during the descent/hold window of the reference
    timeline. Returns (mask, layout, block membership per selected index)."""
    from formcheck.align import select_reference, warp_to_reference
    from formcheck.features import FeatureSet, extract_matrix
    from formcheck.learn import SelectionConfig, select_features
    from formcheck.motion import euler_from_quats, quats_from_euler
    from formcheck.segmentation import SegmentLabel, segment

    corpus = generate_corpus(
        GenConfig(n_subjects=20, samples_per_subject=2, max_samples=None,
                  seed=33, error_rates={}, labeled_fractions={})
    )
    trajs = [s.trajectory for s in corpus.samples]
    rng = np.random.default_rng(0)
    y = rng.integers(0, 2, len(trajs))
    sk = trajs[0].skeleton
    shins = [sk.index_of("left_shin"), sk.index_of("right_shin")]
    segs = [segment(t) for t in trajs]
    ref = select_reference(trajs, [g.labels for g in segs])
    ref_seg = segs[[i for i, t in enumerate(trajs) if t is ref][0]]
    warped = [warp_to_reference(t, ref) for t in trajs]
    down = ref_seg.bounds(SegmentLabel.GOING_DOWN)
    up = ref_seg.bounds(SegmentLabel.GOING_UP)
    ramp = np.zeros(ref.n_frames)
    ramp[down.start:down.end + 1] = np.linspace(0, 1, down.end + 1 - down.start)
    ramp[down.end + 1:up.start] = 1.0
    ramp[up.start:up.end + 1] = np.linspace(1, 0, up.end + 1 - up.start)
    edited = []
    for t, lab in zip(warped, y):
        if lab:
            # The signal is planted after warping, so it cannot leak into
            # other channels through alignment timing.
            ch = euler_from_quats(t.rotations)
            for j in shins:
                ch[:, j, 0] -= 0.2 * ramp
            t = Trajectory(quats_from_euler(ch), t.positions, t.sample_rate,
                           t.subject_id, t.sample_id, sk)
        edited.append(t)
    X, layout = extract_matrix(edited, FeatureSet.EULER_POSITIONS)
    mask = select_features(X, y, layout.frame_of(np.arange(layout.size)),
                           SelectionConfig(seed=5))
    in_block = []
    for i in mask.indices:
        f, j, c = layout.from_flat(int(i))
        in_block.append(j in shins and c == 0 and down.start <= f <= up.end)
    return mask, layout, np.array(in_block)
