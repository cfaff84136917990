import numpy as np
import pytest

from conftest import K, make_trajectory, random_rotation_trajectory

from formcheck.errors import InvalidInputError, StructureError
from formcheck.features import (
    FeatureLayout,
    FeatureSet,
    FeatureVector,
    Scaler,
    apply_scaler,
    extract,
    fit_scaler,
)
from formcheck.motion import Joint, Skeleton, Trajectory

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def tiny_trajectory(n_frames, n_joints):
    joints = [Joint(0, "hips", None)]
    joints += [Joint(i, f"j{i}", i - 1) for i in range(1, n_joints)]
    sk = Skeleton(tuple(joints))
    rot = np.tile(IDENTITY, (n_frames, n_joints, 1))
    return Trajectory(rot, np.zeros((n_frames, n_joints, 3)), 120.0, "s", "e", sk)


class TestExtract:
    def test_paper_scale_size(self):
        t = tiny_trajectory(902, 19)
        fv = extract(t, FeatureSet.EULER_POSITIONS)
        assert fv.values.size == 6 * 902 * 19 == 102_828

    def test_minimal_sizes(self):
        t = tiny_trajectory(1, 1)
        assert extract(t, FeatureSet.EULER_POSITIONS).values.size == 6
        assert extract(t, FeatureSet.QUATERNIONS).values.size == 4
        assert extract(t, FeatureSet.EULER).values.size == 3
        assert extract(t, FeatureSet.POSITIONS).values.size == 3

    def test_size_formula_many_shapes(self):
        for n, k in ((1, 1), (3, 2), (10, 19), (37, 5)):
            t = tiny_trajectory(n, k)
            for fs, nc in ((FeatureSet.EULER, 3), (FeatureSet.POSITIONS, 3),
                           (FeatureSet.EULER_POSITIONS, 6), (FeatureSet.QUATERNIONS, 4)):
                assert extract(t, fs).values.size == nc * n * k

    def test_ordering_frame_major_channel_innermost(self):
        rng = np.random.default_rng(0)
        t = random_rotation_trajectory(rng, 4)
        fv = extract(t, FeatureSet.EULER_POSITIONS)
        layout = fv.layout
        # position channels (3..5) of (frame, joint) must equal the stored positions
        for frame, joint in ((0, 0), (2, 5), (3, K - 1)):
            for c in range(3):
                idx = layout.to_flat(frame, joint, 3 + c)
                assert fv.values[idx] == t.positions[frame, joint, c]

    def test_index_map_round_trip_all_entries(self):
        t = tiny_trajectory(902, 19)
        layout = extract(t, FeatureSet.EULER_POSITIONS).layout
        idx = np.arange(layout.size)
        rest, channel = np.divmod(idx, layout.n_channels)
        frame, joint = np.divmod(rest, layout.n_joints)
        back = (frame * layout.n_joints + joint) * layout.n_channels + channel
        assert np.array_equal(back, idx)
        # spot-check the scalar API against the vectorized map
        im = extract(tiny_trajectory(3, 2), FeatureSet.EULER_POSITIONS).index_map
        small = FeatureLayout(3, 2, FeatureSet.EULER_POSITIONS)
        for i in range(small.size):
            f, j, c = small.from_flat(i)
            assert (f, j, c) == tuple(im[i])
            assert small.to_flat(f, j, c) == i


class TestScaler:
    def test_two_vector_population_moments(self):
        layout = FeatureLayout(1, 1, FeatureSet.EULER)
        vs = [FeatureVector(np.array([0.0, 0.0, 0.0]), layout),
              FeatureVector(np.array([2.0, 2.0, 2.0]), layout)]
        s = fit_scaler(vs)
        assert np.allclose(s.mean, 1.0)
        assert np.allclose(s.std, 1.0)  # population, not sample

    def test_constant_feature_maps_to_zero(self):
        X = np.array([[1.0, 5.0], [1.0, 7.0], [1.0, 9.0]])
        s = fit_scaler(X)
        out = s.transform(X)
        assert np.all(out[:, 0] == 0.0)
        assert np.std(out[:, 1]) == pytest.approx(1.0)

    def test_transformed_moments(self):
        rng = np.random.default_rng(1)
        X = rng.normal(3.0, 2.5, size=(40, 17))
        s = fit_scaler(X)
        out = s.transform(X)
        assert np.abs(out.mean(axis=0)).max() < 1e-9
        assert np.abs(out.std(axis=0) - 1.0).max() < 1e-9

    def test_mean_vector_maps_to_zero(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(10, 6))
        s = fit_scaler(X)
        assert np.abs(s.transform(X.mean(axis=0))).max() < 1e-12

    def test_inverse_round_trip(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(12, 9)) * 10 + 4
        s = fit_scaler(X)
        back = s.inverse_transform(s.transform(X))
        assert np.abs(back - X).max() < 1e-9

    def test_apply_scaler_on_feature_vector(self):
        layout = FeatureLayout(1, 1, FeatureSet.EULER)
        vs = [FeatureVector(np.array([0.0, 1.0, 2.0]), layout),
              FeatureVector(np.array([2.0, 3.0, 4.0]), layout)]
        s = fit_scaler(vs)
        out = apply_scaler(s, vs[0])
        assert isinstance(out, FeatureVector)
        assert np.allclose(out.values, [-1.0, -1.0, -1.0])

    def test_fit_requires_two_vectors(self):
        layout = FeatureLayout(1, 1, FeatureSet.EULER)
        with pytest.raises(InvalidInputError):
            fit_scaler([FeatureVector(np.zeros(3), layout)])

    def test_length_mismatch_rejected(self):
        with pytest.raises(StructureError):
            fit_scaler([np.zeros(3), np.zeros(4)])
        s = fit_scaler(np.random.default_rng(0).normal(size=(5, 3)))
        with pytest.raises(StructureError):
            s.transform(np.zeros(4))

    def test_subset(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(20, 8))
        s = fit_scaler(X)
        sub = s.subset([1, 5])
        assert np.allclose(sub.transform(X[:, [1, 5]]), s.transform(X)[:, [1, 5]])
