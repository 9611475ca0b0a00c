import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genusdiff.core import (
    Encounter,
    InputError,
    VisualObject,
    as_embedding,
    distance,
    pairwise_sqdist,
    segment_encounter,
)


def naive_distance(a, b):
    # independent oracle: plain sum of squared differences
    total = 0.0
    for x, y in zip(a, b):
        total += (x - y) ** 2
    return math.sqrt(total)


class TestDistance:
    def test_identity(self):
        assert distance(np.array([0.0, 0.0]), np.array([0.0, 0.0])) == 0.0

    def test_3_4_5(self):
        assert distance(np.array([0.0, 0.0]), np.array([3.0, 4.0])) == 5.0

    def test_against_naive_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            a = rng.normal(size=16)
            b = rng.normal(size=16)
            assert distance(a, b) == pytest.approx(naive_distance(a, b), abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            distance(np.array([0.0, 0.0]), np.array([1.0, 2.0, 3.0]))

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_triangle_inequality(self, seed):
        rng = np.random.default_rng(seed)
        a, b, c = rng.normal(size=(3, 8))
        assert distance(a, c) <= distance(a, b) + distance(b, c) + 1e-9

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        a, b = rng.normal(size=(2, 5))
        assert distance(a, b) == distance(b, a)


class TestPairwiseSqdist:
    def test_matches_naive(self):
        rng = np.random.default_rng(11)
        x = rng.normal(size=(6, 4))
        y = rng.normal(size=(5, 4))
        d = pairwise_sqdist(x, y)
        for i in range(6):
            for j in range(5):
                assert d[i, j] == pytest.approx(naive_distance(x[i], y[j]) ** 2, rel=1e-10, abs=1e-10)

    def test_non_negative(self):
        x = np.ones((3, 4))
        d = pairwise_sqdist(x, x)
        assert np.all(d >= 0.0)


class TestEmbeddingValidation:
    def test_rejects_nan(self):
        with pytest.raises(InputError):
            as_embedding([1.0, float("nan")])

    def test_rejects_scalar_dim(self):
        with pytest.raises(InputError):
            as_embedding([1.0])

    def test_readonly(self):
        e = as_embedding([1.0, 2.0])
        with pytest.raises(ValueError):
            e[0] = 5.0


class TestSegmentation:
    def test_identical_frames_single_segment(self):
        frames = [np.array([1.0, 2.0])] * 8
        enc = segment_encounter(frames, 0.5)
        assert len(enc.visual_objects) == 1
        assert enc.visual_objects[0].frame_span == (0, 7)

    def test_three_clusters(self):
        frames = [(0, 0), (0, 0), (5, 0), (5, 0), (10, 0), (10, 0)]
        enc = segment_encounter(frames, 1.0)
        assert len(enc.visual_objects) == 3
        centroids = [vo.embedding for vo in enc.visual_objects]
        np.testing.assert_allclose(centroids, [(0, 0), (5, 0), (10, 0)])

    def test_eight_frames_two_jumps(self):
        # an object rotated over time: three stable poses across eight frames
        base = np.zeros(4)
        frames = [base + 0.01 * i for i in range(3)]
        frames += [base + np.array([9.0, 0, 0, 0]) + 0.01 * i for i in range(3)]
        frames += [base + np.array([9.0, 9.0, 0, 0]) + 0.01 * i for i in range(2)]
        enc = segment_encounter(frames, 1.0)
        assert len(enc.visual_objects) == 3
        spans = [vo.frame_span for vo in enc.visual_objects]
        assert spans == [(0, 2), (3, 5), (6, 7)]

    def test_centroid_is_segment_mean(self):
        rng = np.random.default_rng(5)
        frames = rng.normal(size=(20, 6))
        enc = segment_encounter(frames, 1.5)
        for vo in enc.visual_objects:
            s, e = vo.frame_span
            np.testing.assert_allclose(vo.embedding, frames[s : e + 1].mean(axis=0), atol=1e-9)

    def test_infinite_threshold_single_vo(self):
        rng = np.random.default_rng(9)
        frames = rng.normal(size=(10, 3)) * 100
        enc = segment_encounter(frames, float("inf"))
        assert len(enc.visual_objects) == 1

    def test_tiny_threshold_splits_runs(self):
        frames = [(0.0, 0.0)] * 3 + [(4.0, 0.0)] * 2 + [(0.0, 0.0)] * 1
        enc = segment_encounter(frames, 1e-9)
        assert len(enc.visual_objects) == 3
        assert [vo.frame_span for vo in enc.visual_objects] == [(0, 2), (3, 4), (5, 5)]

    @given(st.integers(0, 2**32 - 1), st.floats(0.1, 10.0))
    @settings(max_examples=40, deadline=None)
    def test_partition_property(self, seed, threshold):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 30))
        frames = rng.normal(size=(n, 4)) * rng.uniform(0.1, 5)
        enc = segment_encounter(frames, threshold)
        covered = []
        for vo in enc.visual_objects:
            covered.extend(range(vo.frame_span[0], vo.frame_span[1] + 1))
        assert covered == list(range(n))

    def test_empty_frames_error(self):
        with pytest.raises(InputError):
            segment_encounter([], 1.0)

    def test_dimension_mismatch_error(self):
        with pytest.raises(InputError):
            segment_encounter([(0.0, 0.0), (1.0, 1.0, 1.0)], 1.0)

    def test_nonpositive_threshold_error(self):
        with pytest.raises(InputError):
            segment_encounter([(0.0, 0.0)], 0.0)


class TestEncounterInvariants:
    def test_empty_rejected(self):
        with pytest.raises(InputError):
            Encounter(id="e", visual_objects=())

    def test_noncontiguous_spans_rejected(self):
        vo0 = VisualObject("e/v0", as_embedding([0.0, 0.0]), (0, 1), "e")
        vo1 = VisualObject("e/v1", as_embedding([1.0, 1.0]), (3, 4), "e")
        with pytest.raises(InputError):
            Encounter(id="e", visual_objects=(vo0, vo1))

    def test_bad_span_rejected(self):
        with pytest.raises(InputError):
            VisualObject("e/v0", as_embedding([0.0, 0.0]), (2, 1), "e")
