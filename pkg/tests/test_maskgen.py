import numpy as np
import pytest

from anomeval import (
    DimensionMismatch,
    LabelMap,
    ScoreMap,
    Track,
    TrackConfig,
    UnknownImage,
    generate_masks,
    masks_from_external,
    single_mask,
)

from support import random_pair, stamp_rect

ANOM_CFG = TrackConfig(track=Track.ANOMALY)
OBST_CFG = TrackConfig(track=Track.OBSTACLE)
RAW_CFG = TrackConfig(track=Track.ANOMALY, min_component_size=0)


def pair_from(labels, scores):
    return LabelMap(np.asarray(labels, np.uint8)), ScoreMap(np.asarray(scores, np.float64))


class TestSingleMask:
    def test_threshold_is_inclusive(self):
        labels, scores = pair_from([[0, 0, 0]], [[0.4, 0.5, 0.6]])
        pred = single_mask(labels, scores, 0.5, RAW_CFG)
        assert list(pred[0]) == [False, True, True]

    def test_all_below_gives_empty(self):
        labels, scores = pair_from([[1, 0]], [[0.1, 0.2]])
        assert not single_mask(labels, scores, 0.5, RAW_CFG).any()

    def test_void_never_predicted(self):
        labels, scores = pair_from([[255, 1, 0]], [[9.9, 9.9, 9.9]])
        pred = single_mask(labels, scores, 0.5, RAW_CFG)
        assert list(pred[0]) == [False, True, True]

    def test_void_clips_components_rather_than_dropping(self):
        # a blob half-covered by void keeps its non-void half
        labels = np.zeros((4, 4), np.uint8)
        labels[:2, :] = 255
        scores = np.full((4, 4), 1.0)
        pred = single_mask(LabelMap(labels), ScoreMap(scores), 0.5, RAW_CFG)
        assert pred.sum() == 8
        assert not pred[:2, :].any()

    def test_anomaly_track_filters_small_blobs(self):
        scores = np.zeros((40, 40))
        stamp_rect(scores, 0, 0, 30, 20, 1.0)  # 600 px, survives
        stamp_rect(scores, 35, 35, 4, 5, 1.0)  # 20 px, dropped
        labels = np.zeros((40, 40), np.uint8)
        pred = single_mask(LabelMap(labels), ScoreMap(scores), 0.5, ANOM_CFG)
        assert pred.sum() == 600
        assert not pred[35:, 35:].any()

    def test_obstacle_track_keeps_exactly_fifty(self):
        scores = np.zeros((10, 20))
        stamp_rect(scores, 0, 0, 5, 10, 1.0)  # exactly 50 px
        labels = np.zeros((10, 20), np.uint8)
        pred = single_mask(LabelMap(labels), ScoreMap(scores), 0.5, OBST_CFG)
        assert pred.sum() == 50

    def test_obstacle_track_drops_fortynine(self):
        scores = np.zeros((10, 20))
        stamp_rect(scores, 0, 0, 7, 7, 1.0)  # 49 px
        labels = np.zeros((10, 20), np.uint8)
        pred = single_mask(LabelMap(labels), ScoreMap(scores), 0.5, OBST_CFG)
        assert pred.sum() == 0

    def test_no_filter_is_pure_thresholding(self):
        rng = np.random.default_rng(2)
        labels, scores = random_pair(rng, 20, 20)
        cfg = TrackConfig(track=Track.ANOMALY, filtering=False)
        pred = single_mask(labels, scores, 0.5, cfg)
        want = (scores.scores >= 0.5) & (labels.labels != 255)
        assert np.array_equal(pred, want)

    def test_raising_delta_never_adds_pixels(self):
        rng = np.random.default_rng(8)
        cfg = TrackConfig(track=Track.OBSTACLE)  # min size 50, filtering on
        for _ in range(10):
            labels, scores = random_pair(rng, 32, 32)
            deltas = sorted(rng.random(4))
            prev = None
            for d in reversed(deltas):  # high to low
                cur = single_mask(labels, scores, d, cfg)
                if prev is not None:
                    assert not (prev & ~cur).any()  # prev subset of cur
                prev = cur


class TestGenerateMasks:
    def test_bundle_records_settings(self):
        rng = np.random.default_rng(4)
        pairs = [random_pair(rng, 8, 8) for _ in range(3)]
        bundle = generate_masks(pairs, 0.25, OBST_CFG)
        assert len(bundle.masks) == 3
        assert bundle.delta_used == 0.25
        assert bundle.filtered is True
        assert bundle.min_size_used == 50

    def test_rejects_non_finite_delta(self):
        with pytest.raises(ValueError):
            generate_masks([], float("nan"), RAW_CFG)
        with pytest.raises(ValueError):
            generate_masks([], float("inf"), RAW_CFG)

    def test_masks_align_with_pairs(self):
        labels_a, scores_a = pair_from([[1, 0]], [[0.9, 0.1]])
        labels_b, scores_b = pair_from([[0, 1]], [[0.8, 0.2]])
        bundle = generate_masks(
            [(labels_a, scores_a), (labels_b, scores_b)], 0.5, RAW_CFG
        )
        assert list(bundle.masks[0].mask[0]) == [True, False]
        assert list(bundle.masks[1].mask[0]) == [True, False]


class TestExternalMasks:
    def test_verbatim_passthrough(self):
        labels = LabelMap(np.zeros((3, 3), np.uint8))
        grid = np.zeros((3, 3), bool)
        grid[0, 0] = True  # size-1 blob must NOT be filtered away
        bundle = masks_from_external([("a", labels)], {"a": grid})
        assert bundle.masks[0].predicted_count == 1
        assert bundle.delta_used is None
        assert bundle.filtered is False
        assert bundle.void_cleared == 0

    def test_void_predictions_cleared_and_counted(self):
        arr = np.zeros((3, 3), np.uint8)
        arr[1, 1] = 255
        labels = LabelMap(arr)
        grid = np.ones((3, 3), bool)
        bundle = masks_from_external([("a", labels)], {"a": grid})
        assert bundle.void_cleared == 1
        assert bundle.masks[0].mask[1, 1] == np.False_
        assert bundle.masks[0].predicted_count == 8

    def test_unknown_mask_id(self):
        labels = LabelMap(np.zeros((2, 2), np.uint8))
        with pytest.raises(UnknownImage):
            masks_from_external([("a", labels)], {"a": np.zeros((2, 2), bool), "b": np.zeros((2, 2), bool)})

    def test_missing_mask(self):
        labels = LabelMap(np.zeros((2, 2), np.uint8))
        with pytest.raises(UnknownImage):
            masks_from_external([("a", labels)], {})

    def test_dimension_mismatch(self):
        labels = LabelMap(np.zeros((2, 2), np.uint8))
        with pytest.raises(DimensionMismatch):
            masks_from_external([("a", labels)], {"a": np.zeros((2, 3), bool)})

    def test_order_follows_images(self):
        la = LabelMap(np.zeros((1, 2), np.uint8))
        lb = LabelMap(np.zeros((1, 2), np.uint8))
        ma = np.array([[True, False]])
        mb = np.array([[False, True]])
        bundle = masks_from_external([("a", la), ("b", lb)], {"b": mb, "a": ma})
        assert np.array_equal(bundle.masks[0].mask, ma)
        assert np.array_equal(bundle.masks[1].mask, mb)
