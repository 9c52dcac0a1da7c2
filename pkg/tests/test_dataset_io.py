import json

import numpy as np
import pytest
from PIL import Image

from anomeval import (
    BadEncoding,
    DimensionMismatch,
    EvalError,
    HeaderMismatch,
    LabelMap,
    ScoreMap,
    UnsupportedFormat,
    dataset_stats,
    load_eval_images,
    load_label_map,
    load_manifest,
    load_mask,
    load_score_map,
    save_label_map,
    save_mask,
    save_score_map,
    save_score_map_png16,
    validate_inputs,
)


def write_manifest(tmp_path, images, track="anomaly", name="toy", extra=None):
    doc = {"name": name, "track": track, "images": images}
    if extra:
        doc.update(extra)
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(doc))
    return path


def write_labels(path, arr):
    save_label_map(path, LabelMap(np.asarray(arr, np.uint8)))


class TestLabelIO:
    def test_round_trip(self, tmp_path):
        arr = np.array([[0, 1], [255, 0]], dtype=np.uint8)
        p = tmp_path / "a.png"
        save_label_map(p, LabelMap(arr))
        got = load_label_map(p)
        assert np.array_equal(got.labels, arr)

    def test_bad_value_reports_value_and_index(self, tmp_path):
        p = tmp_path / "bad.png"
        Image.fromarray(np.array([[0, 1], [7, 0]], dtype=np.uint8), mode="L").save(p)
        with pytest.raises(BadEncoding) as ei:
            load_label_map(p)
        assert ei.value.value == 7
        assert ei.value.index == 2

    def test_rgb_rejected(self, tmp_path):
        p = tmp_path / "rgb.png"
        Image.fromarray(np.zeros((2, 2, 3), dtype=np.uint8)).save(p)
        with pytest.raises(UnsupportedFormat):
            load_label_map(p)

    def test_remap_applied_before_validation(self, tmp_path):
        p = tmp_path / "remap.png"
        Image.fromarray(np.array([[0, 128], [255, 0]], dtype=np.uint8), mode="L").save(p)
        got = load_label_map(p, remap={128: 1})
        assert got.labels[0, 1] == 1
        # without the table the 128 is a hard error
        with pytest.raises(BadEncoding):
            load_label_map(p)

    def test_remap_can_fold_void(self, tmp_path):
        p = tmp_path / "fold.png"
        Image.fromarray(np.array([[2, 0]], dtype=np.uint8), mode="L").save(p)
        got = load_label_map(p, remap={2: 255})
        assert got.labels[0, 0] == 255


class TestScoreIO:
    def test_f32_round_trip(self, tmp_path):
        arr = np.array([[0.5, -1.25], [3.75, 0.0]], dtype=np.float32)
        p = tmp_path / "s.f32"
        save_score_map(p, ScoreMap(arr))
        got = load_score_map(p)
        assert got.scores.dtype == np.float32
        assert np.array_equal(got.scores, arr)

    def test_f32_truncated_payload(self, tmp_path):
        p = tmp_path / "s.f32"
        p.write_bytes(b"\x00" * 12)  # 3 floats
        (tmp_path / "s.hdr").write_text("2 2\n")
        with pytest.raises(HeaderMismatch):
            load_score_map(p)

    def test_f32_missing_header(self, tmp_path):
        p = tmp_path / "s.f32"
        p.write_bytes(b"\x00" * 16)
        with pytest.raises(HeaderMismatch):
            load_score_map(p)

    def test_f32_garbled_header(self, tmp_path):
        p = tmp_path / "s.f32"
        p.write_bytes(b"\x00" * 16)
        (tmp_path / "s.hdr").write_text("two by two\n")
        with pytest.raises(HeaderMismatch):
            load_score_map(p)

    def test_png16_endpoints(self, tmp_path):
        arr = np.array([[0.0, 1.0], [0.5, 0.25]], dtype=np.float32)
        p = tmp_path / "s.png"
        save_score_map_png16(p, ScoreMap(arr))
        got = load_score_map(p)
        assert got.scores[0, 0] == 0.0
        assert got.scores[0, 1] == 1.0
        assert abs(got.scores[1, 0] - 0.5) < 1e-4

    def test_png8_rejected_for_scores(self, tmp_path):
        p = tmp_path / "s.png"
        Image.fromarray(np.zeros((2, 2), dtype=np.uint8), mode="L").save(p)
        with pytest.raises(UnsupportedFormat):
            load_score_map(p)

    def test_unknown_suffix(self, tmp_path):
        p = tmp_path / "s.npy"
        p.write_bytes(b"")
        with pytest.raises(UnsupportedFormat):
            load_score_map(p)


class TestMaskIO:
    def test_round_trip_and_nonzero_rule(self, tmp_path):
        p = tmp_path / "m.png"
        Image.fromarray(np.array([[0, 1], [128, 255]], dtype=np.uint8), mode="L").save(p)
        got = load_mask(p)
        assert got.tolist() == [[False, True], [True, True]]
        p2 = tmp_path / "m2.png"
        save_mask(p2, got)
        assert np.array_equal(load_mask(p2), got)


class TestManifest:
    def test_parses_fields(self, tmp_path):
        write_labels(tmp_path / "a.png", [[0, 1]])
        path = write_manifest(
            tmp_path,
            [{"id": "a", "label": "a.png", "width": 2, "height": 1, "tags": ["night"]}],
            track="obstacle",
        )
        m = load_manifest(path)
        assert m.name == "toy"
        assert m.track.value == "obstacle"
        assert m.images[0].tags == ("night",)
        assert m.label_path(m.images[0]) == tmp_path / "a.png"

    def test_duplicate_id(self, tmp_path):
        rows = [
            {"id": "a", "label": "a.png", "width": 1, "height": 1},
            {"id": "a", "label": "b.png", "width": 1, "height": 1},
        ]
        with pytest.raises(EvalError):
            load_manifest(write_manifest(tmp_path, rows), check_files=False)

    def test_unknown_track(self, tmp_path):
        path = write_manifest(tmp_path, [], track="vehicles")
        with pytest.raises(EvalError):
            load_manifest(path)

    def test_missing_field(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps({"name": "x", "track": "anomaly"}))
        with pytest.raises(EvalError):
            load_manifest(path)

    def test_missing_label_file(self, tmp_path):
        path = write_manifest(
            tmp_path, [{"id": "a", "label": "nope.png", "width": 1, "height": 1}]
        )
        with pytest.raises(FileNotFoundError):
            load_manifest(path)
        # but structural checks alone pass
        m = load_manifest(path, check_files=False)
        assert m.images[0].id == "a"

    def test_bad_remap_target(self, tmp_path):
        write_labels(tmp_path / "a.png", [[0]])
        path = write_manifest(
            tmp_path,
            [{"id": "a", "label": "a.png", "width": 1, "height": 1}],
            extra={"label_remap": {"128": 9}},
        )
        with pytest.raises(EvalError):
            load_manifest(path)


def build_dataset(tmp_path, n=2, with_scores=True, with_masks=False):
    rows = []
    scores_dir = tmp_path / "scores"
    masks_dir = tmp_path / "masks"
    scores_dir.mkdir(exist_ok=True)
    masks_dir.mkdir(exist_ok=True)
    rng = np.random.default_rng(0)
    for i in range(n):
        arr = np.zeros((6, 8), np.uint8)
        arr[1:3, 1:4] = 1
        if i == 0:
            arr[5, :] = 255
        write_labels(tmp_path / f"img{i}.png", arr)
        rows.append({"id": f"img{i}", "label": f"img{i}.png", "width": 8, "height": 6})
        if with_scores:
            save_score_map(
                scores_dir / f"img{i}.f32",
                ScoreMap(rng.random((6, 8), dtype=np.float32)),
            )
        if with_masks:
            save_mask(masks_dir / f"img{i}.png", arr == 1)
    return write_manifest(tmp_path, rows), scores_dir, masks_dir


class TestLoadEvalImages:
    def test_loads_in_manifest_order(self, tmp_path):
        manifest_path, scores_dir, _ = build_dataset(tmp_path, n=3)
        m = load_manifest(manifest_path)
        images = load_eval_images(m, scores_dir=scores_dir)
        assert [im.id for im in images] == ["img0", "img1", "img2"]
        assert all(im.scores is not None for im in images)
        assert all(im.mask is None for im in images)

    def test_threads_give_same_result(self, tmp_path):
        manifest_path, scores_dir, _ = build_dataset(tmp_path, n=4)
        m = load_manifest(manifest_path)
        seq = load_eval_images(m, scores_dir=scores_dir, threads=1)
        par = load_eval_images(m, scores_dir=scores_dir, threads=3)
        assert [im.id for im in seq] == [im.id for im in par]
        for a, b in zip(seq, par):
            assert np.array_equal(a.scores.scores, b.scores.scores)

    def test_missing_score_file(self, tmp_path):
        manifest_path, scores_dir, _ = build_dataset(tmp_path, n=2)
        (scores_dir / "img1.f32").unlink()
        (scores_dir / "img1.hdr").unlink()
        m = load_manifest(manifest_path)
        with pytest.raises(FileNotFoundError):
            load_eval_images(m, scores_dir=scores_dir)

    def test_dimension_mismatch_against_manifest(self, tmp_path):
        manifest_path, scores_dir, _ = build_dataset(tmp_path, n=1)
        save_score_map(scores_dir / "img0.f32", ScoreMap(np.zeros((3, 3), np.float32)))
        m = load_manifest(manifest_path)
        with pytest.raises(DimensionMismatch):
            load_eval_images(m, scores_dir=scores_dir)

    def test_masks_loaded_when_asked(self, tmp_path):
        manifest_path, _, masks_dir = build_dataset(tmp_path, n=2, with_masks=True)
        m = load_manifest(manifest_path)
        images = load_eval_images(m, masks_dir=masks_dir)
        assert all(im.mask is not None for im in images)
        assert images[0].mask.predicted_count == 6

    def test_f32_preferred_over_png(self, tmp_path):
        manifest_path, scores_dir, _ = build_dataset(tmp_path, n=1)
        # plant a conflicting png; the .f32 must win
        save_score_map_png16(
            scores_dir / "img0.png", ScoreMap(np.ones((6, 8), np.float32))
        )
        m = load_manifest(manifest_path)
        images = load_eval_images(m, scores_dir=scores_dir)
        assert images[0].scores.scores.max() < 1.0


class TestDatasetStats:
    def test_hand_counted_example(self, tmp_path):
        # one 10x10 image: a 2x2 anomaly block, no void
        arr = np.zeros((10, 10), np.uint8)
        arr[0:2, 0:2] = 1
        write_labels(tmp_path / "a.png", arr)
        path = write_manifest(
            tmp_path, [{"id": "a", "label": "a.png", "width": 10, "height": 10}]
        )
        stats = dataset_stats(load_manifest(path))
        assert stats.anomaly_pixel_fraction == 0.04
        assert stats.not_anomaly_pixel_fraction == 0.96
        assert stats.image_count == 1
        assert stats.gt_component_count == 1
        assert stats.mean_relative_size == 0.04
        assert stats.std_relative_size == 0.0

    def test_void_counts_in_denominator(self, tmp_path):
        arr = np.zeros((2, 4), np.uint8)
        arr[0, 0] = 1
        arr[1, :] = 255
        write_labels(tmp_path / "a.png", arr)
        path = write_manifest(
            tmp_path, [{"id": "a", "label": "a.png", "width": 4, "height": 2}]
        )
        stats = dataset_stats(load_manifest(path))
        assert stats.anomaly_pixel_fraction == 1 / 8
        assert stats.not_anomaly_pixel_fraction == 3 / 8

    def test_two_components_two_images(self, tmp_path):
        a = np.zeros((4, 4), np.uint8)
        a[0, 0] = 1
        b = np.zeros((4, 4), np.uint8)
        b[0:2, 0:2] = 1
        write_labels(tmp_path / "a.png", a)
        write_labels(tmp_path / "b.png", b)
        path = write_manifest(
            tmp_path,
            [
                {"id": "a", "label": "a.png", "width": 4, "height": 4},
                {"id": "b", "label": "b.png", "width": 4, "height": 4},
            ],
        )
        stats = dataset_stats(load_manifest(path))
        assert stats.gt_component_count == 2
        assert stats.mean_relative_size == pytest.approx((1 / 16 + 4 / 16) / 2)

    def test_deterministic(self, tmp_path):
        manifest_path, _, _ = build_dataset(tmp_path, n=3)
        m = load_manifest(manifest_path)
        assert dataset_stats(m) == dataset_stats(m)


class TestValidateInputs:
    def test_clean_submission(self, tmp_path):
        manifest_path, scores_dir, _ = build_dataset(tmp_path, n=2)
        m = load_manifest(manifest_path)
        assert validate_inputs(m, scores_dir=scores_dir) == []

    def test_missing_score_named(self, tmp_path):
        manifest_path, scores_dir, _ = build_dataset(tmp_path, n=2)
        (scores_dir / "img1.f32").unlink()
        (scores_dir / "img1.hdr").unlink()
        m = load_manifest(manifest_path)
        problems = validate_inputs(m, scores_dir=scores_dir)
        assert len(problems) == 1
        assert "img1" in problems[0]

    def test_collects_multiple_problems(self, tmp_path):
        manifest_path, scores_dir, _ = build_dataset(tmp_path, n=3)
        (scores_dir / "img0.f32").unlink()
        (scores_dir / "img0.hdr").unlink()
        save_score_map(scores_dir / "img2.f32", ScoreMap(np.zeros((2, 2), np.float32)))
        m = load_manifest(manifest_path, check_files=False)
        problems = validate_inputs(m, scores_dir=scores_dir)
        assert len(problems) == 2

    def test_unknown_mask_flagged(self, tmp_path):
        manifest_path, _, masks_dir = build_dataset(tmp_path, n=1, with_masks=True)
        save_mask(masks_dir / "stray.png", np.zeros((2, 2), bool))
        m = load_manifest(manifest_path)
        problems = validate_inputs(m, masks_dir=masks_dir)
        assert any("stray.png" in p for p in problems)

    def test_bad_label_encoding_reported_not_raised(self, tmp_path):
        manifest_path, scores_dir, _ = build_dataset(tmp_path, n=1)
        Image.fromarray(np.full((6, 8), 9, np.uint8), mode="L").save(tmp_path / "img0.png")
        m = load_manifest(manifest_path)
        problems = validate_inputs(m, scores_dir=scores_dir)
        assert len(problems) == 1
        assert "img0" in problems[0]
