import numpy as np
import pytest

from triggerlab import (
    Detection,
    LatentTensor,
    Region,
    SchemaViolationError,
    ShiftedGaussianSpec,
    calibrate_null,
    detect,
    inject_patch,
    load_calibration,
    load_detections,
    map50,
    sample_noise,
    save_calibration,
    save_detections,
    synth_shifted_gaussian,
    window_score,
)
from triggerlab.detector import nms, region_iou, score_all_windows
from triggerlab.rng import derive_seed


def constant_sign_tensor(shape=(4, 24, 24), value=1.5):
    """Half +value, half -value cells: mean 0, variance value^2 exactly."""
    n = int(np.prod(shape))
    data = np.empty(n, np.float32)
    data[0::2] = value
    data[1::2] = -value
    return LatentTensor(data.reshape(shape))


class TestWindowScore:
    def test_unit_moments_zero(self):
        t = constant_sign_tensor(value=1.0)
        assert window_score(t, Region(0, 0, 24, 24)) == pytest.approx(0.0, abs=1e-9)

    def test_closed_form_std_15(self):
        t = constant_sign_tensor(value=1.5)
        expected = 2304 * (2.25 - 1.0 - np.log(2.25)) / 2.0  # = 505.808...
        got = window_score(t, Region(0, 0, 24, 24))
        assert got == pytest.approx(expected, abs=1e-9)
        assert got == pytest.approx(505.808, abs=1e-2)

    def test_strictly_increasing_in_mean_shift(self):
        base = constant_sign_tensor(value=1.0)
        scores = []
        for shift in (0.0, 0.1, 0.2, 0.4):
            t = LatentTensor(base.data + np.float32(shift))
            scores.append(window_score(t, Region(0, 0, 24, 24)))
        assert all(a < b for a, b in zip(scores, scores[1:]))

    def test_nonnegative(self):
        for seed in range(10):
            t = sample_noise(seed, (4, 32, 32))
            assert window_score(t, Region(0, 0, 24, 24)) >= 0.0

    def test_constant_slab_infinite(self):
        t = LatentTensor(np.full((4, 8, 8), 0.5, np.float32))
        assert window_score(t, Region(0, 0, 8, 8)) == np.inf


class TestScoreAllWindows:
    def test_matches_direct_scoring(self):
        t = sample_noise(5, (4, 64, 64))
        ys, xs, scores = score_all_windows(t, window=24, stride=4)
        for i in (0, 3, 10):
            for j in (0, 5, 10):
                direct = window_score(
                    t, Region(int(xs[j]), int(ys[i]), int(xs[j]) + 24, int(ys[i]) + 24)
                )
                assert scores[i, j] == pytest.approx(direct, abs=1e-9)

    def test_grid_extent(self):
        t = sample_noise(5, (4, 64, 64))
        ys, xs, scores = score_all_windows(t, window=24, stride=4)
        assert len(ys) == len(xs) == 11
        assert xs[0] == 0 and xs[-1] == 40


class TestCalibration:
    def test_quantile_table_monotone(self, calib):
        assert (np.diff(calib.scores) >= 0).all()

    def test_median_confidence_half(self, calib):
        held_out = []
        for i in range(40):
            t = sample_noise(derive_seed(777, i))
            held_out.append(score_all_windows(t, calib.window, calib.stride)[2].ravel())
        median = float(np.median(np.concatenate(held_out)))
        assert calib.confidence(median) == pytest.approx(0.5, abs=0.05)

    def test_confidence_monotone_in_score(self, calib):
        scores = np.linspace(0, 10, 50)
        conf = calib.confidence(scores)
        assert (np.diff(conf) >= 0).all()

    def test_larger_samples_shrink_quantile_variance(self):
        small, large = [], []
        for s in range(6):
            small.append(calibrate_null(n_noises=100, seed=derive_seed("cal-s", s)).score_at(0.99))
            large.append(calibrate_null(n_noises=300, seed=derive_seed("cal-l", s)).score_at(0.99))
        assert np.var(large) < np.var(small)

    def test_minimum_noises(self):
        with pytest.raises(ValueError):
            calibrate_null(n_noises=50)

    def test_round_trip(self, calib, tmp_path):
        path = tmp_path / "calib.json"
        save_calibration(path, calib)
        back = load_calibration(path)
        assert back.window == calib.window and back.stride == calib.stride
        assert np.array_equal(back.scores, calib.scores)


class TestDetect:
    def test_pure_noise_rarely_detects(self, calib):
        counts = []
        for i in range(50):
            t = sample_noise(derive_seed(888, i))
            counts.append(len(detect(t, calib, min_confidence=0.999)))
        assert max(counts) <= 5
        # pre-NMS exceedance rate should sit near the nominal 0.1%
        exceed = []
        for i in range(50):
            t = sample_noise(derive_seed(889, i))
            _, _, scores = score_all_windows(t, calib.window, calib.stride)
            exceed.append(np.mean(calib.confidence(scores) >= 0.999))
        assert 0.0 <= np.mean(exceed) <= 0.004

    def test_localizes_injected_patch(self, calib):
        hits = 0
        for s in range(20):
            t = sample_noise(derive_seed(900, s))
            patch = synth_shifted_gaussian(
                ShiftedGaussianSpec(std=1.5), (24, 24), seed=derive_seed(901, s)
            )
            noisy = inject_patch(t, patch, Region(10, 10, 34, 34))
            top = detect(noisy, calib, min_confidence=0.0)[0]
            cx, cy = top.region.center
            if ((cx - 22) ** 2 + (cy - 22) ** 2) ** 0.5 <= 4.0:
                hits += 1
        assert hits >= 18

    def test_two_disjoint_patches(self, calib):
        t = sample_noise(42)
        for corner in ((0, 0), (40, 40)):
            patch = synth_shifted_gaussian(
                ShiftedGaussianSpec(std=1.5), (24, 24), seed=corner[0]
            )
            t = inject_patch(t, patch, Region(corner[0], corner[1], corner[0] + 24, corner[1] + 24))
        dets = detect(t, calib, min_confidence=0.999, nms_iou=0.5)
        assert len(dets) >= 2
        first, second = dets[0].region, dets[1].region
        assert region_iou(first, second) < 0.5

    def test_deterministic(self, calib):
        t = sample_noise(7)
        assert detect(t, calib, 0.0) == detect(t, calib, 0.0)

    def test_sorted_by_confidence(self, calib):
        t = sample_noise(11)
        dets = detect(t, calib, min_confidence=0.0)
        confs = [d.confidence for d in dets]
        assert confs == sorted(confs, reverse=True)


class TestNms:
    def test_suppresses_at_threshold(self):
        a = Detection(Region(0, 0, 24, 24), 10.0, 0.9)
        b = Detection(Region(0, 0, 24, 24), 5.0, 0.8)  # IoU 1.0 with a
        c = Detection(Region(40, 40, 64, 64), 4.0, 0.7)
        assert nms([a, b, c], 0.5) == [a, c]

    def test_keeps_below_threshold(self):
        a = Detection(Region(0, 0, 24, 24), 10.0, 0.9)
        d = Detection(Region(16, 16, 40, 40), 3.0, 0.6)  # IoU 64/1088 ~ 0.06
        assert nms([a, d], 0.5) == [a, d]


class TestMap50:
    def test_perfect_detections(self):
        gt = {"a": [Region(0, 0, 10, 10)], "b": [Region(5, 5, 20, 20)]}
        dets = {
            nid: [Detection(r, 5.0, 0.9) for r in regions]
            for nid, regions in gt.items()
        }
        assert map50(dets, gt) == 1.0

    def test_zero_detections(self):
        gt = {"a": [Region(0, 0, 10, 10)]}
        assert map50({"a": []}, gt) == 0.0

    def test_hit_then_false_positive(self):
        # one ground truth; the confident detection overlaps at IoU 0.6,
        # a later disjoint one adds a false positive after full recall
        gt = {"a": [Region(0, 0, 10, 10)]}
        hit = Detection(Region(0, 3, 10, 13), 9.0, 0.9)  # IoU = 70/130 ~ 0.54
        assert region_iou(hit.region, Region(0, 0, 10, 10)) >= 0.5
        miss = Detection(Region(40, 40, 50, 50), 1.0, 0.5)
        assert map50({"a": [hit, miss]}, gt) == pytest.approx(1.0)

    def test_hand_scored_three_case_curve(self):
        # ranked: TP, FP, TP over 2 ground truths
        # precision (1, 1/2, 2/3), recall (1/2, 1/2, 1)
        # all-point AP = 0.5 * 1 + 0.5 * 2/3 = 5/6
        gt = {"a": [Region(0, 0, 10, 10)], "b": [Region(0, 0, 10, 10)]}
        dets = {
            "a": [
                Detection(Region(0, 0, 10, 10), 9.0, 0.9),
                Detection(Region(30, 30, 40, 40), 8.0, 0.8),
            ],
            "b": [Detection(Region(0, 2, 10, 12), 7.0, 0.7)],
        }
        assert map50(dets, gt) == pytest.approx(5 / 6, abs=1e-6)

    def test_one_gt_absorbs_one_detection(self):
        gt = {"a": [Region(0, 0, 10, 10)]}
        dets = {
            "a": [
                Detection(Region(0, 0, 10, 10), 9.0, 0.9),
                Detection(Region(0, 1, 10, 11), 8.0, 0.8),  # duplicate, counts FP
            ]
        }
        assert map50(dets, gt) == pytest.approx(1.0)  # recall hits 1 on the first


class TestDetectionsIO:
    def test_round_trip(self, tmp_path):
        dets = {
            "n1": [Detection(Region(0, 0, 24, 24), 7.5, 0.999)],
            "n0": [Detection(Region(4, 8, 28, 32), 5.0, 0.99),
                   Detection(Region(40, 40, 64, 64), 4.0, 0.98)],
        }
        path = tmp_path / "detections.json"
        save_detections(path, dets)
        back = load_detections(path)
        assert back == dets

    def test_external_schema_without_score(self, tmp_path):
        path = tmp_path / "ext.json"
        path.write_text(
            '[{"noise_id": "x", "boxes": [{"x1": 0, "y1": 0, "x2": 24, "y2": 24, '
            '"confidence": 0.7}]}]'
        )
        dets = load_detections(path)
        assert dets["x"][0].confidence == 0.7
        assert dets["x"][0].score == 0.7  # defaults to confidence

    def test_malformed_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('[{"noise_id": "x", "boxes": [{"x1": 0}]}]')
        with pytest.raises(SchemaViolationError):
            load_detections(path)
        path.write_text('{"not": "a list"}')
        with pytest.raises(SchemaViolationError):
            load_detections(path)
