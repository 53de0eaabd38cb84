import numpy as np
import pytest

from triggerlab import (
    BBoxAnnotation,
    EmptyInputError,
    InteractionLabel,
    Region,
    WrongSpaceError,
    classify_interaction,
    heatmap,
    injection_success,
    isr,
    judge_position,
    random_center_baseline,
    trigger_entropy,
)
from triggerlab.metrics import coverage, entropy_of_centers


def lbox(x1, y1, x2, y2, score=0.9, pid="p"):
    return BBoxAnnotation(x1, y1, x2, y2, class_name="bear", score=score,
                          prompt_id=pid, space="latent")


def boxes_from_centers(centers, half=2.0):
    return [lbox(cx - half, cy - half, cx + half, cy + half) for cx, cy in centers]


def brute_force_entropy(centers):
    """Independent oracle: direct population variances of the centers."""
    xs = [c[0] for c in centers]
    ys = [c[1] for c in centers]
    n = len(centers)
    mx = sum(xs) / n
    my = sum(ys) / n
    return 0.5 * (sum((x - mx) ** 2 for x in xs) / n + sum((y - my) ** 2 for y in ys) / n)


class TestTriggerEntropy:
    def test_identical_centers_zero(self):
        report = trigger_entropy(boxes_from_centers([(10, 10)] * 3))
        assert report.entropy == 0.0
        assert report.n == 3

    def test_two_centers(self):
        # centers (0,0) and (2,0): popvar_x = 1, popvar_y = 0
        report = trigger_entropy(boxes_from_centers([(0, 0), (2, 0)]))
        assert report.entropy == pytest.approx(0.5, abs=1e-12)

    def test_four_corners(self):
        report = trigger_entropy(boxes_from_centers([(0, 0), (0, 4), (4, 0), (4, 4)]))
        assert report.entropy == pytest.approx(4.0, abs=1e-12)

    def test_against_brute_force(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = int(rng.integers(1, 30))
            centers = [(float(a), float(b)) for a, b in rng.uniform(0, 64, (n, 2))]
            got = trigger_entropy(boxes_from_centers(centers)).entropy
            assert got == pytest.approx(brute_force_entropy(centers), abs=1e-9)

    def test_translation_invariance(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            n = int(rng.integers(1, 20))
            coords = rng.integers(0, 40, (n, 2)).astype(float)
            base = boxes_from_centers([tuple(c) for c in coords])
            dx, dy = int(rng.integers(-10, 10)), int(rng.integers(-10, 10))
            shifted = boxes_from_centers([(c[0] + dx, c[1] + dy) for c in coords])
            assert trigger_entropy(base).entropy == trigger_entropy(shifted).entropy

    def test_resize_invariance(self):
        centers = [(10, 12), (30, 8), (40, 40)]
        small = boxes_from_centers(centers, half=1.0)
        large = boxes_from_centers(centers, half=5.0)
        assert trigger_entropy(small).entropy == trigger_entropy(large).entropy

    def test_empty_and_space_errors(self):
        with pytest.raises(EmptyInputError):
            trigger_entropy([])
        img = BBoxAnnotation(0, 0, 8, 8, "bear", 0.9, "p", space="image")
        with pytest.raises(WrongSpaceError):
            trigger_entropy([img])


class TestRandomCenterBaseline:
    def test_monte_carlo_mean_matches_simulation_oracle(self):
        # oracle: direct simulation of 25 four-number boxes over [0, 512)
        rng = np.random.default_rng(7)
        sims = []
        for _ in range(4000):
            draws = rng.uniform(0, 512, (25, 4))
            sims.append(brute_force_entropy(
                list(zip((draws[:, 0] + draws[:, 1]) / 2, (draws[:, 2] + draws[:, 3]) / 2))
            ))
        oracle_mean = float(np.mean(sims))
        # analytic: per-axis center variance range^2/24, popvar factor (n-1)/n
        analytic = (24 / 25) * 512**2 / 24
        assert abs(oracle_mean - analytic) / analytic < 0.05

        reports = random_center_baseline(n_sets=25, coord_range=512.0, seed=3, n_trials=10_000)
        mean_h = float(np.mean([r.entropy for r in reports]))
        assert abs(mean_h - analytic) / analytic < 0.05

    def test_seed_determinism(self):
        a = random_center_baseline(25, 512.0, seed=5, n_trials=3)
        b = random_center_baseline(25, 512.0, seed=5, n_trials=3)
        assert [r.entropy for r in a] == [r.entropy for r in b]

    def test_minimum_boxes(self):
        reports = random_center_baseline(n_sets=2, coord_range=64.0, seed=0)
        assert reports[0].entropy >= 0.0
        with pytest.raises(ValueError):
            random_center_baseline(n_sets=1, coord_range=64.0, seed=0)


class TestInjectionSuccess:
    R = Region(10, 10, 34, 34)

    def test_containment(self):
        assert injection_success(self.R, lbox(0, 0, 40, 40)) is True
        assert coverage(self.R, lbox(0, 0, 40, 40)) == 1.0

    def test_half_coverage_fails(self):
        det = lbox(10, 10, 22, 34)
        assert coverage(self.R, det) == pytest.approx(288 / 576)
        assert injection_success(self.R, det) is False

    def test_seven_eighths_coverage_succeeds(self):
        det = lbox(10, 10, 31, 34)
        assert coverage(self.R, det) == pytest.approx(21 * 24 / 576)
        assert injection_success(self.R, det) is True

    def test_monotone_in_detected_box(self):
        det = lbox(12, 12, 30, 30)
        grown = lbox(11, 11, 32, 32)
        if injection_success(self.R, det):
            assert injection_success(self.R, grown)
        assert coverage(self.R, grown) >= coverage(self.R, det)

    def test_wrong_space(self):
        img = BBoxAnnotation(0, 0, 40, 40, "bear", 0.9, "p", space="image")
        with pytest.raises(WrongSpaceError):
            injection_success(self.R, img)


class TestIsr:
    R = Region(10, 10, 34, 34)

    def test_all_success(self):
        cases = [(self.R, lbox(0, 0, 40, 40))] * 5
        assert isr(cases) == 1.0

    def test_all_misses(self):
        cases = [(self.R, None)] * 4
        assert isr(cases) == 0.0

    def test_89_of_200(self):
        hit = (self.R, lbox(0, 0, 40, 40))
        miss = (self.R, None)
        assert isr([hit] * 89 + [miss] * 111) == pytest.approx(0.445)

    def test_empty(self):
        with pytest.raises(EmptyInputError):
            isr([])

    def test_matches_brute_force_count(self):
        rng = np.random.default_rng(3)
        cases = []
        for _ in range(100):
            if rng.random() < 0.2:
                cases.append((self.R, None))
            else:
                x1, y1 = rng.uniform(0, 30, 2)
                cases.append((self.R, lbox(x1, y1, x1 + rng.uniform(5, 30), y1 + rng.uniform(5, 30))))
        expected = sum(
            1 for r, d in cases if d is not None and coverage(r, d) >= 0.75
        ) / len(cases)
        assert isr(cases) == pytest.approx(expected, abs=1e-12)


class TestHeatmap:
    def test_full_frame(self):
        grid = heatmap([lbox(0, 0, 16, 16)], 16, 16)
        assert (grid == 1.0).all()

    def test_two_disjoint(self):
        grid = heatmap([lbox(0, 0, 4, 4), lbox(8, 8, 12, 12)], 16, 16)
        assert grid[0, 0] == 0.5 and grid[9, 9] == 0.5
        assert grid[6, 6] == 0.0
        assert grid.min() >= 0.0 and grid.max() <= 1.0

    def test_sum_is_mean_covered_cells(self):
        rng = np.random.default_rng(5)
        boxes = []
        covered_counts = []
        for _ in range(20):
            x1, y1 = rng.integers(0, 50, 2)
            w, h = rng.integers(1, 14, 2)
            boxes.append(lbox(int(x1), int(y1), int(x1 + w), int(y1 + h)))
            covered_counts.append(int(w * h))
        grid = heatmap(boxes, 64, 64)
        assert grid.sum() == pytest.approx(np.mean(covered_counts), abs=1e-9)

    def test_duplicated_list_same_heatmap(self):
        boxes = [lbox(0, 0, 4, 4), lbox(8, 8, 12, 12)]
        a = heatmap(boxes, 16, 16)
        b = heatmap(boxes * 3, 16, 16)
        assert np.allclose(a, b)

    def test_empty(self):
        with pytest.raises(EmptyInputError):
            heatmap([], 16, 16)


class TestJudgePosition:
    def test_left(self):
        assert judge_position(lbox(8, 0, 12, 10), "left", 64) is True
        assert judge_position(lbox(8, 0, 12, 10), "right", 64) is False

    def test_exact_middle_fails_both(self):
        b = lbox(28, 0, 36, 10)  # center x = 32 of width 64
        assert judge_position(b, "left", 64) is False
        assert judge_position(b, "right", 64) is False


class TestClassifyInteraction:
    def test_contradicted(self):
        label = classify_interaction([lbox(2, 10, 20, 30)], "right", 64)
        assert label is InteractionLabel.CONTRADICTED

    def test_aligned(self):
        label = classify_interaction([lbox(40, 10, 58, 30)], "right", 64)
        assert label is InteractionLabel.ALIGNED

    def test_duplicated(self):
        label = classify_interaction(
            [lbox(2, 10, 20, 30), lbox(44, 10, 62, 30)], "left", 64
        )
        assert label is InteractionLabel.DUPLICATED

    def test_full_frame_hard_to_judge(self):
        label = classify_interaction([lbox(0, 0, 64, 64)], "left", 64)
        assert label is InteractionLabel.HARD_TO_JUDGE

    def test_center_strip_hard_to_judge(self):
        label = classify_interaction([lbox(28, 10, 37, 30)], "left", 64)
        assert label is InteractionLabel.HARD_TO_JUDGE

    def test_no_boxes(self):
        assert classify_interaction([], "left", 64) is InteractionLabel.HARD_TO_JUDGE


def test_entropy_of_centers_matches_numpy_var():
    rng = np.random.default_rng(11)
    xs = rng.uniform(0, 64, 17)
    ys = rng.uniform(0, 64, 17)
    got = entropy_of_centers(xs, ys).entropy
    assert got == pytest.approx(0.5 * (np.var(xs) + np.var(ys)), abs=1e-9)
