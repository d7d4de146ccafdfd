import numpy as np
import pytest

from langseg.masks import random_mask
from langseg.metrics import (
    EmptySequence,
    EvalReport,
    LengthMismatch,
    build_report,
    contour_f,
    default_tolerance,
    grouped_report,
    jf_instance,
    mean_iou,
    overall_iou,
    precision_at,
    region_j,
    score_instance,
)


def brute_force_boundary(mask):
    """Independent 4-adjacency boundary used as the oracle for contour F."""
    h, w = mask.shape
    out = np.zeros_like(mask)
    for y in range(h):
        for x in range(w):
            if not mask[y, x]:
                continue
            if y in (0, h - 1) or x in (0, w - 1):
                out[y, x] = True
                continue
            out[y, x] = not (
                mask[y - 1, x] and mask[y + 1, x] and mask[y, x - 1] and mask[y, x + 1]
            )
    return out


def brute_force_f_at_zero(pred, gt):
    """Exact-pixel boundary F-measure, computed by direct counting."""
    bp = brute_force_boundary(pred)
    bg = brute_force_boundary(gt)
    n_p, n_g = bp.sum(), bg.sum()
    if n_p == 0 and n_g == 0:
        return 1.0
    if n_p == 0 or n_g == 0:
        return 0.0
    p = (bp & bg).sum() / n_p
    r = (bg & bp).sum() / n_g
    if p + r == 0:
        return 0.0
    return 2 * p * r / (p + r)


class TestRegionJ:
    def test_identical(self):
        m = random_mask(np.random.default_rng(0), 6, 6)
        assert region_j(m, m) == 1.0

    def test_disjoint(self):
        a = np.zeros((4, 4), dtype=bool)
        a[0] = True
        b = np.zeros((4, 4), dtype=bool)
        b[2] = True
        assert region_j(a, b) == 0.0

    def test_third(self):
        a = np.array([[1, 1], [0, 0]], dtype=bool)
        b = np.array([[0, 1], [0, 1]], dtype=bool)
        assert region_j(a, b) == pytest.approx(1 / 3)


class TestContourF:
    def test_identical_any_tolerance(self):
        m = random_mask(np.random.default_rng(1), 10, 10, p=0.3)
        for tol in (0, 1, 3):
            assert contour_f(m, m, tol) == 1.0

    def test_empty_pred_nonempty_gt(self):
        gt = np.ones((5, 5), dtype=bool)
        assert contour_f(np.zeros((5, 5), dtype=bool), gt, 1) == 0.0

    def test_both_empty(self):
        z = np.zeros((5, 5), dtype=bool)
        assert contour_f(z, z, 2) == 1.0

    def test_tolerance_zero_matches_bruteforce(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            pred = random_mask(rng, 16, 16, p=float(rng.uniform(0.1, 0.9)))
            gt = random_mask(rng, 16, 16, p=float(rng.uniform(0.1, 0.9)))
            assert contour_f(pred, gt, 0) == pytest.approx(
                brute_force_f_at_zero(pred, gt), abs=1e-9
            )

    def test_symmetric(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            a = random_mask(rng, 12, 12)
            b = random_mask(rng, 12, 12)
            tol = int(rng.integers(0, 3))
            assert contour_f(a, b, tol) == pytest.approx(contour_f(b, a, tol))

    def test_monotone_in_tolerance(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            a = random_mask(rng, 14, 14, p=0.2)
            b = random_mask(rng, 14, 14, p=0.2)
            scores = [contour_f(a, b, tol) for tol in range(5)]
            assert all(s1 >= s0 - 1e-12 for s0, s1 in zip(scores, scores[1:]))

    def test_shape_mismatch(self):
        with pytest.raises(LengthMismatch):
            contour_f(np.zeros((2, 2), dtype=bool), np.zeros((3, 3), dtype=bool), 1)


class TestDefaultTolerance:
    def test_small_image_floor(self):
        assert default_tolerance(16, 16) == 1

    def test_scales_with_diagonal(self):
        # 480x854 diagonal is ~979.6 pixels; 0.8% of that rounds up to 8
        assert default_tolerance(480, 854) == 8


class TestJfInstance:
    def test_single_perfect_frame(self):
        m = np.ones((4, 4), dtype=bool)
        score = jf_instance([m], [m], 1)
        assert score.jf == 1.0

    def test_two_frame_arithmetic(self):
        good = np.ones((4, 4), dtype=bool)
        bad = np.zeros((4, 4), dtype=bool)
        score = jf_instance([good, bad], [good, good], 1)
        assert score.mean_j == pytest.approx(0.5)
        assert score.mean_f == pytest.approx(0.5)
        assert score.jf == pytest.approx(0.5)

    def test_matches_per_frame_recomputation(self):
        rng = np.random.default_rng(5)
        preds = [random_mask(rng, 8, 8) for _ in range(3)]
        gts = [random_mask(rng, 8, 8) for _ in range(3)]
        score = jf_instance(preds, gts, 1)
        js = [region_j(p, g) for p, g in zip(preds, gts)]
        fs = [contour_f(p, g, 1) for p, g in zip(preds, gts)]
        assert score.mean_j == pytest.approx(np.mean(js))
        assert score.mean_f == pytest.approx(np.mean(fs))
        assert score.jf == pytest.approx((np.mean(js) + np.mean(fs)) / 2, abs=1e-12)

    def test_length_mismatch(self):
        m = np.ones((2, 2), dtype=bool)
        with pytest.raises(LengthMismatch):
            jf_instance([m, m], [m], 1)

    def test_empty_sequence(self):
        with pytest.raises(EmptySequence):
            jf_instance([], [], 1)


class TestOverallIou:
    def test_single_perfect_pair(self):
        m = np.ones((3, 3), dtype=bool)
        assert overall_iou([(m, m)]) == 1.0

    def test_pooled_counting(self):
        # pair 1: intersection 1, union 3; pair 2: intersection 3, union 3
        a1 = np.array([[1, 1], [0, 0]], dtype=bool)
        b1 = np.array([[0, 1], [0, 1]], dtype=bool)
        m2 = np.array([[1, 1], [1, 0]], dtype=bool)
        assert overall_iou([(a1, b1), (m2, m2)]) == pytest.approx(4 / 6)

    def test_all_disjoint(self):
        a = np.array([[1, 0]], dtype=bool)
        b = np.array([[0, 1]], dtype=bool)
        assert overall_iou([(a, b), (a, b)]) == 0.0

    def test_empty_sequence(self):
        with pytest.raises(EmptySequence):
            overall_iou([])

    def test_matches_pooled_oracle(self):
        rng = np.random.default_rng(6)
        pairs = [(random_mask(rng, 8, 8), random_mask(rng, 8, 8)) for _ in range(10)]
        inter = sum(int((p & g).sum()) for p, g in pairs)
        union = sum(int((p | g).sum()) for p, g in pairs)
        assert overall_iou(pairs) == pytest.approx(inter / union)


class TestMeanIou:
    def test_single_instance(self):
        a = np.array([[1, 1], [0, 0]], dtype=bool)
        b = np.array([[0, 1], [0, 1]], dtype=bool)
        assert mean_iou([(a, b)], ["x"]) == pytest.approx(1 / 3)

    def test_two_instances_average(self):
        m = np.ones((2, 2), dtype=bool)
        z = np.zeros((2, 2), dtype=bool)
        assert mean_iou([(m, m), (z, m)], ["a", "b"]) == pytest.approx(0.5)

    def test_mixed_frame_counts_matches_oracle(self):
        rng = np.random.default_rng(7)
        pairs = []
        ids = []
        for iid, n_frames in (("a", 1), ("b", 3), ("c", 2)):
            for _ in range(n_frames):
                pairs.append((random_mask(rng, 6, 6), random_mask(rng, 6, 6)))
                ids.append(iid)
        # explicit per-instance pooling oracle
        expected = []
        for iid in ("a", "b", "c"):
            inter = sum(int((p & g).sum()) for (p, g), i in zip(pairs, ids) if i == iid)
            union = sum(int((p | g).sum()) for (p, g), i in zip(pairs, ids) if i == iid)
            expected.append(inter / union)
        assert mean_iou(pairs, ids) == pytest.approx(np.mean(expected))


class TestPrecisionAt:
    def test_all_above(self):
        assert precision_at([1.0, 1.0], [0.5]) == {0.5: 1.0}

    def test_half_above(self):
        assert precision_at([0.6, 0.4], [0.5]) == {0.5: 0.5}

    def test_direct_count(self):
        result = precision_at([0.91, 0.6, 0.2], [0.5, 0.9])
        assert result[0.5] == pytest.approx(2 / 3)
        assert result[0.9] == pytest.approx(1 / 3)

    def test_strictly_greater(self):
        assert precision_at([0.5], [0.5]) == {0.5: 0.0}

    def test_monotone_in_threshold(self):
        rng = np.random.default_rng(8)
        ious = rng.random(50).tolist()
        result = precision_at(ious, [0.1, 0.3, 0.5, 0.7, 0.9])
        values = [result[k] for k in sorted(result)]
        assert all(v1 <= v0 for v0, v1 in zip(values, values[1:]))

    def test_empty_list(self):
        with pytest.raises(EmptySequence):
            precision_at([], [0.5])

    def test_bad_threshold(self):
        with pytest.raises(ValueError):
            precision_at([0.5], [1.0])


def make_result(rng, iid, n_frames=2):
    preds = [random_mask(rng, 8, 8) for _ in range(n_frames)]
    gts = [random_mask(rng, 8, 8) for _ in range(n_frames)]
    return score_instance(iid, preds, gts, tolerance=1)


class TestReports:
    def test_jf_composition_exact(self):
        rng = np.random.default_rng(9)
        report = build_report([make_result(rng, f"i{k}") for k in range(10)])
        for score in report.per_instance.values():
            assert abs(score.jf - (score.mean_j + score.mean_f) / 2) <= 1e-12

    def test_single_group_equals_top(self):
        rng = np.random.default_rng(10)
        results = [make_result(rng, f"i{k}") for k in range(5)]
        report = grouped_report(results, lambda r: ["all"])
        assert report.groups["all"].to_json() == build_report(results).to_json()

    def test_empty_group_omitted(self):
        rng = np.random.default_rng(11)
        results = [make_result(rng, f"i{k}") for k in range(3)]
        report = grouped_report(results, lambda r: [])
        assert report.groups == {}

    def test_partition_counts_sum(self):
        rng = np.random.default_rng(12)
        results = [make_result(rng, f"i{k}") for k in range(9)]
        labels = {r.instance_id: ("trivial" if k % 2 else "non_trivial") for k, r in enumerate(results)}
        report = grouped_report(results, lambda r: [labels[r.instance_id]])
        total = sum(len(sub.per_instance) for sub in report.groups.values())
        assert total == len(results)

    def test_multi_membership(self):
        rng = np.random.default_rng(13)
        results = [make_result(rng, f"i{k}") for k in range(4)]
        report = grouped_report(results, lambda r: ["+App", "+Loc"])
        assert len(report.groups["+App"].per_instance) == 4
        assert len(report.groups["+Loc"].per_instance) == 4

    def test_json_round_trip(self):
        rng = np.random.default_rng(14)
        results = [make_result(rng, f"i{k}") for k in range(4)]
        report = grouped_report(results, lambda r: ["g1" if r.iou > 0.1 else "g2"])
        restored = EvalReport.from_json(report.to_json())
        assert restored.to_json() == report.to_json()
        restored.validate()
