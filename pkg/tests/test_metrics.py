"""Overlap, distance, and success-rule metrics."""

import numpy as np
import pytest

import oracles
from habdf import (
    ApproachSummary,
    BoundingBox,
    ContractViolationError,
    FrameEval,
    gt_distance,
    jaccard,
    success,
    summarize,
)


class TestJaccard:
    def test_identical_boxes(self):
        b = BoundingBox(10.0, 20.0, 30.0, 40.0)
        assert jaccard(b, b) == 1.0

    def test_disjoint_boxes(self):
        a = BoundingBox(0.0, 0.0, 10.0, 10.0)
        b = BoundingBox(100.0, 0.0, 10.0, 10.0)
        assert jaccard(a, b) == 0.0

    def test_unit_offset_two_by_two(self):
        a = BoundingBox(0.0, 0.0, 2.0, 2.0)
        b = BoundingBox(1.0, 0.0, 2.0, 2.0)
        assert jaccard(a, b) == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_zero_area_union_defined_as_zero(self):
        a = BoundingBox(0.0, 0.0, 0.0, 0.0)
        assert jaccard(a, a) == 0.0

    def test_nested_boxes(self):
        outer = BoundingBox(0.0, 0.0, 10.0, 10.0)
        inner = BoundingBox(0.0, 0.0, 5.0, 5.0)
        assert jaccard(outer, inner) == pytest.approx(0.25, abs=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            a = BoundingBox(*rng.uniform(0, 50, 2), *rng.uniform(1, 30, 2))
            b = BoundingBox(*rng.uniform(0, 50, 2), *rng.uniform(1, 30, 2))
            assert jaccard(a, b) == pytest.approx(jaccard(b, a), abs=1e-15)

    def test_translating_away_never_increases_overlap(self):
        a = BoundingBox(0.0, 0.0, 20.0, 20.0)
        prev = 1.0
        for shift in np.linspace(0.0, 25.0, 26):
            j = jaccard(a, BoundingBox(shift, 0.0, 20.0, 20.0))
            assert j <= prev + 1e-12
            prev = j

    def test_matches_rasterization_oracle(self):
        rng = np.random.default_rng(8)
        for _ in range(300):
            a = (int(rng.integers(-20, 21)), int(rng.integers(-20, 21)),
                 2 * int(rng.integers(1, 16)), 2 * int(rng.integers(1, 16)))
            b = (int(rng.integers(-20, 21)), int(rng.integers(-20, 21)),
                 2 * int(rng.integers(1, 16)), 2 * int(rng.integers(1, 16)))
            want = oracles.raster_jaccard(a, b)
            assert jaccard(BoundingBox(*map(float, a)), BoundingBox(*map(float, b))) \
                == pytest.approx(want, abs=1e-9)


class TestGtDistance:
    def test_zero_at_truth(self):
        b = BoundingBox(5.0, 5.0, 10.0, 10.0)
        assert gt_distance(b, b) == 0.0

    def test_three_four_size_offset(self):
        a = BoundingBox(0.0, 0.0, 3.0, 4.0)
        gt = BoundingBox(0.0, 0.0, 0.0, 0.0)
        assert gt_distance(a, gt) == pytest.approx(5.0, abs=1e-12)

    def test_matches_arithmetic_oracle(self):
        rng = np.random.default_rng(14)
        for _ in range(100):
            a = rng.uniform(0, 100, 4)
            b = rng.uniform(0, 100, 4)
            want = float(np.sqrt(np.sum((a - b) ** 2)))
            assert gt_distance(a, b) == pytest.approx(want, abs=1e-12)


class TestSuccess:
    def test_boundaries_are_inclusive(self):
        assert success(0.5, 50.0) is True
        assert success(0.5, 0.0) is True
        assert success(1.0, 50.0) is True

    def test_either_failure_fails(self):
        assert success(0.49, 0.0) is False
        assert success(1.0, 51.0) is False
        assert success(0.49, 51.0) is False

    def test_custom_thresholds(self):
        assert success(0.3, 80.0, j_min=0.25, d_max=100.0) is True

    def test_domain_checks(self):
        with pytest.raises(ContractViolationError):
            success(1.5, 0.0)
        with pytest.raises(ContractViolationError):
            success(0.5, -1.0)


class TestSummarize:
    def test_all_success_run(self):
        evals = [FrameEval(t, 0.9, 5.0, True) for t in range(10)]
        rows = summarize({"fused": evals})
        assert rows[0].success_rate == 1.0
        assert rows[0].frames == 10

    def test_empty_input_is_an_error(self):
        with pytest.raises(ContractViolationError):
            summarize({})
        with pytest.raises(ContractViolationError):
            summarize({"fused": []})

    def test_mixed_run_matches_hand_averages(self):
        evals = [
            FrameEval(0, 0.8, 10.0, True),
            FrameEval(1, 0.6, 20.0, True),
            FrameEval(2, 0.2, 90.0, False),
            FrameEval(3, 0.4, 40.0, False),
        ]
        rows = summarize({"fused": evals, "raw": evals[:2]})
        by_name = {r.approach: r for r in rows}
        fused = by_name["fused"]
        assert fused.mean_jaccard == pytest.approx((0.8 + 0.6 + 0.2 + 0.4) / 4, abs=1e-12)
        assert fused.mean_distance == pytest.approx(40.0, abs=1e-12)
        assert fused.success_rate == pytest.approx(0.5, abs=1e-12)
        assert by_name["raw"].success_rate == 1.0

    def test_row_type(self):
        rows = summarize({"a": [FrameEval(0, 1.0, 0.0, True)]})
        assert isinstance(rows[0], ApproachSummary)


class TestFrameEvalContract:
    def test_rejects_out_of_range(self):
        with pytest.raises(ContractViolationError):
            FrameEval(0, 1.2, 0.0, True)
        with pytest.raises(ContractViolationError):
            FrameEval(0, 0.5, -2.0, True)
