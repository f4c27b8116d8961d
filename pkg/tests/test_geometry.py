import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dropkit.geometry import (
    BBox,
    Point,
    boxes_to_array,
    center,
    from_measurement,
    iou,
    iou_matrix,
    to_measurement,
)
from helpers import raster_iou

finite_coord = st.floats(-1e3, 1e3, allow_nan=False)
positive_size = st.floats(0.1, 500.0, allow_nan=False)
boxes = st.builds(BBox, finite_coord, finite_coord, positive_size, positive_size)


class TestBBox:
    def test_rejects_degenerate(self):
        with pytest.raises(ValueError):
            BBox(0, 0, 0, 10)
        with pytest.raises(ValueError):
            BBox(0, 0, 10, -1)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            BBox(float("nan"), 0, 1, 1)
        with pytest.raises(ValueError):
            BBox(0, float("inf"), 1, 1)

    def test_point_rejects_non_finite(self):
        with pytest.raises(ValueError):
            Point(float("nan"), 0.0)


class TestIou:
    def test_identical_boxes(self):
        b = BBox(0, 0, 10, 10)
        assert iou(b, b) == 1.0

    def test_disjoint_boxes(self):
        assert iou(BBox(0, 0, 10, 10), BBox(20, 20, 5, 5)) == 0.0

    def test_third_overlap_matches_raster_oracle(self):
        a, b = BBox(0, 0, 2, 2), BBox(1, 0, 2, 2)
        expected = raster_iou(a, b, cells_per_unit=1)  # exact on integer boxes
        assert expected == pytest.approx(1 / 3, abs=1e-12)
        assert iou(a, b) == pytest.approx(expected, abs=1e-12)

    def test_touching_boxes_have_zero_overlap(self):
        assert iou(BBox(0, 0, 10, 10), BBox(10, 0, 10, 10)) == 0.0

    @given(boxes, boxes)
    def test_symmetry_and_range(self, a, b):
        v = iou(a, b)
        assert v == iou(b, a)
        assert 0.0 <= v <= 1.0

    @given(boxes)
    def test_self_iou_is_one(self, b):
        assert iou(b, b) == 1.0

    @given(boxes, boxes, st.floats(0.01, 100.0))
    def test_scale_invariance(self, a, b, s):
        scaled_a = BBox(a.x * s, a.y * s, a.w * s, a.h * s)
        scaled_b = BBox(b.x * s, b.y * s, b.w * s, b.h * s)
        assert iou(scaled_a, scaled_b) == pytest.approx(iou(a, b), abs=1e-12)

    def test_matches_raster_oracle_on_integer_boxes(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            a = BBox(*rng.integers(-20, 20, 2), *rng.integers(1, 25, 2))
            b = BBox(*rng.integers(-20, 20, 2), *rng.integers(1, 25, 2))
            assert iou(a, b) == pytest.approx(raster_iou(a, b), abs=1e-6)


class TestCenter:
    @pytest.mark.parametrize(
        "box,expected",
        [
            (BBox(0, 0, 10, 10), (5, 5)),
            (BBox(2, 4, 6, 8), (5, 8)),
            (BBox(-3, -3, 6, 6), (0, 0)),
        ],
    )
    def test_known_centers(self, box, expected):
        c = center(box)
        assert (c.cx, c.cy) == expected


class TestMeasurementForm:
    def test_known_values(self):
        assert tuple(to_measurement(BBox(0, 0, 4, 2))) == (2, 1, 2, 2)
        assert tuple(to_measurement(BBox(10, 10, 5, 5))) == (12.5, 12.5, 1, 5)

    @given(boxes)
    def test_round_trip(self, b):
        back = from_measurement(to_measurement(b))
        for name in ("x", "y", "w", "h"):
            assert getattr(back, name) == pytest.approx(
                getattr(b, name), abs=1e-9, rel=1e-12
            )


class TestIouMatrix:
    def test_matches_scalar_iou(self):
        rng = np.random.default_rng(7)
        a = [BBox(*rng.uniform(0, 50, 2), *rng.uniform(1, 30, 2)) for _ in range(6)]
        b = [BBox(*rng.uniform(0, 50, 2), *rng.uniform(1, 30, 2)) for _ in range(4)]
        mat = iou_matrix(boxes_to_array(a), boxes_to_array(b))
        for i, box_a in enumerate(a):
            for j, box_b in enumerate(b):
                assert mat[i, j] == pytest.approx(iou(box_a, box_b), abs=1e-12)

    def test_empty_input_shape(self):
        assert boxes_to_array([]).shape == (0, 4)
