"""
Unit tests for RMSE, R² and fold aggregation
"""

import pytest
from hypothesis import given
from hypothesis import strategies as st
from models.report import Metrics
from services.evaluation_exceptions import (
    DegenerateActualError,
    EmptyMetricInputError,
    MetricLengthMismatchError,
)
from services.metrics_service import (
    aggregate,
    compute_metrics,
    r_squared,
    rmse,
)

pytestmark = pytest.mark.unit


class TestRmse:
    """Test cases for rmse"""

    def test_identical(self):
        """Test perfect predictions"""
        assert rmse([0.2, 0.4], [0.2, 0.4]) == 0.0

    def test_hand_example(self):
        """Test a 0.001 fraction error reported as 0.1 yield points"""
        pred = [0.011, 0.021, 0.029]
        actual = [0.01, 0.02, 0.03]
        assert rmse(pred, actual) == pytest.approx(0.001)
        assert compute_metrics(pred, actual).rmse == pytest.approx(0.1)

    def test_single_element(self):
        """Test one prediction off by half"""
        assert rmse([0.5], [0.0]) * 100 == pytest.approx(50.0)

    def test_length_mismatch(self):
        """Test vectors of different lengths"""
        with pytest.raises(MetricLengthMismatchError):
            rmse([0.1, 0.2], [0.1])

    def test_empty(self):
        """Test no values"""
        with pytest.raises(EmptyMetricInputError):
            rmse([], [])


class TestRSquared:
    """Test cases for r_squared"""

    def test_perfect(self):
        """Test perfect predictions give 1"""
        assert r_squared([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 1.0

    def test_mean_predictor(self):
        """Test predicting the mean gives 0"""
        assert r_squared([2.0, 2.0, 2.0], [1.0, 2.0, 3.0]) == pytest.approx(
            0.0
        )

    def test_hand_example(self):
        """Test 1 - 0.03 / 2 = 0.985"""
        assert r_squared([1.1, 2.1, 2.9], [1.0, 2.0, 3.0]) == pytest.approx(
            0.985
        )

    def test_constant_actual(self):
        """Test zero-variance targets"""
        with pytest.raises(DegenerateActualError):
            r_squared([0.1, 0.2], [0.5, 0.5])

    def test_single_value(self):
        """Test one value is not enough"""
        with pytest.raises(DegenerateActualError):
            r_squared([0.5], [0.1])

    @given(
        st.lists(
            st.integers(0, 100).map(lambda v: v / 100),
            min_size=2,
            max_size=30,
            unique=True,
        ),
        st.floats(-0.5, 0.5),
    )
    def test_translation_invariant(self, actual, shift):
        """Test shifting predictions and targets together keeps R²"""
        pred = [a * 0.9 + 0.05 for a in actual]
        base = r_squared(pred, actual)
        moved = r_squared(
            [p + shift for p in pred], [a + shift for a in actual]
        )
        assert moved == pytest.approx(base, abs=1e-6)


class TestAggregate:
    """Test cases for aggregate"""

    def test_single_fold(self):
        """Test one fold has zero spread"""
        result = aggregate([Metrics(rmse=5.0, r2=0.9)])
        assert result.rmse_mean == 5.0
        assert result.rmse_std == 0.0
        assert result.n_folds == 1

    def test_two_folds(self):
        """Test r2 of 0.9 and 1.0 gives 0.95 ± 0.05"""
        result = aggregate(
            [Metrics(rmse=4.0, r2=0.9), Metrics(rmse=6.0, r2=1.0)]
        )
        assert result.r2_mean == pytest.approx(0.95)
        assert result.r2_std == pytest.approx(0.05)
        assert result.rmse_mean == 5.0
        assert result.rmse_std == 1.0
        assert result.rmse_text == "5.0 ± 1.0"
        assert result.r2_text == "0.950 ± 0.050"

    def test_empty(self):
        """Test aggregation over no folds"""
        with pytest.raises(EmptyMetricInputError):
            aggregate([])

    @given(
        st.lists(
            st.tuples(st.floats(0.0, 50.0), st.floats(-1.0, 1.0)),
            min_size=1,
            max_size=12,
        ),
        st.randoms(use_true_random=False),
    )
    def test_order_independent(self, values, random):
        """Test fold order never changes the aggregate"""
        folds = [Metrics(rmse=r, r2=q) for r, q in values]
        shuffled = list(folds)
        random.shuffle(shuffled)
        assert aggregate(folds) == aggregate(shuffled)
