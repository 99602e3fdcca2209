"""
Unit tests for metrics module.

Tests the data-space and ground-truth relative errors.
"""

import numpy as np
import pytest

from src.detector import BeamstopMask, Measurement
from src.errors import GeometryError, MetricUndefinedError
from src.fourier import FourierOperator, dft
from src.layout import compose
from src.metrics import ErrorReport, data_relative_error, error_report, truth_relative_error


@pytest.mark.unit
class TestDataRelativeError:
    """Test ‖Y(X̂) − Ỹ‖ / ‖Ỹ‖."""

    def test_truth_on_noiseless_data(self, make_problem):
        """Test zero error for the true specimen on clean data."""
        problem, layout = make_problem(n=8, beamstop=3)
        error = data_relative_error(layout.specimen, problem.measurement, problem.operator)
        assert error <= 1e-12

    def test_zero_estimate_without_reference(self, make_problem):
        """Test error 1 for X̂ = 0 when B = 0."""
        problem, _ = make_problem(n=8, reference="none", photon_flux=10.0)
        error = data_relative_error(np.zeros((8, 8)), problem.measurement, problem.operator)
        assert error == pytest.approx(1.0)

    def test_operator_rebuilt_from_header(self, make_problem):
        """Test the same value with and without an explicit operator."""
        problem, _ = make_problem(n=8, photon_flux=1.0)
        x = np.random.default_rng(0).random((8, 8))
        assert data_relative_error(x, problem.measurement) == pytest.approx(
            data_relative_error(x, problem.measurement, problem.operator), rel=1e-12)

    def test_invariant_to_circular_shift(self, make_problem):
        """Test that shifting the composite inside the padded grid leaves Y unchanged."""
        problem, layout = make_problem(n=8, photon_flux=1.0)
        composite = np.zeros(layout.detector_shape)
        composite[:8, :layout.composite_width] = compose(layout).values
        shifted = np.roll(composite, (3, 5), axis=(0, 1))

        y_shifted = np.abs(dft(shifted, *layout.detector_shape)) ** 2
        y0 = problem.measurement.noisy_intensity
        by_hand = np.linalg.norm(y_shifted - y0) / np.linalg.norm(y0)

        assert data_relative_error(layout.specimen, problem.measurement, problem.operator) == \
            pytest.approx(by_hand, rel=1e-9)

    def test_zero_data(self, make_scene):
        """Test that Ỹ ≡ 0 raises MetricUndefinedError."""
        layout, _ = make_scene(n=8)
        op = FourierOperator(layout)
        meas = Measurement(np.zeros(op.shape), BeamstopMask.none(op.shape), 1.0, 1.0)
        with pytest.raises(MetricUndefinedError):
            data_relative_error(np.zeros((8, 8)), meas, op)


@pytest.mark.unit
class TestTruthRelativeError:
    """Test ‖X̂ − X★‖ / ‖X★‖."""

    def test_reference_values(self):
        """Test 0 for the truth, 1 for zero and for twice the truth."""
        x = np.random.default_rng(1).random((4, 4))
        assert truth_relative_error(x, x) == 0.0
        assert truth_relative_error(np.zeros_like(x), x) == pytest.approx(1.0)
        assert truth_relative_error(2 * x, x) == pytest.approx(1.0)

    def test_zero_truth(self):
        """Test that an all-zero truth raises MetricUndefinedError."""
        with pytest.raises(MetricUndefinedError):
            truth_relative_error(np.ones((2, 2)), np.zeros((2, 2)))

    def test_shape_mismatch(self):
        """Test that mismatched shapes raise GeometryError."""
        with pytest.raises(GeometryError):
            truth_relative_error(np.ones((2, 2)), np.ones((3, 3)))


@pytest.mark.unit
class TestErrorReport:
    """Test the bundled report."""

    def test_with_truth(self, make_problem):
        """Test both errors and the beamstop flag."""
        problem, layout = make_problem(n=8, photon_flux=10.0, beamstop=3)
        report = error_report(layout.specimen, problem.measurement, problem.operator, layout.specimen)

        assert isinstance(report, ErrorReport)
        assert report.truth_relative_error == 0.0
        assert report.masked
        assert report.data_relative_error > 0

    def test_without_truth(self, make_problem):
        """Test a missing truth error when no ground truth is given."""
        problem, _ = make_problem(n=8, photon_flux=10.0)
        report = error_report(np.zeros((8, 8)), problem.measurement, problem.operator)

        assert report.truth_relative_error is None
        assert not report.masked
        assert set(report.as_dict()) == {"data_relative_error", "truth_relative_error", "masked"}
