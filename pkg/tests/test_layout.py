"""
Unit tests for layout module.

Tests composite assembly and detector sizing.
"""

import numpy as np
import pytest

from src.errors import GeometryError
from src.layout import (
    ImageGrid, Layout, compose, embed_reference_only, embed_specimen_only, round_half_up,
)


@pytest.mark.unit
class TestImageGrid:
    """Test the read-only image container."""

    def test_values_are_read_only_copy(self):
        """Test that the grid copies its input and freezes it."""
        source = np.ones((3, 3))
        grid = ImageGrid(source)
        source[0, 0] = 5.0

        assert grid.values[0, 0] == 1.0
        with pytest.raises(ValueError):
            grid.values[0, 0] = 2.0

    def test_rejects_nonfinite(self):
        """Test that NaN entries are refused."""
        with pytest.raises(GeometryError):
            ImageGrid([[0.0, np.nan]])

    def test_rejects_wrong_rank(self):
        """Test that 1-D input is refused."""
        with pytest.raises(GeometryError):
            ImageGrid(np.ones(4))


@pytest.mark.unit
class TestLayout:
    """Test geometry validation and derived sizes."""

    def test_default_geometry(self):
        """Test default gap d = n and oversampling 2 on both axes."""
        layout = Layout(np.zeros((64, 64)), np.zeros((64, 64)))

        assert layout.gap_width == 64
        assert layout.composite_shape == (64, 192)
        assert layout.detector_shape == (128, 384)
        assert layout.reference_offset == 128

    def test_fractional_oversampling_rounds_half_up(self):
        """Test that m = round_half_up(OS · size)."""
        layout = Layout(np.zeros((5, 5)), np.zeros((5, 5)), gap_width=0,
                        oversampling_x=1.5, oversampling_y=1.25)

        #: 7.5 → 8 and 12.5 → 13
        assert layout.detector_shape == (8, 13)

    def test_round_half_up(self):
        """Test that halves round away from zero, not to even."""
        assert round_half_up(2.5) == 3
        assert round_half_up(3.5) == 4
        assert round_half_up(2.4) == 2

    def test_non_square_specimen(self):
        """Test that a rectangular specimen is refused."""
        with pytest.raises(GeometryError):
            Layout(np.zeros((4, 5)), np.zeros((4, 5)))

    def test_mismatched_reference(self):
        """Test that the reference must match the specimen."""
        with pytest.raises(GeometryError):
            Layout(np.zeros((4, 4)), np.zeros((3, 3)))

    @pytest.mark.parametrize("gap", [-1, 2.5])
    def test_invalid_gap(self, gap):
        """Test that negative or fractional gaps are refused."""
        with pytest.raises(GeometryError):
            Layout(np.zeros((4, 4)), np.zeros((4, 4)), gap_width=gap)

    def test_undersampled_detector(self):
        """Test that OS < 1 is refused."""
        with pytest.raises(GeometryError):
            Layout(np.zeros((4, 4)), np.zeros((4, 4)), oversampling_x=0.5)


@pytest.mark.unit
class TestCompose:
    """Test composite assembly [X | 0 | R]."""

    def test_zero_gap(self):
        """Test that d = 0 places the reference right after the specimen."""
        layout = Layout([[1.0]], [[2.0]], gap_width=0, oversampling_x=1, oversampling_y=1)
        assert compose(layout).values.tolist() == [[1.0, 2.0]]

    def test_gap_is_zero(self):
        """Test that the gap columns are zero and blocks land in place."""
        x = np.arange(9.0).reshape(3, 3)
        r = np.full((3, 3), 7.0)
        composite = compose(Layout(x, r, gap_width=2)).values

        assert composite.shape == (3, 8)
        assert np.array_equal(composite[:, :3], x)
        assert np.all(composite[:, 3:5] == 0)
        assert np.array_equal(composite[:, 5:], r)

    def test_partial_embeddings_add_up(self):
        """Test that the specimen-only and reference-only parts sum to the composite."""
        rng = np.random.default_rng(3)
        layout = Layout(rng.random((4, 4)), rng.random((4, 4)), gap_width=1)

        total = embed_specimen_only(layout).values + embed_reference_only(layout).values
        assert np.array_equal(total, compose(layout).values)
