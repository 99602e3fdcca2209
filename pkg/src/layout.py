"""
Specimen-gap-reference geometry for holographic CDI.

The composite object is laid out as ``[X | 0 | R]``: ``n`` rows and
``2n + d`` columns, specimen first, then a zero gap of width ``d``, then
the known reference. Detector dimensions follow from the oversampling
factors along each axis.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Tuple, Union
import math

import numpy as np

from src.errors import GeometryError

Ratio = Union[int, float, str, Fraction]


def round_half_up(value: Ratio) -> int:
    """
    Round a ratio to the nearest integer, halves rounding up.

    Works on the exact decimal value so ``1.25 * 64`` never drifts.

    :param value: Number, decimal string or Fraction
    :type value: Ratio
    :return: Rounded integer
    :rtype: int

    :Example:

    >>> round_half_up(Fraction(5, 2))
    3
    >>> round_half_up("1.75")
    2
    """
    return math.floor(Fraction(str(value)) + Fraction(1, 2))


@dataclass(frozen=True, eq=False)
class ImageGrid:
    """
    Real-valued image on a rectangular pixel grid.

    The wrapped array is copied and made read-only so grids can be shared
    between threads and sweep workers.

    :param values: 2-D array of finite intensities
    """
    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64, copy=True)
        if arr.ndim != 2 or 0 in arr.shape:
            raise GeometryError(f"Image must be a non-empty 2-D array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise GeometryError("Image contains nonfinite values")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True, eq=False)
class Layout:
    """
    The ground-truth scene: specimen, gap, reference and oversampling.

    :param specimen: n×n specimen image X
    :param reference: n×n reference image R
    :param gap_width: Zero columns d between specimen and reference (None → n)
    :param oversampling_x: Detector/object ratio along rows (m1 = OSx·n)
    :param oversampling_y: Detector/object ratio along columns (m2 = OSy·(2n+d))
    :raises GeometryError: If sizes or ratios are inconsistent

    :Example:

    >>> lay = Layout(ImageGrid(np.ones((4, 4))), ImageGrid(np.zeros((4, 4))))
    >>> lay.composite_shape, lay.detector_shape
    ((4, 12), (8, 24))
    """
    specimen: ImageGrid
    reference: ImageGrid
    gap_width: int = None
    oversampling_x: Ratio = 2
    oversampling_y: Ratio = 2
    detector_shape: Tuple[int, int] = field(init=False)

    def __post_init__(self):
        if not isinstance(self.specimen, ImageGrid):
            object.__setattr__(self, "specimen", ImageGrid(self.specimen))
        if not isinstance(self.reference, ImageGrid):
            object.__setattr__(self, "reference", ImageGrid(self.reference))

        n_rows, n_cols = self.specimen.shape
        if n_rows != n_cols:
            raise GeometryError(f"Specimen must be square, got {self.specimen.shape}")
        if self.reference.shape != self.specimen.shape:
            raise GeometryError(
                f"Reference shape {self.reference.shape} does not match "
                f"specimen shape {self.specimen.shape}"
            )

        #: Default separation is one specimen width
        gap = n_rows if self.gap_width is None else self.gap_width
        if int(gap) != gap or gap < 0:
            raise GeometryError(f"Gap width must be a nonnegative integer, got {gap}")
        object.__setattr__(self, "gap_width", int(gap))

        for name in ("oversampling_x", "oversampling_y"):
            ratio = Fraction(str(getattr(self, name)))
            if ratio < 1:
                raise GeometryError(f"{name} must be >= 1, got {getattr(self, name)}")

        m1 = round_half_up(Fraction(str(self.oversampling_x)) * self.n)
        m2 = round_half_up(Fraction(str(self.oversampling_y)) * self.composite_width)
        if m1 < self.n or m2 < self.composite_width:
            raise GeometryError(f"Detector {m1}x{m2} smaller than composite {self.composite_shape}")
        object.__setattr__(self, "detector_shape", (m1, m2))

    @property
    def n(self) -> int:
        return self.specimen.n_rows

    @property
    def composite_width(self) -> int:
        return 2 * self.n + self.gap_width

    @property
    def composite_shape(self) -> Tuple[int, int]:
        return self.n, self.composite_width

    @property
    def reference_offset(self) -> int:
        """First column occupied by the reference."""
        return self.n + self.gap_width


def _place(layout: Layout, specimen: np.ndarray, reference: np.ndarray) -> ImageGrid:
    n = layout.n
    out = np.zeros(layout.composite_shape)
    out[:, :n] = specimen
    out[:, layout.reference_offset:] = reference
    return ImageGrid(out)


def compose(layout: Layout) -> ImageGrid:
    """
    Assemble the composite object ``[X | 0 | R]``.

    :param layout: Scene geometry and contents
    :type layout: Layout
    :return: n × (2n+d) composite image
    :rtype: ImageGrid

    :Example:

    >>> lay = Layout(ImageGrid([[2.0]]), ImageGrid([[3.0]]), gap_width=1)
    >>> compose(lay).values
    array([[2., 0., 3.]])
    """
    return _place(layout, layout.specimen.values, layout.reference.values)


def embed_specimen_only(layout: Layout) -> ImageGrid:
    """Composite with the reference zeroed: ``[X | 0 | 0]``."""
    return _place(layout, layout.specimen.values, 0.0)


def embed_reference_only(layout: Layout) -> ImageGrid:
    """Composite with the specimen zeroed: ``[0 | 0 | R]``."""
    return _place(layout, 0.0, layout.reference.values)
