"""
Oversampled unitary DFT forward model.

``F(X)`` zero-pads the specimen into the top-left corner of an m1×m2
detector grid and applies the 2-D DFT scaled by ``1/sqrt(m1*m2)``. Its
adjoint is the equally scaled inverse DFT cropped back to the specimen
region, so ``F†F`` is exactly the identity.

Transforms go through :mod:`scipy.fft`, which handles the mixed-radix sizes
non-integer oversampling produces (80, 320, 1120, ...).
"""

from typing import Optional, Tuple

import numpy as np
from scipy import fft as sp_fft

from src.errors import GeometryError
from src.layout import Layout, embed_reference_only

#: Storage convention: index 0 is the zero frequency (standard DFT order)
NORM = "ortho"


def dft(img, m1: int, m2: int) -> np.ndarray:
    """
    Zero-pad ``img`` to m1×m2 (top-left anchored) and take the unitary DFT.

    :param img: Real image (ImageGrid or array)
    :param m1: Detector rows, >= image rows
    :type m1: int
    :param m2: Detector columns, >= image columns
    :type m2: int
    :return: Complex m1×m2 field
    :rtype: np.ndarray
    :raises GeometryError: If the detector is smaller than the image

    :Example:

    >>> dft(np.array([[1.0]]), 2, 2)
    array([[0.5+0.j, 0.5+0.j],
           [0.5+0.j, 0.5+0.j]])
    """
    arr = np.asarray(img, dtype=np.float64)
    if m1 < arr.shape[0] or m2 < arr.shape[1]:
        raise GeometryError(f"Detector {m1}x{m2} smaller than image {arr.shape}")
    return sp_fft.fft2(arr, s=(m1, m2), norm=NORM)


def idft(field: np.ndarray) -> np.ndarray:
    """Unitary inverse DFT of a full detector field."""
    return sp_fft.ifft2(field, norm=NORM)


def centered_frequencies(m: int) -> np.ndarray:
    """
    Signed frequency of each storage index, in [-m/2, m/2).

    :Example:

    >>> centered_frequencies(4)
    array([ 0,  1, -2, -1])
    """
    k = np.arange(m)
    return np.where(k < (m + 1) // 2, k, k - m)


class FourierOperator:
    """
    Forward operator ``F`` for one layout geometry, plus the reference field B.

    Instances hold no mutable state after construction; the cached reference
    field is computed once and marked read-only, so one operator can serve
    concurrent evaluations.

    :param layout: Geometry and reference; the specimen is ignored
    :type layout: Layout

    :Example:

    >>> op = FourierOperator(layout)
    >>> field = op.forward(x) + op.reference_field
    >>> back = op.adjoint(field - op.reference_field)
    """

    def __init__(self, layout: Layout):
        self.layout = layout
        self.n = layout.n
        self.shape: Tuple[int, int] = layout.detector_shape

        #: B = DFT of [0 | 0 | R], computed once and frozen
        self.reference_field = dft(embed_reference_only(layout), *self.shape)
        self.reference_field.setflags(write=False)

    def forward(self, x) -> np.ndarray:
        """
        F(X): DFT of ``[X | 0 | 0]``; linear in X.

        :param x: n×n real specimen
        :return: Complex m1×m2 field
        :raises GeometryError: If X is not n×n
        """
        arr = np.asarray(x, dtype=np.float64)
        if arr.shape != (self.n, self.n):
            raise GeometryError(f"Specimen must be {self.n}x{self.n}, got {arr.shape}")
        return dft(arr, *self.shape)

    def adjoint(self, w: np.ndarray) -> np.ndarray:
        """
        Re(F†W): inverse unitary DFT cropped to the specimen block, real part.

        Satisfies ``<X, adjoint(W)> = Re<F(X), W>`` for real X.

        :param w: Complex m1×m2 field
        :return: Real n×n array
        :raises GeometryError: If W is not m1×m2
        """
        w = np.asarray(w)
        if w.shape != self.shape:
            raise GeometryError(f"Field must be {self.shape}, got {w.shape}")
        return idft(w)[: self.n, : self.n].real.copy()

    def composite_field(self, x) -> np.ndarray:
        """u = F(X) + B."""
        return self.forward(x) + self.reference_field

    def dottest(self, rng: Optional[np.random.Generator] = None) -> float:
        """
        Relative mismatch between ``Re<F x, w>`` and ``<x, F† w>``.

        Draws a random real specimen and a random complex field; a correct
        adjoint gives a value at round-off level.

        :param rng: Random generator (default: fresh unseeded)
        :return: |lhs - rhs| / max(|lhs|, |rhs|)
        :rtype: float
        """
        rng = np.random.default_rng() if rng is None else rng
        x = rng.standard_normal((self.n, self.n))
        w = rng.standard_normal(self.shape) + 1j * rng.standard_normal(self.shape)
        lhs = np.real(np.vdot(w, self.forward(x)))
        rhs = float(np.sum(x * self.adjoint(w)))
        return abs(lhs - rhs) / max(abs(lhs), abs(rhs), np.finfo(float).tiny)
