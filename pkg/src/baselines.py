"""
Deconvolution baselines: inverse filtering and Wiener filtering.

Both read the specimen/reference cross-correlation straight out of the
data's autocorrelation and deconvolve it by the known reference:

1. ``A = IDFT(Ỹ)`` (unnormalised) is the circular autocorrelation of the
   composite ``[X | 0 | R]``.
2. The block ``(X ⋆ R)[σ]`` for ``|σ1|, |σ2| <= n-1`` sits at lag
   ``(σ1, σ2 - (n+d))``; rolling A by ``n+d`` columns and keeping that
   window gives an array E whose DFT is ``X̂ · conj(R̂)``.
3. Divide by ``conj(R̂)`` (inverse filter) or multiply by
   ``R̂ / (|R̂|² + λ)`` (Wiener), inverse-transform and crop to n×n.

The window only isolates the cross term when the gap is at least n and
the detector oversamples by two on both axes; other geometries are
refused with :class:`GeometryUnsupportedError`. Beamstopped pixels enter
as zeros.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np
from scipy import fft as sp_fft

from src.detector import Measurement
from src.errors import ConfigError, GeometryUnsupportedError
from src.fourier import centered_frequencies
from src.layout import ImageGrid, Layout


@dataclass(frozen=True)
class FilterConfig:
    """
    Tuning constants for the deconvolution baselines.

    :param epsilon_div: Division guard, relative to max |R̂|
    :param wiener_lambda: Regularisation constant, or ``"auto"`` for
        λ = (Ȳ/Np) · mean |R̂|²
    """
    epsilon_div: float = 1e-9
    wiener_lambda: Union[float, str] = "auto"

    def __post_init__(self):
        if not self.epsilon_div > 0:
            raise ConfigError(f"epsilon_div must be positive, got {self.epsilon_div}")
        lam = self.wiener_lambda
        if isinstance(lam, str):
            if lam != "auto":
                raise ConfigError(f"wiener_lambda must be a positive number or 'auto', got '{lam}'")
        elif not lam > 0:
            raise ConfigError(f"wiener_lambda must be positive, got {lam}")


def check_geometry(layout: Layout) -> None:
    """
    Refuse geometries where the cross-correlation block overlaps other terms.

    :raises GeometryUnsupportedError: If OS < 2 on either axis or d < n
    """
    for name in ("oversampling_x", "oversampling_y"):
        ratio = Fraction(str(getattr(layout, name)))
        if ratio < 2:
            raise GeometryUnsupportedError(
                f"Deconvolution baselines need an oversampling ratio of at least two "
                f"({name} = {getattr(layout, name)})"
            )
    if layout.gap_width < layout.n:
        raise GeometryUnsupportedError(
            f"Deconvolution baselines need the holographic separation condition "
            f"d >= n (d = {layout.gap_width}, n = {layout.n})"
        )
    if not np.any(layout.reference.values):
        raise GeometryUnsupportedError("Deconvolution baselines need a nonzero reference")


def cross_correlation_block(measurement: Measurement, layout: Layout) -> np.ndarray:
    """
    Extract ``X ⋆ R`` from the data autocorrelation onto the detector grid.

    :return: Real m1×m2 array, nonzero only in the |σ| <= n-1 window
    """
    n = layout.n
    m1, m2 = measurement.shape

    #: Unscaled inverse DFT: exact autocorrelation of the composite
    autocorr = sp_fft.ifft2(measurement.noisy_intensity, norm="forward").real
    shifted = np.roll(autocorr, layout.reference_offset, axis=1)

    rows = np.abs(centered_frequencies(m1)) <= n - 1
    cols = np.abs(centered_frequencies(m2)) <= n - 1
    return shifted * (rows[:, None] & cols[None, :])


def _reference_spectrum(layout: Layout, shape) -> np.ndarray:
    return sp_fft.fft2(layout.reference.values, s=shape)


def _deconvolve(spectrum: np.ndarray, n: int) -> ImageGrid:
    return ImageGrid(sp_fft.ifft2(spectrum).real[:n, :n])


def inverse_filter(
    measurement: Measurement,
    layout: Layout,
    config: FilterConfig = FilterConfig(),
) -> ImageGrid:
    """
    Reconstruct X by exact Fourier division of the cross-correlation.

    Recovers X exactly from noiseless data; does nothing against noise.

    :param measurement: Data Ỹ (blocked pixels zero)
    :param layout: Acquisition geometry with the known reference
    :param config: Division guard
    :return: n×n estimate (unclamped)
    :rtype: ImageGrid
    :raises GeometryUnsupportedError: If OS < 2, d < n or R = 0

    :Example:

    >>> x_hat = inverse_filter(noiseless, layout)
    >>> np.allclose(x_hat.values, layout.specimen.values)
    True
    """
    check_geometry(layout)
    spectrum = sp_fft.fft2(cross_correlation_block(measurement, layout))
    r_hat = _reference_spectrum(layout, measurement.shape)

    #: Keep phase, floor the magnitude of conj(R̂)
    eps = config.epsilon_div * np.abs(r_hat).max()
    denom = np.conj(r_hat)
    small = np.abs(denom) < eps
    phase = np.exp(1j * np.angle(denom[small]))
    denom[small] = eps * phase
    return _deconvolve(spectrum / denom, layout.n)


def wiener_lambda(measurement: Measurement, r_hat: np.ndarray) -> float:
    """Noise-power heuristic λ = (Ȳ/Np) · mean |R̂|²."""
    return float(measurement.quantum * np.mean(np.abs(r_hat) ** 2))


def wiener_filter(
    measurement: Measurement,
    layout: Layout,
    config: FilterConfig = FilterConfig(),
) -> ImageGrid:
    """
    Reconstruct X by regularised Fourier division ``R̂ / (|R̂|² + λ)``.

    :param measurement: Data Ỹ (blocked pixels zero)
    :param layout: Acquisition geometry with the known reference
    :param config: λ (number or "auto")
    :return: n×n estimate (unclamped)
    :rtype: ImageGrid
    :raises GeometryUnsupportedError: If OS < 2, d < n or R = 0
    """
    check_geometry(layout)
    spectrum = sp_fft.fft2(cross_correlation_block(measurement, layout))
    r_hat = _reference_spectrum(layout, measurement.shape)

    lam = config.wiener_lambda
    if lam == "auto":
        #: Noiseless data gives λ = 0; floor it like the inverse-filter guard
        floor = (config.epsilon_div * np.abs(r_hat).max()) ** 2
        lam = max(wiener_lambda(measurement, r_hat), floor)
    return _deconvolve(spectrum * r_hat / (np.abs(r_hat) ** 2 + lam), layout.n)
