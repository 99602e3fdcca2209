"""
Reconstruction error metrics.

The data-space error compares the intensity a reconstruction predicts with
the measured data and is the figure of merit reported everywhere. The
ground-truth error needs the true specimen and so only exists in
simulation; it is reported next to the data-space error as an extra
diagnostic.
"""

from dataclasses import dataclass, asdict
from typing import Any, Dict, Optional

import numpy as np

from src.detector import Measurement
from src.errors import GeometryError, MetricUndefinedError
from src.fourier import FourierOperator


@dataclass(frozen=True)
class ErrorReport:
    """
    Errors for one reconstruction.

    :param data_relative_error: ‖Y(X̂) − Ỹ‖_F / ‖Ỹ‖_F
    :param truth_relative_error: ‖X̂ − X★‖_F / ‖X★‖_F (simulation only)
    :param masked: Whether the data carried a beamstop
    """
    data_relative_error: float
    truth_relative_error: Optional[float] = None
    masked: bool = False

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


def predicted_intensity(x_hat, measurement: Measurement, operator: FourierOperator) -> np.ndarray:
    """``mask ⊙ |F(X̂) + B|²`` on the measurement's detector grid."""
    return measurement.mask.values * np.abs(operator.composite_field(x_hat)) ** 2


def data_relative_error(
    x_hat,
    measurement: Measurement,
    operator: Optional[FourierOperator] = None,
) -> float:
    """
    Relative Frobenius misfit between predicted and measured intensity.

    :param x_hat: n×n reconstruction
    :param measurement: Measured data Ỹ and mask
    :type measurement: Measurement
    :param operator: Forward operator (None → rebuilt from the measurement)
    :return: ‖mask ⊙ |F(X̂)+B|² − Ỹ‖_F / ‖Ỹ‖_F
    :rtype: float
    :raises MetricUndefinedError: If Ỹ is identically zero

    :Example:

    >>> data_relative_error(np.zeros((n, n)), meas_without_reference)
    1.0
    """
    operator = FourierOperator(measurement.layout()) if operator is None else operator
    if operator.shape != measurement.shape:
        raise GeometryError(f"Operator dims {operator.shape} do not match data {measurement.shape}")

    y0 = measurement.noisy_intensity
    denom = np.linalg.norm(y0)
    if denom == 0:
        raise MetricUndefinedError("Measured data is identically zero")
    return float(np.linalg.norm(predicted_intensity(x_hat, measurement, operator) - y0) / denom)


def truth_relative_error(x_hat, x_true) -> float:
    """
    Relative Frobenius distance to the ground truth.

    :raises GeometryError: On shape mismatch
    :raises MetricUndefinedError: If the ground truth is all zeros

    :Example:

    >>> truth_relative_error(2 * x, x)
    1.0
    """
    x_hat = np.asarray(x_hat, dtype=np.float64)
    x_true = np.asarray(x_true, dtype=np.float64)
    if x_hat.shape != x_true.shape:
        raise GeometryError(f"Shapes differ: {x_hat.shape} vs {x_true.shape}")
    denom = np.linalg.norm(x_true)
    if denom == 0:
        raise MetricUndefinedError("Ground truth is identically zero")
    return float(np.linalg.norm(x_hat - x_true) / denom)


def error_report(
    x_hat,
    measurement: Measurement,
    operator: Optional[FourierOperator] = None,
    x_true=None,
) -> ErrorReport:
    """Bundle both errors; the truth error is None without a ground truth."""
    truth = None if x_true is None else truth_relative_error(x_hat, x_true)
    return ErrorReport(
        data_relative_error=data_relative_error(x_hat, measurement, operator),
        truth_relative_error=truth,
        masked=measurement.has_beamstop,
    )
