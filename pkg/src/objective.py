"""
HoloML objective: Poisson negative log-likelihood over the measured pixels.

With ``u = F(X) + B``::

    l(X) = 1/2 · Σ_M ( |u|² − Ỹ · log |u|² )
    ∇l(X) = Re F†( M ⊙ (u − Ỹ / conj(u)) )

The ``log(Ỹ!)`` term and the Np/Ȳ scale of the full likelihood are
dropped; they do not move the minimizer. Values are therefore comparable
only between evaluations on the same Problem.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from src.detector import Measurement
from src.errors import DataError, GeometryError, NumericError
from src.fourier import FourierOperator

#: Floor on |u|² inside the log and the Ỹ/conj(u) quotient
EPS = 1e-12


@dataclass(frozen=True, eq=False)
class Problem:
    """
    The tuple (Ỹ, B, M) a HoloML solver works on.

    :param measurement: Noisy data and mask
    :param operator: Forward operator for the measurement geometry
    """
    measurement: Measurement
    operator: FourierOperator

    def __post_init__(self):
        if self.operator.shape != self.measurement.shape:
            raise GeometryError(
                f"Operator dims {self.operator.shape} do not match data {self.measurement.shape}"
            )
        measured = self.measurement.measured
        if not measured.any():
            raise DataError("Beamstop blocks every detector pixel")
        #: Blocked pixels never see their data value
        data = np.where(measured, self.measurement.noisy_intensity, 0.0)
        data.setflags(write=False)
        object.__setattr__(self, "_measured", measured)
        object.__setattr__(self, "_data", data)

    @classmethod
    def from_measurement(cls, measurement: Measurement) -> "Problem":
        """Rebuild the operator (and B) from the measurement header."""
        return cls(measurement, FourierOperator(measurement.layout()))

    @property
    def n(self) -> int:
        return self.operator.n

    @property
    def reference_field(self) -> np.ndarray:
        return self.operator.reference_field

    @property
    def measured(self) -> np.ndarray:
        return self._measured

    @property
    def data(self) -> np.ndarray:
        """Ỹ with blocked pixels zeroed."""
        return self._data

    def field(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if not np.all(np.isfinite(x)):
            raise NumericError("Specimen estimate contains nonfinite values")
        return self.operator.composite_field(x)

    def nll_from_field(self, u: np.ndarray) -> float:
        abs2 = np.abs(u) ** 2
        terms = abs2 - self._data * np.log(np.maximum(abs2, EPS))
        return 0.5 * float(np.sum(terms[self._measured]))

    def grad_from_field(self, u: np.ndarray) -> np.ndarray:
        abs2 = np.abs(u) ** 2
        residual = u - self._data * u / np.maximum(abs2, EPS)
        residual[~self._measured] = 0.0
        return self.operator.adjoint(residual)


def nll(problem: Problem, x) -> float:
    """
    HoloML objective value at X.

    :param problem: Data, mask and forward operator
    :type problem: Problem
    :param x: n×n real specimen estimate
    :return: 1/2 Σ_M (|u|² − Ỹ log max(|u|², ε))
    :rtype: float
    :raises NumericError: If X is not finite

    :Example:

    >>> value = nll(problem, np.zeros((problem.n, problem.n)))
    >>> np.isfinite(value)
    True
    """
    return problem.nll_from_field(problem.field(x))


def grad(problem: Problem, x) -> np.ndarray:
    """
    Gradient of :func:`nll` with respect to X.

    :param problem: Data, mask and forward operator
    :param x: n×n real specimen estimate
    :return: n×n real gradient
    :rtype: np.ndarray
    :raises NumericError: If X is not finite
    """
    return problem.grad_from_field(problem.field(x))


def nll_and_grad(problem: Problem, x) -> Tuple[float, np.ndarray]:
    """Objective and gradient sharing one forward transform."""
    u = problem.field(x)
    return problem.nll_from_field(u), problem.grad_from_field(u)
