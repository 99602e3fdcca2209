"""
Holographic reference objects.

Four kinds are supported: no reference (all zeros), a centred pinhole
disc, a filled block, and a uniformly redundant array (URA). All are
binary n×n arrays with unit amplitude and are fully deterministic.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from skimage.draw import disk
from sympy import isprime, prevprime
from sympy.functions.combinatorial.numbers import legendre_symbol

from src.errors import ParameterError
from src.layout import ImageGrid


class ReferenceKind(str, Enum):
    """Reference geometries compared in the reference sweep."""
    NONE = "none"
    PINHOLE = "pinhole"
    BLOCK = "block"
    URA = "ura"


@dataclass(frozen=True)
class ReferenceSpec:
    """
    Reference kind plus its one tunable parameter.

    :param kind: Reference geometry
    :param pinhole_radius: Disc radius in pixels (None → max(1, n // 32))
    """
    kind: ReferenceKind = ReferenceKind.URA
    pinhole_radius: Optional[int] = None

    @classmethod
    def parse(cls, kind, pinhole_radius: Optional[int] = None) -> "ReferenceSpec":
        """
        Build from a config string such as ``"ura"``.

        :raises ParameterError: For an unknown kind
        """
        try:
            return cls(ReferenceKind(str(kind).lower()), pinhole_radius)
        except ValueError:
            valid = ", ".join(k.value for k in ReferenceKind)
            raise ParameterError(f"Unknown reference kind '{kind}' (expected one of: {valid})")


def largest_twin_primes(limit: int) -> Tuple[int, int]:
    """
    Largest twin-prime pair (q, q+2) with q+2 <= limit.

    :raises ParameterError: If limit < 5

    :Example:

    >>> largest_twin_primes(64)
    (59, 61)
    """
    if limit < 5:
        raise ParameterError(f"URA needs n >= 5, got {limit}")
    upper = limit if isprime(limit) else prevprime(limit)
    while upper >= 5:
        if isprime(upper - 2):
            return upper - 2, upper
        upper = prevprime(upper)
    raise ParameterError(f"No twin primes below {limit}")


def ura_core(q: int) -> np.ndarray:
    """
    Twin-prime URA of shape q × (q+2).

    Cell (a, b) is open when b == 0, or when both coordinates are nonzero
    and the Legendre symbols of a mod q and b mod q+2 agree. Via the Chinese
    remainder theorem this is a cyclic difference set of size (v-1)/2 in
    Z_v with v = q(q+2), so every nonzero periodic shift overlaps the array
    in exactly (v-3)/4 cells.

    :param q: Smaller prime of a twin pair
    :return: Binary int array
    """
    r = q + 2
    if not (isprime(q) and isprime(r)):
        raise ParameterError(f"({q}, {r}) is not a twin-prime pair")
    chi_q = np.array([int(legendre_symbol(a, q)) if a else 0 for a in range(q)])
    chi_r = np.array([int(legendre_symbol(b, r)) if b else 0 for b in range(r)])

    core = (np.outer(chi_q, chi_r) == 1).astype(int)
    core[:, 0] = 1
    return core


def generate(spec: ReferenceSpec, n: int) -> ImageGrid:
    """
    Generate an n×n binary reference.

    - none: all zeros
    - pinhole: centred disc of ones with the configured radius
    - block: all ones
    - ura: twin-prime URA core, zero-padded top-left to n×n

    :param spec: Reference kind and radius
    :type spec: ReferenceSpec
    :param n: Reference side length
    :type n: int
    :return: Reference image with entries in {0, 1}
    :rtype: ImageGrid
    :raises ParameterError: If n < 1 or the pinhole radius is out of range

    :Example:

    >>> generate(ReferenceSpec(ReferenceKind.BLOCK), 3).values
    array([[1., 1., 1.],
           [1., 1., 1.],
           [1., 1., 1.]])
    """
    if n < 1:
        raise ParameterError(f"Reference size must be positive, got {n}")
    kind = ReferenceKind(spec.kind)
    out = np.zeros((n, n))

    if kind is ReferenceKind.BLOCK:
        out[:] = 1.0

    elif kind is ReferenceKind.PINHOLE:
        radius = max(1, n // 32) if spec.pinhole_radius is None else spec.pinhole_radius
        if not (0 < radius < n / 2):
            raise ParameterError(f"Pinhole radius must be in (0, {n / 2}), got {radius}")
        #: Centre sits on a pixel for odd n, between pixels for even n
        centre = ((n - 1) / 2, (n - 1) / 2)
        rr, cc = disk(centre, radius, shape=(n, n))
        out[rr, cc] = 1.0

    elif kind is ReferenceKind.URA:
        q, _ = largest_twin_primes(n)
        core = ura_core(q)
        out[: core.shape[0], : core.shape[1]] = core

    return ImageGrid(out)
