"""
Built-in test specimens.

Every phantom is deterministic, grayscale, n×n and clamped to [0, 1].
"""

from pathlib import Path
from typing import Callable, Dict, Union

import numpy as np
from skimage import data as sk_data
from skimage.draw import disk
from skimage.transform import resize

from src.errors import ParameterError
from src.imaging import read_image
from src.layout import ImageGrid


def _resized(image: np.ndarray, n: int) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    if image.max() > 1.0:
        image = image / 255.0
    return resize(image, (n, n), order=1, mode="reflect", anti_aliasing=True)


def disc(n: int) -> np.ndarray:
    """Grey disc with a brighter off-centre inner disc."""
    out = np.zeros((n, n))
    c = (n - 1) / 2
    rr, cc = disk((c, c), 0.4 * n, shape=(n, n))
    out[rr, cc] = 0.5
    rr, cc = disk((c - 0.1 * n, c + 0.1 * n), 0.15 * n, shape=(n, n))
    out[rr, cc] = 1.0
    return out


def shepp_logan(n: int) -> np.ndarray:
    return _resized(sk_data.shepp_logan_phantom(), n)


def cameraman(n: int) -> np.ndarray:
    return _resized(sk_data.camera(), n)


def texture(n: int) -> np.ndarray:
    """Oriented sinusoids plus a few discs; no randomness."""
    yy, xx = np.mgrid[0:n, 0:n] / n
    out = 0.25 * (
        np.sin(2 * np.pi * (3 * xx + 2 * yy))
        + np.sin(2 * np.pi * (5 * xx - 4 * yy))
    ) + 0.5
    for cy, cx, r, level in ((0.3, 0.3, 0.12, 1.0), (0.7, 0.6, 0.08, 0.0), (0.25, 0.75, 0.06, 0.9)):
        rr, cc = disk((cy * n, cx * n), r * n, shape=(n, n))
        out[rr, cc] = level
    return out


PHANTOMS: Dict[str, Callable[[int], np.ndarray]] = {
    "disc": disc,
    "shepp_logan": shepp_logan,
    "cameraman": cameraman,
    "texture": texture,
}


def make_phantom(name: str, n: int) -> ImageGrid:
    """
    Build a named phantom.

    :param name: One of ``disc``, ``shepp_logan``, ``cameraman``, ``texture``
    :param n: Side length
    :return: n×n image in [0, 1]
    :rtype: ImageGrid
    :raises ParameterError: For an unknown name or n < 1

    :Example:

    >>> make_phantom("disc", 64).shape
    (64, 64)
    """
    if n < 1:
        raise ParameterError(f"Phantom size must be positive, got {n}")
    try:
        builder = PHANTOMS[name]
    except KeyError:
        raise ParameterError(f"Unknown phantom '{name}' (expected one of: {', '.join(PHANTOMS)})")
    return ImageGrid(np.clip(builder(n), 0.0, 1.0))


def load_specimen(source: Union[str, Path], n: int) -> ImageGrid:
    """
    Resolve a phantom name or image path into an n×n specimen.

    Names in :data:`PHANTOMS` win over files of the same name.

    :raises FileNotFoundError: If a path does not exist
    """
    if str(source) in PHANTOMS:
        return make_phantom(str(source), n)
    image = read_image(source)
    if image.shape != (n, n):
        image = ImageGrid(np.clip(resize(image.values, (n, n), order=1, anti_aliasing=True), 0.0, 1.0))
    return image
