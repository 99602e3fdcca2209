"""
Grayscale image import and export.
"""

from pathlib import Path
from typing import Union

import numpy as np
from skimage.color import rgb2gray, rgba2rgb
from skimage.io import imread, imsave
from skimage.util import img_as_float, img_as_ubyte, img_as_uint

from src.errors import DataError, ParameterError
from src.layout import ImageGrid


def read_image(path: Union[str, Path]) -> ImageGrid:
    """
    Read an 8/16-bit PGM, PNG or TIFF as grayscale in [0, 1].

    Integer images map their full dtype range linearly onto [0, 1]; RGB(A)
    input is converted to luminance.

    :param path: Image file
    :return: Grayscale image
    :rtype: ImageGrid
    :raises FileNotFoundError: If the file does not exist
    :raises OSError: If the file cannot be decoded
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Image not found: {path}")
    try:
        img = imread(path)
    except (OSError, ValueError) as e:
        raise OSError(f"Could not read image {path}: {e}")

    if img.ndim == 3:
        if img.shape[-1] == 4:
            img = rgba2rgb(img)
        img = rgb2gray(img)
    if img.ndim != 2:
        raise DataError(f"Expected a 2-D grayscale image in {path}, got shape {img.shape}")

    if np.issubdtype(img.dtype, np.floating):
        return ImageGrid(np.clip(img, 0.0, 1.0))
    return ImageGrid(img_as_float(img))


def write_image(path: Union[str, Path], values, bit_depth: int = 8) -> Path:
    """
    Export an image, clamped to [0, 1], as 8- or 16-bit grayscale.

    :raises ParameterError: For a bit depth other than 8 or 16
    """
    if bit_depth not in (8, 16):
        raise ParameterError(f"bit_depth must be 8 or 16, got {bit_depth}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    clamped = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    encoded = img_as_ubyte(clamped) if bit_depth == 8 else img_as_uint(clamped)
    imsave(path, encoded, check_contrast=False)
    return path


def log_preview(intensity) -> np.ndarray:
    """
    ``log10(1 + Ỹ / min positive Ỹ)`` scaled to [0, 1], zero frequency centred.
    """
    y = np.asarray(intensity, dtype=np.float64)
    positive = y[y > 0]
    if positive.size == 0:
        return np.zeros_like(y)
    scaled = np.log10(1.0 + y / positive.min())
    return np.fft.fftshift(scaled / scaled.max())


def write_log_preview(path: Union[str, Path], intensity) -> Path:
    """Save :func:`log_preview` as an 8-bit PNG."""
    return write_image(path, log_preview(intensity), bit_depth=8)
