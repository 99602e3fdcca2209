"""
Detector simulation: clean intensities, beamstop occlusion, Poisson shot noise.

Pipeline::

    Y  = |DFT([X | 0 | R])|^2                  (clean_intensity)
    Y' = mask ⊙ Y                              (apply_beamstop)
    Ỹ  = (Ȳ/Np) · Pois((Np/Ȳ) · Y')            (poisson_corrupt)

Ȳ is the mean of the clean, pre-beamstop intensity over every detector
pixel, so the same flux calibration applies with and without a beamstop.

Noise draws use ``numpy.random.default_rng(seed)`` (PCG64) and one call to
``Generator.poisson`` over the measured pixels taken in row-major order.
NumPy samples small means by inversion and means >= 10 by PTRS rejection,
both exact, so a (layout, Np, seed) triple always yields the same data.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union
import math
import struct

import numpy as np
import yaml

from src.errors import DataError, GeometryError, ParameterError
from src.fourier import centered_frequencies, dft
from src.layout import Layout, compose
from src.references import ReferenceSpec, generate

#: File magic for serialized measurements
MAGIC = b"HOLOML-MEASUREMENT\n"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class BeamstopMask:
    """
    Centred low-frequency occlusion.

    Pixel (i, j) is blocked when ``|f_i| < omega1`` and ``|f_j| < omega2``
    with f the signed (centred) frequency of each storage index. The blocked
    block is (2ω1-1)×(2ω2-1); ω = 0 blocks nothing.

    :param omega1: Row cutoff frequency
    :param omega2: Column cutoff frequency
    :param shape: Detector dims (m1, m2)
    """
    omega1: int
    omega2: int
    shape: Tuple[int, int]

    def __post_init__(self):
        if self.omega1 < 0 or self.omega2 < 0:
            raise ParameterError(f"Cutoffs must be nonnegative, got ({self.omega1}, {self.omega2})")
        m1, m2 = self.shape
        if 2 * self.omega1 - 1 > m1 or 2 * self.omega2 - 1 > m2:
            raise GeometryError(
                f"Beamstop cutoffs ({self.omega1}, {self.omega2}) exceed detector {m1}x{m2}"
            )

    @property
    def values(self) -> np.ndarray:
        """0/1 float array; 1 = measured."""
        f1 = np.abs(centered_frequencies(self.shape[0]))[:, None]
        f2 = np.abs(centered_frequencies(self.shape[1]))[None, :]
        blocked = (f1 < self.omega1) & (f2 < self.omega2)
        return (~blocked).astype(np.float64)

    @property
    def measured(self) -> np.ndarray:
        """Boolean view of the measured set M."""
        return self.values.astype(bool)

    @property
    def is_trivial(self) -> bool:
        return self.omega1 == 0 or self.omega2 == 0

    @property
    def block_size(self) -> int:
        """Side k of the blocked square (0 when nothing is blocked)."""
        return 0 if self.is_trivial else 2 * self.omega1 - 1

    @classmethod
    def none(cls, shape: Tuple[int, int]) -> "BeamstopMask":
        return cls(0, 0, tuple(shape))


def beamstop_from_block(k: int, shape: Tuple[int, int]) -> BeamstopMask:
    """
    Mask for a k×k beamstop (k odd, 0 = none).

    :param k: Blocked block side in pixels
    :param shape: Detector dims
    :return: Mask with ω1 = ω2 = (k+1)/2
    :raises ParameterError: For even or negative k

    :Example:

    >>> int((1 - beamstop_from_block(25, (128, 384)).values).sum())
    625
    """
    if k < 0 or (k and k % 2 == 0):
        raise ParameterError(f"Beamstop size must be 0 or an odd positive integer, got {k}")
    omega = (k + 1) // 2 if k else 0
    return BeamstopMask(omega, omega, tuple(shape))


@dataclass(frozen=True, eq=False)
class Measurement:
    """
    Everything a reconstructor may see.

    :param noisy_intensity: Ỹ, m1×m2, zero on blocked pixels
    :param mask: Beamstop mask
    :param photon_flux: Np, photons per pixel
    :param mean_intensity: Ȳ of the clean pre-beamstop data
    :param layout_meta: Geometry needed to rebuild F and B
        (n, gap_width, oversampling_x, oversampling_y, reference,
        pinhole_radius, beamstop, seed)
    """
    noisy_intensity: np.ndarray
    mask: BeamstopMask
    photon_flux: float
    mean_intensity: float
    layout_meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        y = np.array(self.noisy_intensity, dtype=np.float64, copy=True)
        if y.shape != tuple(self.mask.shape):
            raise GeometryError(f"Data shape {y.shape} does not match mask shape {self.mask.shape}")
        if not np.all(np.isfinite(y)) or np.any(y < 0):
            raise DataError("Measured intensity must be finite and nonnegative")
        y.setflags(write=False)
        object.__setattr__(self, "noisy_intensity", y)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.noisy_intensity.shape

    @property
    def measured(self) -> np.ndarray:
        return self.mask.measured

    @property
    def has_beamstop(self) -> bool:
        return not self.mask.is_trivial

    @property
    def quantum(self) -> float:
        """Intensity of one detected photon, Ȳ/Np."""
        return self.mean_intensity / self.photon_flux

    def layout(self) -> Layout:
        """Rebuild the acquisition geometry with a zero specimen."""
        meta = self.layout_meta
        n = int(meta["n"])
        reference = generate(
            ReferenceSpec.parse(meta.get("reference", "ura"), meta.get("pinhole_radius")), n
        )
        return Layout(
            specimen=np.zeros((n, n)),
            reference=reference,
            gap_width=int(meta["gap_width"]),
            oversampling_x=meta["oversampling_x"],
            oversampling_y=meta["oversampling_y"],
        )


def clean_intensity(layout: Layout) -> np.ndarray:
    """
    Noise-free diffraction intensity ``|DFT([X | 0 | R])|^2`` (unmasked).

    :param layout: Scene
    :type layout: Layout
    :return: Real m1×m2 array, all entries >= 0
    :rtype: np.ndarray
    """
    field = dft(compose(layout), *layout.detector_shape)
    return np.abs(field) ** 2


def apply_beamstop(intensity: np.ndarray, mask: BeamstopMask) -> np.ndarray:
    """
    Zero the blocked low-frequency pixels.

    :raises GeometryError: On shape mismatch
    """
    intensity = np.asarray(intensity, dtype=np.float64)
    if intensity.shape != tuple(mask.shape):
        raise GeometryError(f"Intensity shape {intensity.shape} does not match mask {mask.shape}")
    return intensity * mask.values


def poisson_corrupt(
    masked_intensity: np.ndarray,
    photon_flux: float,
    seed: int,
    mask: Optional[BeamstopMask] = None,
    mean_intensity: Optional[float] = None,
    layout_meta: Optional[Dict[str, Any]] = None,
) -> Measurement:
    """
    Apply Poisson shot noise at an average flux of ``photon_flux`` per pixel.

    For every measured pixel, ``Z ~ Pois((Np/Ȳ)·Y)`` and ``Ỹ = (Ȳ/Np)·Z``;
    blocked pixels stay zero.

    :param masked_intensity: Beamstopped clean intensity Y
    :param photon_flux: Np > 0
    :param seed: Seed for ``numpy.random.default_rng``
    :param mask: Beamstop used (None → no beamstop)
    :param mean_intensity: Ȳ of the pre-beamstop data; may be omitted (mean of
        input) only when no pixel is blocked
    :param layout_meta: Geometry passed through to the Measurement
    :return: Noisy measurement
    :rtype: Measurement
    :raises DataError: For negative or nonfinite intensity
    :raises ParameterError: For nonpositive flux, or a blocking mask without ``mean_intensity``

    :Example:

    >>> meas = poisson_corrupt(y, photon_flux=1.0, seed=7)
    >>> np.allclose(meas.noisy_intensity / meas.quantum % 1, 0)
    True
    """
    y = np.asarray(masked_intensity, dtype=np.float64)
    if not np.all(np.isfinite(y)) or np.any(y < 0):
        raise DataError("Intensity must be finite and nonnegative before adding noise")
    if not photon_flux > 0:
        raise ParameterError(f"Photon flux must be positive, got {photon_flux}")

    mask = BeamstopMask.none(y.shape) if mask is None else mask
    if mean_intensity is None and not mask.measured.all():
        raise ParameterError("mean_intensity is required with a beamstop (Ȳ is taken before masking)")
    y_bar = float(y.mean()) if mean_intensity is None else float(mean_intensity)
    if not y_bar > 0:
        raise DataError("Mean intensity must be positive (is the scene empty?)")

    measured = mask.measured
    rng = np.random.default_rng(seed)
    #: Boolean indexing walks pixels in row-major order
    counts = rng.poisson((photon_flux / y_bar) * y[measured])

    noisy = np.zeros_like(y)
    noisy[measured] = (y_bar / photon_flux) * counts

    return Measurement(
        noisy_intensity=noisy,
        mask=mask,
        photon_flux=float(photon_flux),
        mean_intensity=y_bar,
        layout_meta=dict(layout_meta or {}, seed=int(seed)),
    )


def layout_metadata(layout: Layout, reference: ReferenceSpec, beamstop: int) -> Dict[str, Any]:
    """Header fields describing the acquisition geometry."""
    return {
        "n": layout.n,
        "gap_width": layout.gap_width,
        "oversampling_x": str(layout.oversampling_x),
        "oversampling_y": str(layout.oversampling_y),
        "reference": reference.kind.value,
        "pinhole_radius": reference.pinhole_radius,
        "beamstop": int(beamstop),
    }


def simulate(
    layout: Layout,
    reference: ReferenceSpec,
    photon_flux: float,
    seed: int,
    beamstop: int = 0,
) -> Measurement:
    """
    Full data generation: clean intensity, beamstop, Poisson noise.

    :param layout: Scene (its reference must be ``generate(reference, n)``)
    :param reference: Reference description stored in the header
    :param photon_flux: Np
    :param seed: Noise seed
    :param beamstop: Odd beamstop side k (0 = none)
    :return: Measurement
    :rtype: Measurement
    """
    clean = clean_intensity(layout)
    mask = beamstop_from_block(beamstop, layout.detector_shape)
    return poisson_corrupt(
        apply_beamstop(clean, mask),
        photon_flux,
        seed,
        mask=mask,
        mean_intensity=float(clean.mean()),
        layout_meta=layout_metadata(layout, reference, beamstop),
    )


def noiseless(layout: Layout, reference: ReferenceSpec, beamstop: int = 0) -> Measurement:
    """
    Clean beamstopped intensity wrapped as a Measurement (Np = ∞).

    :param layout: Scene
    :param reference: Reference description stored in the header
    :param beamstop: Odd beamstop side k (0 = none)
    :return: Measurement with Ỹ = mask ⊙ Y exactly
    """
    clean = clean_intensity(layout)
    mask = beamstop_from_block(beamstop, layout.detector_shape)
    return Measurement(
        noisy_intensity=apply_beamstop(clean, mask),
        mask=mask,
        photon_flux=math.inf,
        mean_intensity=float(clean.mean()),
        layout_meta=layout_metadata(layout, reference, beamstop),
    )


def save_measurement(path: Union[str, Path], measurement: Measurement) -> Path:
    """
    Write a measurement as YAML header + raw little-endian float64 payload.

    Layout: magic line, 8-byte little-endian header length, UTF-8 YAML
    header, then m1·m2 doubles in row-major order.

    :param path: Output file
    :param measurement: Data to store
    :return: Path written
    """
    path = Path(path)
    header = {
        "format_version": FORMAT_VERSION,
        "shape": list(measurement.shape),
        "omega1": measurement.mask.omega1,
        "omega2": measurement.mask.omega2,
        "photon_flux": measurement.photon_flux,
        "mean_intensity": measurement.mean_intensity,
        **measurement.layout_meta,
    }
    header_bytes = yaml.safe_dump(header, sort_keys=True).encode("utf-8")
    payload = measurement.noisy_intensity.astype("<f8").tobytes(order="C")

    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<Q", len(header_bytes)))
        f.write(header_bytes)
        f.write(payload)
    return path


def load_measurement(path: Union[str, Path]) -> Measurement:
    """
    Read a file written by :func:`save_measurement`.

    :raises FileNotFoundError: If the file is missing
    :raises DataError: If the file is truncated or not a measurement
    """
    raw = Path(path).read_bytes()
    if not raw.startswith(MAGIC):
        raise DataError(f"{path} is not a holoml measurement file")
    offset = len(MAGIC)
    try:
        (header_len,) = struct.unpack_from("<Q", raw, offset)
        offset += 8
        header = yaml.safe_load(raw[offset: offset + header_len].decode("utf-8"))
        offset += header_len
        m1, m2 = header.pop("shape")
        data = np.frombuffer(raw, dtype="<f8", count=m1 * m2, offset=offset).reshape(m1, m2)
        version = header.pop("format_version", None)
        mask = BeamstopMask(int(header.pop("omega1")), int(header.pop("omega2")), (m1, m2))
        photon_flux = float(header.pop("photon_flux"))
        mean_intensity = float(header.pop("mean_intensity"))
    except (struct.error, ValueError, KeyError, TypeError, AttributeError, yaml.YAMLError) as e:
        raise DataError(f"Corrupt measurement file {path}: {e}")

    if version != FORMAT_VERSION:
        raise DataError(f"Unsupported measurement format in {path}")
    return Measurement(
        noisy_intensity=data.astype(np.float64),
        mask=mask,
        photon_flux=photon_flux,
        mean_intensity=mean_intensity,
        layout_meta=header,
    )
