"""
Configuration management for HoloML experiments.

Loads and validates the YAML run configuration shared by ``simulate``,
``reconstruct`` and ``sweep``.
"""

from dataclasses import asdict, dataclass, field, fields, replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import yaml

from src.baselines import FilterConfig
from src.errors import ConfigError
from src.layout import round_half_up
from src.references import ReferenceKind
from src.solvers import SolverConfig

SOLVER_NAMES = ("cg", "admm", "inverse", "wiener")
RUN_CONFIG_NAME = "run-config.yaml"

Gap = Union[int, str, None]
Oversampling = Tuple[float, float]


def parse_gap(gap: Gap, n: int) -> int:
    """
    Resolve a gap entry to a pixel count.

    ``None`` means d = n; strings such as ``"0.25n"`` are fractions of n,
    rounded half up.

    :raises ConfigError: For unparseable or negative gaps

    :Example:

    >>> parse_gap("0.25n", 64)
    16
    >>> parse_gap(None, 64)
    64
    """
    if gap is None:
        return n
    try:
        if isinstance(gap, str):
            text = gap.strip()
            if text.endswith("n"):
                value = round_half_up(Fraction(text[:-1] or "1") * n)
            else:
                value = int(text)
        else:
            value = int(gap)
            if value != gap:
                raise ValueError
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"Invalid gap '{gap}' (expected an integer, null or a fraction like '0.25n')")
    if value < 0:
        raise ConfigError(f"Gap must be nonnegative, got {gap}")
    return value


def parse_oversampling(entry) -> Oversampling:
    """
    Normalize an oversampling entry to an (x, y) pair.

    :raises ConfigError: If a ratio is below 1 or the entry is malformed
    """
    if isinstance(entry, (list, tuple)):
        if len(entry) != 2:
            raise ConfigError(f"Oversampling must be a number or an [x, y] pair, got {entry}")
        pair = tuple(entry)
    else:
        pair = (entry, entry)
    try:
        pair = tuple(float(v) for v in pair)
    except (TypeError, ValueError):
        raise ConfigError(f"Oversampling ratios must be numbers, got {entry}")
    if min(pair) < 1:
        raise ConfigError(f"Oversampling ratios must be at least 1, got {entry}")
    return pair


@dataclass
class RunConfig:
    """
    Full description of a reproducible run.

    Singular fields describe one acquisition; the plural fields are sweep
    axes and fall back to the singular value when empty.

    :param image: Phantom name or image path
    :param phantoms: Sweep axis over specimens
    :param n: Specimen side length
    :param reference: Reference kind (none, pinhole, block, ura)
    :param references: Sweep axis over reference kinds
    :param pinhole_radius: Pinhole radius in pixels (None → max(1, n // 32))
    :param gap: Gap width d (None → n, or "0.25n" style)
    :param gaps: Sweep axis over gaps
    :param oversampling: (x, y) oversampling ratios
    :param oversamplings: Sweep axis over oversampling ratios
    :param beamstop: Odd beamstop block size k (0 = none)
    :param beamstops: Sweep axis over beamstop sizes
    :param photon_flux: Photon flux values Np
    :param solvers: Methods to run
    :param seed: Master seed
    :param workers: Parallel sweep processes
    :param solver: SolverConfig overrides
    :param filter: FilterConfig overrides
    :param output: Output directory
    """
    image: str = "shepp_logan"
    phantoms: List[str] = field(default_factory=list)
    n: int = 64
    reference: str = "ura"
    references: List[str] = field(default_factory=list)
    pinhole_radius: Optional[int] = None
    gap: Gap = None
    gaps: List[Gap] = field(default_factory=list)
    oversampling: Oversampling = (2.0, 2.0)
    oversamplings: List[Oversampling] = field(default_factory=list)
    beamstop: int = 0
    beamstops: List[int] = field(default_factory=list)
    photon_flux: List[float] = field(default_factory=lambda: [1.0])
    solvers: List[str] = field(default_factory=lambda: list(SOLVER_NAMES))
    seed: int = 0
    workers: int = 1
    solver: Dict[str, Any] = field(default_factory=dict)
    filter: Dict[str, Any] = field(default_factory=dict)
    output: Path = Path("./results")

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ConfigError(f"n must be a positive integer, got {self.n}")
        for kind in [self.reference, *self.references]:
            if kind not in {k.value for k in ReferenceKind}:
                raise ConfigError(f"Unknown reference '{kind}'")
        if self.pinhole_radius is not None and self.pinhole_radius < 1:
            raise ConfigError(f"pinhole_radius must be positive, got {self.pinhole_radius}")
        for gap in [self.gap, *self.gaps]:
            parse_gap(gap, self.n)

        self.oversampling = parse_oversampling(self.oversampling)
        self.oversamplings = [parse_oversampling(v) for v in self.oversamplings]

        for k in [self.beamstop, *self.beamstops]:
            if not isinstance(k, int) or k < 0 or (k and k % 2 == 0):
                raise ConfigError(f"Beamstop must be 0 or an odd positive integer, got {k}")

        if isinstance(self.photon_flux, (int, float)):
            self.photon_flux = [self.photon_flux]
        if not self.photon_flux or any(not float(v) > 0 for v in self.photon_flux):
            raise ConfigError(f"photon_flux must be a nonempty list of positive values, got {self.photon_flux}")
        self.photon_flux = [float(v) for v in self.photon_flux]

        unknown = [s for s in self.solvers if s not in SOLVER_NAMES]
        if not self.solvers or unknown:
            raise ConfigError(
                f"solvers must be a nonempty subset of {', '.join(SOLVER_NAMES)}, got {self.solvers}"
            )
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError(f"workers must be an integer >= 1, got {self.workers}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed must be a nonnegative integer, got {self.seed}")
        self.output = Path(self.output)

    @property
    def image_axis(self) -> List[str]:
        return list(self.phantoms) or [self.image]

    @property
    def reference_axis(self) -> List[str]:
        return list(self.references) or [self.reference]

    @property
    def gap_axis(self) -> List[int]:
        return [parse_gap(g, self.n) for g in (self.gaps or [self.gap])]

    @property
    def oversampling_axis(self) -> List[Oversampling]:
        return list(self.oversamplings) or [self.oversampling]

    @property
    def beamstop_axis(self) -> List[int]:
        return list(self.beamstops) or [self.beamstop]

    @property
    def gap_width(self) -> int:
        return parse_gap(self.gap, self.n)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["oversampling"] = list(self.oversampling)
        data["oversamplings"] = [list(v) for v in self.oversamplings]
        data["output"] = str(self.output)
        return data


def config_from_dict(data: Optional[Dict[str, Any]]) -> RunConfig:
    """
    Build a RunConfig from parsed YAML.

    :raises ConfigError: For unknown keys or invalid values
    """
    data = data or {}
    if not isinstance(data, dict):
        raise ConfigError("Configuration must be a YAML mapping")
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"Unknown config fields: {', '.join(unknown)}")
    try:
        return RunConfig(**data)
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"Invalid configuration: {e}")


def load_config(config_path: str = "config.yaml") -> RunConfig:
    """
    Load configuration from YAML file with local override support.

    Loading hierarchy:
    1. config.local.yaml (if exists) - personal experiment settings
    2. config.yaml (fallback) - shipped defaults

    :param config_path: Path to config file (default: config.yaml)
    :type config_path: str
    :return: Validated configuration object
    :rtype: RunConfig
    :raises FileNotFoundError: If config file doesn't exist
    :raises yaml.YAMLError: If YAML is malformed
    :raises ConfigError: If a field is unknown or invalid

    :Example:

    >>> config = load_config("configs/photon-sweep.yaml")
    >>> config.photon_flux
    [1000.0, 100.0, 10.0, 1.0, 0.1]
    """
    #: Only use config hierarchy for default config.yaml
    if str(config_path) == "config.yaml":
        local_config_path = Path("config.local.yaml")
        if local_config_path.exists():
            config_file = local_config_path
            print(f"ℹ️  Using local configuration: {config_file}")
        else:
            config_file = Path(config_path)
            print(f"ℹ️  Using default configuration: {config_file}")
    else:
        config_file = Path(config_path)

    if not config_file.exists():
        raise FileNotFoundError(f"Configuration file not found: {config_file}")

    with open(config_file, 'r') as f:
        try:
            data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise yaml.YAMLError(f"Error parsing YAML: {e}")

    return config_from_dict(data)


def apply_overrides(config: RunConfig, **flags) -> RunConfig:
    """
    Return a copy with command-line flags applied; ``None`` means not given.

    :raises ConfigError: For unknown flags or invalid values
    """
    given = {k: v for k, v in flags.items() if v is not None}
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(given) - known)
    if unknown:
        raise ConfigError(f"Unknown config fields: {', '.join(unknown)}")
    return replace(config, **given)


def save_config(config: RunConfig, directory: Union[str, Path]) -> Path:
    """Write the resolved configuration next to the results for provenance."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / RUN_CONFIG_NAME
    with open(path, 'w') as f:
        yaml.safe_dump(config.to_dict(), f, sort_keys=False)
    return path


def solver_config(config: RunConfig) -> SolverConfig:
    """
    SolverConfig from the ``solver:`` overrides.

    :raises ConfigError: For unknown keys or invalid values
    """
    try:
        return SolverConfig(**config.solver)
    except TypeError as e:
        raise ConfigError(f"Invalid solver settings: {e}")


def filter_config(config: RunConfig) -> FilterConfig:
    """
    FilterConfig from the ``filter:`` overrides.

    :raises ConfigError: For unknown keys or invalid values
    """
    try:
        return FilterConfig(**config.filter)
    except TypeError as e:
        raise ConfigError(f"Invalid filter settings: {e}")
