"""
Shared fixtures: small random scenes and the problems built from them.
"""

import numpy as np
import pytest

from src.detector import noiseless, simulate
from src.fourier import FourierOperator
from src.layout import Layout
from src.objective import Problem
from src.references import ReferenceKind, ReferenceSpec, generate


def build_scene(n=8, reference="ura", gap=None, oversampling=(2, 2), seed=0, specimen=None):
    """Random specimen in [0, 1] next to a generated reference."""
    spec = ReferenceSpec(ReferenceKind(reference))
    if specimen is None:
        specimen = np.random.default_rng(seed).uniform(0.0, 1.0, (n, n))
    layout = Layout(
        specimen=specimen,
        reference=generate(spec, n),
        gap_width=gap,
        oversampling_x=oversampling[0],
        oversampling_y=oversampling[1],
    )
    return layout, spec


def build_problem(layout, measurement):
    return Problem(measurement, FourierOperator(layout))


@pytest.fixture
def make_scene():
    """Factory for (Layout, ReferenceSpec) pairs."""
    return build_scene


@pytest.fixture
def make_problem():
    """
    Factory for (Problem, Layout) on simulated data.

    ``photon_flux=None`` gives noiseless data.
    """
    def _make(n=8, reference="ura", photon_flux=None, beamstop=0, seed=0, **scene):
        layout, spec = build_scene(n=n, reference=reference, seed=seed, **scene)
        if photon_flux is None:
            measurement = noiseless(layout, spec, beamstop=beamstop)
        else:
            measurement = simulate(layout, spec, photon_flux, seed=seed + 1000, beamstop=beamstop)
        return build_problem(layout, measurement), layout
    return _make
