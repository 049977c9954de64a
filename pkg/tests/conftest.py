"""Shared fixtures: standard chains relaxed once per session."""

import numpy as np
import pytest

from kinklab.couplings import CouplingTensors
from kinklab.models import (
    ModelSpec,
    continuum_seed,
    derivatives,
    gaussian_well_profile,
)
from kinklab.modes import classify, normal_modes
from kinklab.relax import relax


def make_tensors(omega2, third=(), fourth=()):
    """Hand-built sparse tensors from ((i, j, k), value) entry lists.

    Indices are canonicalized and key rows sorted so lookups work; zero
    thresholds keep every entry.
    """
    n = len(omega2)

    def canon(entries, width):
        if not len(entries):
            return np.zeros((0, width), dtype=np.uint16), np.zeros(0)
        keys = np.array([sorted(k) for k, _ in entries], dtype=np.int64)
        vals = np.array([v for _, v in entries], dtype=float)
        code = keys[:, 0].copy()
        for c in range(1, width):
            code = code * n + keys[:, c]
        order = np.argsort(code)
        return keys[order].astype(np.uint16), vals[order]

    k3, v3 = canon(third, 3)
    k4, v4 = canon(fourth, 4)
    return CouplingTensors(
        omega2=np.asarray(omega2, dtype=float),
        third_keys=k3, third_vals=v3,
        fourth_keys=k4, fourth_vals=v4,
        threshold_third=0.0, threshold_fourth=0.0,
    )


@pytest.fixture(scope="session")
def phi4_n60():
    """Uniform phi4 kink: spec, equilibrium, classified mode basis."""
    spec = ModelSpec.from_json_dict({
        "kind": "phi4", "n": 60,
        "g": {"profile": "constant", "value": 0.4},
        "k": -0.28, "boundary": "fixed_ends",
    })
    eq = relax(spec, continuum_seed(spec))
    basis = classify(normal_modes(derivatives(spec, eq.positions).hessian))
    return spec, eq, basis


@pytest.fixture(scope="session")
def sg_kink_n30():
    """Uniform sine-Gordon kink at G = 4 (bond-centered, even N)."""
    spec = ModelSpec.from_json_dict({
        "kind": "sine_gordon", "n": 30,
        "g": {"profile": "constant", "value": 4.0},
        "s": 1, "boundary": "periodic_winding",
    })
    eq = relax(spec, continuum_seed(spec), tol=1e-10)
    basis = classify(normal_modes(derivatives(spec, eq.positions).hessian))
    return spec, eq, basis


@pytest.fixture(scope="session")
def well_n40():
    """phi4 kink on a softened-bond (gaussian well) chain, N = 40.

    The coupling dip pushes both localized modes deep below the band;
    the band is sparse at this size, hence the lower gap factor.
    """
    n = 40
    g = gaussian_well_profile(n, base=1.94, depth=1.04, center=20.5, width=1.8)
    spec = ModelSpec.from_json_dict({
        "kind": "phi4", "n": n, "g": [float(v) for v in g],
        "k": -0.34, "boundary": "fixed_ends",
    })
    eq = relax(spec, continuum_seed(spec))
    basis = classify(normal_modes(derivatives(spec, eq.positions).hessian),
                     gap_factor=1.3)
    return spec, eq, basis


@pytest.fixture(scope="session")
def phi4_n6():
    """Tiny phi4 kink for exhaustive tensor comparisons."""
    spec = ModelSpec.from_json_dict({
        "kind": "phi4", "n": 6,
        "g": {"profile": "constant", "value": 0.4},
        "k": -0.28, "boundary": "fixed_ends",
    })
    eq = relax(spec, continuum_seed(spec))
    basis = classify(normal_modes(derivatives(spec, eq.positions).hessian))
    return spec, eq, basis
