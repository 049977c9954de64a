"""Discrete kink lattices: statics, normal modes, and open quantum dynamics.

The package is organized as a pipeline: build a lattice model, relax a
seeded kink to its static configuration, diagonalize the curvature into
normal modes, transform the anharmonic derivatives into mode-coupling
tensors, and then either integrate classical trajectories or evolve the
localized modes as an open quantum system against the phonon bath.
"""

from .errors import (
    ConfigError,
    ConvergenceError,
    KinklabError,
    NumericalError,
    SaddleError,
)
from .models import (
    FIXED_ENDS,
    PERIODIC_WINDING,
    PHI4,
    SINE_GORDON,
    ChainState,
    DerivativeBundle,
    ModelSpec,
    continuum_seed,
    derivatives,
    gaussian_well_profile,
    gradient,
    phi4_spec,
    potential_energy,
    sine_gordon_spec,
)
from .relax import Equilibrium, relax
from .modes import ModeBasis, ResonanceReport, classify, normal_modes, resonances
from .couplings import CouplingTensors, coupling_slice, transform
from .dynamics import (
    SimConfig,
    Trajectory,
    default_dt,
    dft,
    energy_drift,
    integrate,
    mode_series,
    phonon_kick,
    thermal_state,
)

__version__ = "0.1.0"
