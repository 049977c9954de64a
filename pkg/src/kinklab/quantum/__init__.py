"""Quantized localized modes against a thermal phonon bath.

Public API re-exported from the submodules:

* :mod:`kinklab.quantum.fock` -- truncated Fock operators, density-matrix
  helpers, fidelity, the Rabi reference state.
* :mod:`kinklab.quantum.bath` -- bath coupling coefficients, Hamiltonian
  renormalization, analytic correlation functions.
* :mod:`kinklab.quantum.master` -- system Hamiltonian assembly and the
  non-Markovian master-equation integrator.
"""

from .fock import (
    FULL_TWO_MODE,
    LOW_MODE_IN_BATH,
    TRUNCATED_KERNEL,
    OperatorSet,
    SystemDef,
    build_fock_operators,
    check_density_matrix,
    default_initial_state,
    fidelity,
    partial_trace_low,
    rabi_reference,
    reduce_mode,
    to_schrodinger,
    trace_distance,
)
from .bath import (
    CorrelationTable,
    RenormConstants,
    bath_coefficients,
    build_correlation_table,
    correlation,
    renormalize,
)
from .master import EvolveResult, build_system_hamiltonian, evolve

__all__ = [
    "FULL_TWO_MODE",
    "TRUNCATED_KERNEL",
    "LOW_MODE_IN_BATH",
    "SystemDef",
    "OperatorSet",
    "build_fock_operators",
    "check_density_matrix",
    "default_initial_state",
    "fidelity",
    "partial_trace_low",
    "rabi_reference",
    "reduce_mode",
    "to_schrodinger",
    "trace_distance",
    "CorrelationTable",
    "RenormConstants",
    "bath_coefficients",
    "build_correlation_table",
    "correlation",
    "renormalize",
    "EvolveResult",
    "build_system_hamiltonian",
    "evolve",
]
