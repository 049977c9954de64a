"""Truncated Fock-space operators and density-matrix utilities.

The system holds one or two localized modes.  Mode 1 is always the high
(anti-symmetric, shape) mode and mode 2 the low (translational) mode; the
composite basis index is ``n = n1 * d2 + n2`` (mode 1 slowest), matching
``numpy.kron`` ordering.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, NumericalError

FULL_TWO_MODE = "full_two_mode"
TRUNCATED_KERNEL = "truncated_kernel"
LOW_MODE_IN_BATH = "low_mode_in_bath"
VARIANTS = (FULL_TWO_MODE, TRUNCATED_KERNEL, LOW_MODE_IN_BATH)

DEFAULT_DIMS = 7
CLAMP_EIG = -1e-6
WARN_EIG = -1e-8


@dataclass
class SystemDef:
    """Which modes form the quantum system and how they are truncated.

    ``sys_modes`` holds 0-based mode-basis column indices, high mode first.
    ``dims`` is the Fock truncation applied to each system mode.
    ``temperature`` (units of hbar) sets the thermal bath occupations.
    """

    sys_modes: tuple
    dims: int = DEFAULT_DIMS
    hbar: float = 1.9e-5
    temperature: float = 0.0
    variant: str = FULL_TWO_MODE
    tau_c: float | None = None

    def __post_init__(self):
        self.sys_modes = tuple(int(m) for m in self.sys_modes)
        if len(self.sys_modes) not in (1, 2):
            raise ConfigError("sys_modes must hold one or two mode indices")
        if len(set(self.sys_modes)) != len(self.sys_modes):
            raise ConfigError("sys_modes must be distinct")
        self.dims = int(self.dims)
        if self.dims < 2:
            raise ConfigError("dims must be at least 2")
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant: {self.variant!r}")
        if self.variant == TRUNCATED_KERNEL:
            if self.tau_c is None or not self.tau_c > 0:
                raise ConfigError("truncated_kernel requires tau_c > 0")
        if self.variant == LOW_MODE_IN_BATH and len(self.sys_modes) != 1:
            raise ConfigError("low_mode_in_bath takes exactly one system mode")
        if not self.hbar > 0:
            raise ConfigError("hbar must be positive")
        if self.temperature < 0:
            raise ConfigError("temperature must be non-negative")

    @property
    def n_sys(self) -> int:
        return len(self.sys_modes)

    @property
    def total_dim(self) -> int:
        return self.dims ** self.n_sys

    def to_json_dict(self) -> dict:
        return {
            "sys_modes": list(self.sys_modes),
            "dims": self.dims,
            "hbar": self.hbar,
            "temperature": self.temperature,
            "variant": self.variant,
            "tau_c": self.tau_c,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "SystemDef":
        return cls(
            sys_modes=tuple(doc["sys_modes"]),
            dims=doc.get("dims", DEFAULT_DIMS),
            hbar=doc.get("hbar", 1.9e-5),
            temperature=doc.get("temperature", 0.0),
            variant=doc.get("variant", FULL_TWO_MODE),
            tau_c=doc.get("tau_c"),
        )


def lowering(dims: int) -> np.ndarray:
    """Truncated annihilation operator."""
    a = np.zeros((dims, dims))
    n = np.arange(1, dims)
    a[n - 1, n] = np.sqrt(n)
    return a


@dataclass
class OperatorSet:
    """System coupling operators on the composite space.

    ``pair_ops`` holds, in fixed order, the operators the bath couples to:
    ``Q1, Q2, Q1^2, Q2^2, Q1*Q2`` for two modes or ``Q, Q^2`` for one,
    where ``Q_i = a_i + a_i^dag``.  ``pair_indices`` gives the 0-based
    system-mode positions each operator touches (``(i,)`` linear,
    ``(i, j)`` quadratic).
    """

    q_ops: list
    number_ops: list
    pair_ops: list
    pair_indices: list
    labels: list


def build_fock_operators(sdef: SystemDef) -> OperatorSet:
    """Composite-space ladder combinations for the system modes."""
    d = sdef.dims
    q1 = lowering(d)
    q = q1 + q1.T
    num = q1.T @ q1
    eye = np.eye(d)
    if sdef.n_sys == 1:
        q_ops = [q]
        number_ops = [num]
        pair_ops = [q, q @ q]
        pair_indices = [(0,), (0, 0)]
        labels = ["Q1", "Q1^2"]
    else:
        big_q1 = np.kron(q, eye)
        big_q2 = np.kron(eye, q)
        q_ops = [big_q1, big_q2]
        number_ops = [np.kron(num, eye), np.kron(eye, num)]
        pair_ops = [
            big_q1,
            big_q2,
            big_q1 @ big_q1,
            big_q2 @ big_q2,
            big_q1 @ big_q2,
        ]
        pair_indices = [(0,), (1,), (0, 0), (1, 1), (0, 1)]
        labels = ["Q1", "Q2", "Q1^2", "Q2^2", "Q1Q2"]
    return OperatorSet(
        q_ops=q_ops,
        number_ops=number_ops,
        pair_ops=pair_ops,
        pair_indices=pair_indices,
        labels=labels,
    )


def check_density_matrix(rho: np.ndarray, herm_tol: float = 1e-10,
                         trace_tol: float = 1e-8) -> None:
    """Assert hermiticity and unit trace; raise NumericalError otherwise."""
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    if herm > herm_tol:
        raise NumericalError(f"density matrix not hermitian (error {herm:.3e})")
    tr = complex(np.trace(rho))
    if abs(tr - 1.0) > trace_tol:
        raise NumericalError(f"density matrix trace {tr} is not 1")


def fock_state(dims: int, n: int) -> np.ndarray:
    if not 0 <= n < dims:
        raise ConfigError(f"Fock level {n} does not fit in dims {dims}")
    psi = np.zeros(dims, dtype=complex)
    psi[n] = 1.0
    return psi


def superposition_01(dims: int) -> np.ndarray:
    """(|0> + |1>)/sqrt(2)."""
    psi = np.zeros(dims, dtype=complex)
    psi[0] = psi[1] = 1.0 / math.sqrt(2.0)
    return psi


def default_initial_state(sdef: SystemDef) -> np.ndarray:
    """Mode 1 in (|0>+|1>)/sqrt(2); mode 2 (if present) in Fock |2>."""
    psi1 = superposition_01(sdef.dims)
    rho1 = np.outer(psi1, psi1.conj())
    if sdef.n_sys == 1:
        return rho1
    psi2 = fock_state(sdef.dims, 2)
    rho2 = np.outer(psi2, psi2.conj())
    return np.kron(rho1, rho2)


def partial_trace_low(rho: np.ndarray, dims: int) -> np.ndarray:
    """Trace out mode 2 of a two-mode composite density matrix."""
    d2 = rho.shape[0]
    d1 = d2 // dims
    if d1 * dims != d2:
        raise ConfigError("density matrix size is not a multiple of dims")
    r = rho.reshape(d1, dims, d1, dims)
    return np.einsum("ijkj->ik", r)


def to_schrodinger(rho_tilde: np.ndarray, h_s: np.ndarray, t: float,
                   hbar: float) -> np.ndarray:
    """Undo the interaction picture: rho(t) = U rho~(t) U^dag, U = exp(-i H t / hbar)."""
    evals, evecs = np.linalg.eigh(h_s)
    phases = np.exp(-1j * evals * t / hbar)
    u = evecs * phases[None, :]
    rot = u @ (evecs.conj().T @ rho_tilde @ evecs) @ u.conj().T
    return rot


def reduce_mode(rho: np.ndarray, sdef: SystemDef, h_s: np.ndarray | None = None,
                t: float = 0.0) -> np.ndarray:
    """Single-mode (mode 1) state from a composite density matrix.

    When ``h_s`` is given the interaction picture is undone at time ``t``
    before tracing out mode 2.  Single-mode systems are returned as-is
    (apart from the optional picture change).
    """
    if h_s is not None:
        rho = to_schrodinger(rho, h_s, t, sdef.hbar)
    if sdef.n_sys == 1:
        return rho
    return partial_trace_low(rho, sdef.dims)


def _clamped_eigvals(mat: np.ndarray, what: str) -> tuple[np.ndarray, np.ndarray]:
    evals, evecs = np.linalg.eigh(mat)
    low = float(evals.min())
    if low < CLAMP_EIG:
        raise NumericalError(
            f"{what} has eigenvalue {low:.3e} below the clamp window; "
            "positivity violation upstream is too large"
        )
    if low < WARN_EIG:
        warnings.warn(
            f"{what} has small negative eigenvalue {low:.3e}; clamping to 0",
            stacklevel=3,
        )
    return np.clip(evals, 0.0, None), evecs


def fidelity(rho: np.ndarray, chi: np.ndarray) -> float:
    """Uhlmann fidelity tr sqrt(sqrt(rho) chi sqrt(rho)), in [0, 1].

    Computed through two hermitian eigendecompositions; eigenvalues in the
    numerical-noise window just below zero are clamped.
    """
    evals, evecs = _clamped_eigvals(rho, "fidelity input rho")
    sqrt_rho = (evecs * np.sqrt(evals)[None, :]) @ evecs.conj().T
    inner = sqrt_rho @ chi @ sqrt_rho
    inner = 0.5 * (inner + inner.conj().T)
    ivals, _ = _clamped_eigvals(inner, "fidelity inner product")
    value = float(np.sum(np.sqrt(ivals)))
    return min(1.0, max(0.0, value))


def trace_distance(rho: np.ndarray, chi: np.ndarray) -> float:
    """Half the trace norm of rho - chi."""
    diff = rho - chi
    diff = 0.5 * (diff + diff.conj().T)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


def rabi_reference(omega1: float, dims: int, t: float) -> np.ndarray:
    """Freely precessing (|0> + e^{-i omega1 t}|1>)/sqrt(2) as a density matrix.

    ``omega1`` should be the renormalized mode-1 frequency so the phase
    matches the system Hamiltonian's 0-1 splitting.
    """
    if t < 0:
        raise ConfigError("time must be non-negative")
    psi = np.zeros(dims, dtype=complex)
    psi[0] = 1.0 / math.sqrt(2.0)
    psi[1] = np.exp(-1j * omega1 * t) / math.sqrt(2.0)
    return np.outer(psi, psi.conj())
