"""System Hamiltonian assembly and the non-Markovian master equation.

The reduced density matrix evolves in the interaction picture under the
second-order (Born) memory equation

    d rho~ / dt = - sum_ab [ s~_a(t), T_ab(t) - T_ab(t)^dag ]
    T_ab(t)     = integral_0^t  C_ab(t - t') s~_b(t') rho~(t') dt'

with s~ the system coupling operators rotated by the system Hamiltonian
and C the analytic bath correlation table.  The commutator form makes
trace and hermiticity preservation exact term by term, so both are
asserted, never repaired.  The memory integral is a trapezoid over the
full stored history (cost growing like steps^2); the truncated-kernel
variant restricts it to the last ``tau_c`` of history, and the
single-mode variant runs the same machinery with two system operators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..couplings import CouplingTensors
from ..errors import ConfigError, NumericalError
from .bath import CorrelationTable, RenormConstants, build_correlation_table
from .fock import (
    TRUNCATED_KERNEL,
    OperatorSet,
    SystemDef,
    build_fock_operators,
    check_density_matrix,
)

HERM_TOL = 1e-10
TRACE_ABORT = 1e-4

_CUBIC_MULTISETS = {
    1: [((0, 0, 0), 1)],
    2: [((0, 0, 0), 1), ((0, 0, 1), 3), ((0, 1, 1), 3), ((1, 1, 1), 1)],
}
_QUARTIC_MULTISETS = {
    1: [((0, 0, 0, 0), 1)],
    2: [((0, 0, 0, 0), 1), ((0, 0, 0, 1), 4), ((0, 0, 1, 1), 6),
        ((0, 1, 1, 1), 4), ((1, 1, 1, 1), 1)],
}


def build_system_hamiltonian(tensors: CouplingTensors, sdef: SystemDef,
                             renorm: RenormConstants,
                             ops: OperatorSet | None = None) -> np.ndarray:
    """Hermitian system Hamiltonian on the truncated composite space.

    Harmonic ladders at the bare frequencies plus, as explicit operators,
    the thermal-mean renormalization terms (whose spectrum realizes the
    shifted frequencies), the bilinear mode-mode term, and every cubic and
    quartic coupling whose indices all lie in the system.
    """
    if ops is None:
        ops = build_fock_operators(sdef)
    hbar = sdef.hbar
    omega = np.sqrt(tensors.omega2)
    ws = omega[list(sdef.sys_modes)]
    d = sdef.total_dim

    h = np.zeros((d, d))
    for i in range(sdef.n_sys):
        h += hbar * ws[i] * (ops.number_ops[i] + 0.5 * np.eye(d))
        h += hbar * renorm.xi_fock[i] * ops.q_ops[i]
    # quadratic renormalization: pair operators Q_i^2 then Q1 Q2
    if sdef.n_sys == 1:
        h += hbar * renorm.nu_fock[0] * ops.pair_ops[1]
    else:
        h += hbar * renorm.nu_fock[0] * ops.pair_ops[2]
        h += hbar * renorm.nu_fock[1] * ops.pair_ops[3]
        h += hbar * renorm.nu12_fock * ops.pair_ops[4]

    def q_product(positions):
        out = ops.q_ops[positions[0]].copy()
        for p in positions[1:]:
            out = out @ ops.q_ops[p]
        return out

    for positions, mult in _CUBIC_MULTISETS[sdef.n_sys]:
        modes = [sdef.sys_modes[p] for p in positions]
        val = tensors.get_third(*modes)
        if val == 0.0:
            continue
        pref = hbar ** 1.5 / math.sqrt(8.0 * np.prod(ws[list(positions)]))
        h += (mult / 6.0) * val * pref * q_product(positions)
    for positions, mult in _QUARTIC_MULTISETS[sdef.n_sys]:
        modes = [sdef.sys_modes[p] for p in positions]
        val = tensors.get_fourth(*modes)
        if val == 0.0:
            continue
        pref = hbar ** 2 / math.sqrt(16.0 * np.prod(ws[list(positions)]))
        h += (mult / 24.0) * val * pref * q_product(positions)

    asym = float(np.max(np.abs(h - h.T)))
    if asym > 1e-14 * max(1.0, float(np.max(np.abs(h)))):
        raise NumericalError(f"system Hamiltonian asymmetry {asym:.3e}")
    return 0.5 * (h + h.T)


@dataclass
class EvolveResult:
    """Interaction-picture density-matrix history (original composite basis)."""

    times: np.ndarray
    rhos: np.ndarray
    trace_error: float
    herm_error: float


def evolve(sdef: SystemDef, h_s: np.ndarray, ops: OperatorSet,
           tensors: CouplingTensors, rho0: np.ndarray, dt: float, steps: int,
           record_every: int = 1,
           corr: CorrelationTable | None = None) -> EvolveResult:
    """Heun-stepped memory integration of the reduced density matrix.

    ``dt`` must resolve the system periods and the correlation decay
    (roughly pi / (10 * max bath frequency)).  The correlation table is
    evaluated analytically on the step grid unless one is supplied.
    Raises on non-finite values or on trace drift beyond 1e-4.
    """
    if dt <= 0 or steps < 1:
        raise ConfigError("dt must be positive and steps >= 1")
    d = h_s.shape[0]
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (d, d):
        raise ConfigError(f"rho0 shape {rho0.shape} does not match dim {d}")
    check_density_matrix(rho0)

    grid = dt * np.arange(steps + 1)
    if corr is None:
        corr = build_correlation_table(tensors, sdef, grid)
    elif len(corr.grid) < steps + 1 or abs(corr.grid[1] - dt) > 1e-12 * dt:
        raise ConfigError("correlation table grid does not match dt/steps")
    n_ops = corr.n_ops
    if n_ops != len(ops.pair_ops):
        raise ConfigError("operator set and correlation table disagree")

    rec_idx = np.arange(0, steps + 1, record_every)
    times = grid[rec_idx]
    rhos = np.empty((len(rec_idx), d, d), dtype=complex)

    if corr.is_zero():
        # no dissipator: the interaction picture freezes the state
        rhos[:] = rho0
        return EvolveResult(times=times, rhos=rhos, trace_error=0.0,
                            herm_error=0.0)

    evals, evecs = np.linalg.eigh(h_s)
    s_prime = np.array([evecs.T @ s @ evecs for s in ops.pair_ops])
    freq_diff = (evals[:, None] - evals[None, :]) / sdef.hbar
    rho = evecs.conj().T @ rho0 @ evecs

    hist = np.empty((steps + 1, n_ops, d, d), dtype=complex)
    hist_flat = hist.reshape(steps + 1, n_ops, d * d)
    cvals = corr.values

    n_tau = None
    if sdef.variant == TRUNCATED_KERNEL:
        n_tau = max(1, int(round(sdef.tau_c / dt)))

    def rhs(m: int, rho_m: np.ndarray) -> np.ndarray:
        phase = np.exp(1j * freq_diff * (m * dt))
        s_tilde = s_prime * phase[None, :, :]
        for b in range(n_ops):
            hist[m, b] = s_tilde[b] @ rho_m
        r0 = 0 if n_tau is None else max(0, m - n_tau)
        span = m - r0
        if span == 0:
            return np.zeros((d, d), dtype=complex)
        w = np.full(span + 1, dt)
        w[0] = w[-1] = 0.5 * dt
        # kernel slice C_ab((m - r) dt) for r = r0 .. m, oriented by r
        kern = cvals[:, :, m - r0::-1]
        k = (kern * w[None, None, :]).transpose(0, 2, 1).reshape(
            n_ops, (span + 1) * n_ops)
        y = hist_flat[r0:m + 1].reshape((span + 1) * n_ops, d * d)
        v = (k @ y).reshape(n_ops, d, d)
        out = np.zeros((d, d), dtype=complex)
        for a in range(n_ops):
            anti = v[a] - v[a].conj().T
            out -= s_tilde[a] @ anti - anti @ s_tilde[a]
        return out

    slot = 0
    if rec_idx[0] == 0:
        rhos[0] = rho0
        slot = 1
    trace_err = 0.0
    herm_err = 0.0
    for m in range(steps):
        r1 = rhs(m, rho)
        pred = rho + dt * r1
        r2 = rhs(m + 1, pred)
        rho = rho + 0.5 * dt * (r1 + r2)

        if not np.all(np.isfinite(rho)):
            raise NumericalError(f"non-finite density matrix at step {m + 1}")
        tr_err = abs(complex(np.trace(rho)) - 1.0)
        trace_err = max(trace_err, tr_err)
        if tr_err > TRACE_ABORT:
            raise NumericalError(
                f"trace drift {tr_err:.3e} at step {m + 1} exceeds {TRACE_ABORT}"
            )
        h_err = float(np.max(np.abs(rho - rho.conj().T)))
        herm_err = max(herm_err, h_err)
        if h_err > HERM_TOL:
            raise NumericalError(
                f"hermiticity error {h_err:.3e} at step {m + 1} exceeds {HERM_TOL}"
            )
        if slot < len(rec_idx) and rec_idx[slot] == m + 1:
            rhos[slot] = evecs @ rho @ evecs.conj().T
            slot += 1
    return EvolveResult(times=times, rhos=rhos, trace_error=trace_err,
                        herm_error=herm_err)
