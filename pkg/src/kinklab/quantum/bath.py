"""Bath coupling coefficients, renormalization, and correlation functions.

After quantization the interaction splits into system operators times bath
operators, ``H_int = hbar * sum_alpha s_alpha B_alpha``.  Each bath
operator is at most quadratic in the bath ladder combinations
``q_k = a_k + a_k^dag``::

    B_alpha = sum_k c_k q_k  +  sum_kl A_kl q_k q_l        (A symmetric)

* a linear system operator ``Q_i`` picks up the cubic couplings with two
  bath legs: ``A_kl = (1/2) L[i,k,l] sqrt(hbar) (8 w_i w_k w_l)^(-1/2)``;
* a quadratic pair ``Q_i Q_j`` picks up cubic one-bath-leg terms in ``c``
  and quartic two-bath-leg terms in ``A``, with multiplicity halved when
  ``i = j``.

Quartic terms with three bath legs (attached to a linear system operator)
are dropped: they carry an extra power of hbar relative to the cubic
contribution on the same operator.  Terms with three system legs and one
bath leg are likewise dropped; both omissions are fixed model content, not
options.

The bath stays thermal and harmonic, so every correlation function is a
closed-form sum over bath modes built from the single-mode contraction
``f_k(tau) = (1 + n_k) exp(-i w_k tau) + n_k exp(+i w_k tau)``:

    C_ab(tau) = sum_k c^a_k c^b_k f_k(tau)
              + 2 sum_kl A^a_kl A^b_kl f_k(tau) f_l(tau)

The operators are mean-centered, so the disconnected pieces cancel
identically and the constant means reappear as renormalizations of the
system Hamiltonian: a frequency shift ``nu`` per mode, a position shift
``xi`` per mode, and one bilinear mode-mode term ``nu12``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..couplings import CouplingTensors
from ..dynamics import occupation
from ..errors import ConfigError, NumericalError
from .fock import SystemDef


def bath_mode_indices(sdef: SystemDef, n_total: int) -> list:
    """All mode indices not promoted to the quantum system."""
    return [k for k in range(n_total) if k not in sdef.sys_modes]


def operator_labels(sdef: SystemDef) -> list:
    if sdef.n_sys == 1:
        return ["Q1", "Q1^2"]
    return ["Q1", "Q2", "Q1^2", "Q2^2", "Q1Q2"]


@dataclass
class BathCoefficients:
    """Linear (c) and quadratic (A) bath coefficients per system operator."""

    bath: np.ndarray          # bath mode indices into the full basis
    omegas: np.ndarray        # bare bath frequencies
    occ: np.ndarray           # thermal occupations at sdef.temperature
    c: np.ndarray             # (n_ops, n_bath)
    a: np.ndarray             # (n_ops, n_bath, n_bath), symmetric in (k, l)
    labels: list


def bath_coefficients(tensors: CouplingTensors, sdef: SystemDef) -> BathCoefficients:
    """Assemble c and A for every system coupling operator."""
    omega = np.sqrt(tensors.omega2)
    for m in sdef.sys_modes:
        if not 0 <= m < tensors.n:
            raise ConfigError(f"system mode {m} outside tensor range")
    bath = np.array(bath_mode_indices(sdef, tensors.n), dtype=int)
    wb = omega[bath]
    occ = np.array([occupation(w, sdef.temperature) for w in wb])
    hbar = sdef.hbar
    ws = omega[list(sdef.sys_modes)]

    ops = ([(0,), (0, 0)] if sdef.n_sys == 1
           else [(0,), (1,), (0, 0), (1, 1), (0, 1)])
    n_ops = len(ops)
    nb = len(bath)
    c = np.zeros((n_ops, nb))
    a = np.zeros((n_ops, nb, nb))

    slices3 = {i: tensors.third_slice(m) for i, m in enumerate(sdef.sys_modes)}
    for pos, idx in enumerate(ops):
        if len(idx) == 1:
            i = idx[0]
            lmat = slices3[i][np.ix_(bath, bath)]
            pref = math.sqrt(hbar) / np.sqrt(8.0 * ws[i] * wb[:, None] * wb[None, :])
            a[pos] = 0.5 * lmat * pref
        else:
            i, j = idx
            half = 0.5 if i == j else 1.0
            lvec = slices3[i][sdef.sys_modes[j], bath]
            c[pos] = half * lvec * math.sqrt(hbar) / np.sqrt(
                8.0 * ws[i] * ws[j] * wb
            )
            mmat = tensors.fourth_pair_slice(
                sdef.sys_modes[i], sdef.sys_modes[j]
            )[np.ix_(bath, bath)]
            pref = hbar / np.sqrt(16.0 * ws[i] * ws[j] * wb[:, None] * wb[None, :])
            a[pos] = (0.5 * half) * mmat * pref
    return BathCoefficients(
        bath=bath, omegas=wb, occ=occ, c=c, a=a, labels=operator_labels(sdef),
    )


@dataclass
class RenormConstants:
    """Thermal-mean shifts absorbed into the system Hamiltonian.

    ``nu``, ``xi`` and ``nu12`` are quoted in physical normal-coordinate
    normalization, so the shifted frequency obeys
    ``w' = w * sqrt(1 + 2 nu / w**2)``.  The Fock-normalized values
    actually added to the Hamiltonian (coefficients of ``Q``, ``Q^2`` and
    ``Q1 Q2``) are kept alongside.
    """

    bare_freqs: np.ndarray
    shifted_freqs: np.ndarray
    nu: np.ndarray
    xi: np.ndarray
    nu12: float | None
    nu_fock: np.ndarray
    xi_fock: np.ndarray
    nu12_fock: float | None

    def to_json_dict(self) -> dict:
        return {
            "bare_freqs": [float(v) for v in self.bare_freqs],
            "shifted_freqs": [float(v) for v in self.shifted_freqs],
            "nu": [float(v) for v in self.nu],
            "xi": [float(v) for v in self.xi],
            "nu12": self.nu12,
            "nu_fock": [float(v) for v in self.nu_fock],
            "xi_fock": [float(v) for v in self.xi_fock],
            "nu12_fock": self.nu12_fock,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "RenormConstants":
        return cls(
            bare_freqs=np.asarray(doc["bare_freqs"], dtype=float),
            shifted_freqs=np.asarray(doc["shifted_freqs"], dtype=float),
            nu=np.asarray(doc["nu"], dtype=float),
            xi=np.asarray(doc["xi"], dtype=float),
            nu12=doc["nu12"],
            nu_fock=np.asarray(doc["nu_fock"], dtype=float),
            xi_fock=np.asarray(doc["xi_fock"], dtype=float),
            nu12_fock=doc["nu12_fock"],
        )


def renormalize(tensors: CouplingTensors, sdef: SystemDef) -> RenormConstants:
    """Thermal means of the bath operators and the resulting frequency shifts.

    The mean of each quadratic bath operator is a single bath sum weighted
    by ``1 + 2 n_k``; subtracting the means from the bath operators adds
    the matching system terms.  At T = 0 the sums reduce to the zero-point
    contribution.
    """
    coeff = bath_coefficients(tensors, sdef)
    hbar = sdef.hbar
    omega = np.sqrt(tensors.omega2)
    ws = omega[list(sdef.sys_modes)]
    weights = 1.0 + 2.0 * coeff.occ

    means = np.array([float(np.diag(coeff.a[p]) @ weights)
                      for p in range(len(coeff.labels))])
    if sdef.n_sys == 1:
        xi_fock = means[:1]
        nu_fock = means[1:2]
        nu12_fock = None
    else:
        xi_fock = means[:2]
        nu_fock = means[2:4]
        nu12_fock = float(means[4])

    nu = 2.0 * ws * nu_fock
    xi = xi_fock * np.sqrt(2.0 * hbar * ws)
    nu12 = (None if nu12_fock is None
            else float(2.0 * math.sqrt(ws[0] * ws[1]) * nu12_fock))

    radicand = 1.0 + 2.0 * nu / ws ** 2
    if np.any(radicand <= 0.0):
        bad = int(np.argmin(radicand))
        raise NumericalError(
            f"frequency-shift radicand for system mode {bad + 1} is "
            f"{radicand[bad]:.3e}; the coupling is outside perturbative validity"
        )
    shifted = ws * np.sqrt(radicand)
    return RenormConstants(
        bare_freqs=ws,
        shifted_freqs=shifted,
        nu=nu,
        xi=xi,
        nu12=nu12,
        nu_fock=nu_fock,
        xi_fock=xi_fock,
        nu12_fock=nu12_fock,
    )


@dataclass
class CorrelationTable:
    """Bath correlation functions on a uniform non-negative time grid.

    ``values[a, b, r]`` is ``C_ab(grid[r])``; negative arguments follow
    from ``C_ab(-tau) = conj(C_ab(tau))``.  The table is symmetric in
    (a, b) because the coefficients are real.
    """

    grid: np.ndarray
    values: np.ndarray
    labels: list

    @property
    def n_ops(self) -> int:
        return len(self.labels)

    def is_zero(self) -> bool:
        return not np.any(self.values)


def _mode_factors(coeff: BathCoefficients, grid: np.ndarray) -> np.ndarray:
    phase = np.exp(-1j * coeff.omegas[:, None] * grid[None, :])
    return (1.0 + coeff.occ)[:, None] * phase + coeff.occ[:, None] / phase


def build_correlation_table(tensors: CouplingTensors, sdef: SystemDef,
                            grid) -> CorrelationTable:
    """Evaluate every operator-pair correlation on a time grid."""
    grid = np.asarray(grid, dtype=float)
    coeff = bath_coefficients(tensors, sdef)
    factors = _mode_factors(coeff, grid)  # (n_bath, n_grid)
    n_ops = len(coeff.labels)
    values = np.zeros((n_ops, n_ops, len(grid)), dtype=complex)
    for p in range(n_ops):
        for q in range(p, n_ops):
            linear = (coeff.c[p] * coeff.c[q]) @ factors
            weights = coeff.a[p] * coeff.a[q]
            quad = 2.0 * np.sum(factors * (weights @ factors), axis=0)
            values[p, q] = values[q, p] = linear + quad
    return CorrelationTable(grid=grid, values=values, labels=coeff.labels)


def correlation(tensors: CouplingTensors, sdef: SystemDef, alpha, beta,
                tau: float) -> complex:
    """Single correlation value C_alpha,beta(tau); tau may be negative."""
    labels = operator_labels(sdef)
    idx = []
    for op in (alpha, beta):
        if isinstance(op, str):
            if op not in labels:
                raise ConfigError(f"unknown operator label {op!r}")
            idx.append(labels.index(op))
        else:
            if not 0 <= int(op) < len(labels):
                raise ConfigError(f"operator index {op} out of range")
            idx.append(int(op))
    table = build_correlation_table(tensors, sdef, np.array([float(tau)]))
    return complex(table.values[idx[0], idx[1], 0])
