"""Memory-kernel master equation against exact closed-system dynamics."""

import itertools
import math

import numpy as np
import pytest

from conftest import make_tensors
from kinklab.errors import ConfigError, NumericalError
from kinklab.quantum.bath import (
    RenormConstants,
    bath_coefficients,
    build_correlation_table,
    renormalize,
)
from kinklab.quantum.fock import (
    SystemDef,
    build_fock_operators,
    default_initial_state,
    fidelity,
    lowering,
    rabi_reference,
    reduce_mode,
    to_schrodinger,
    trace_distance,
)
from kinklab.quantum.master import build_system_hamiltonian, evolve

OM2 = [4.0, 1.21, 2.25]
# one system mode (mode 0) coupled to two bath modes through cubic terms;
# no bath-only anharmonicity, so the harmonic-bath picture is exact
THIRD_1SYS = [
    ((0, 1, 1), 0.05), ((0, 1, 2), -0.04), ((0, 2, 2), 0.06),
    ((0, 0, 1), 0.03), ((0, 0, 2), -0.05), ((0, 0, 0), 0.04),
]


@pytest.fixture(scope="module")
def small_open_system():
    tensors = make_tensors(OM2, THIRD_1SYS)
    sdef = SystemDef(sys_modes=(0,), dims=4, hbar=1.0, temperature=0.0)
    ops = build_fock_operators(sdef)
    ren = renormalize(tensors, sdef)
    h_s = build_system_hamiltonian(tensors, sdef, ren, ops=ops)
    return tensors, sdef, ops, ren, h_s


def zero_renorm(ren):
    n = len(ren.bare_freqs)
    none12 = ren.nu12 is None
    return RenormConstants(
        bare_freqs=ren.bare_freqs, shifted_freqs=ren.bare_freqs,
        nu=np.zeros(n), xi=np.zeros(n), nu12=None if none12 else 0.0,
        nu_fock=np.zeros(n), xi_fock=np.zeros(n),
        nu12_fock=None if none12 else 0.0,
    )


def kron_chain(mats):
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


class TestHamiltonianAssembly:
    def test_ordered_sum_identity(self):
        # every multiset/multiplicity in the assembler must reproduce the
        # plain ordered polynomial sum over system indices
        third = [((0, 0, 0), 0.21), ((0, 0, 1), -0.34), ((0, 1, 1), 0.18),
                 ((1, 1, 1), -0.09), ((0, 1, 2), 0.5)]
        fourth = [((0, 0, 0, 0), 0.11), ((0, 0, 0, 1), 0.07),
                  ((0, 0, 1, 1), -0.13), ((0, 1, 1, 1), 0.06),
                  ((1, 1, 1, 1), -0.21), ((0, 0, 2, 2), 0.4)]
        tensors = make_tensors(OM2, third, fourth)
        sdef = SystemDef(sys_modes=(0, 1), dims=3, hbar=0.7, temperature=0.3)
        ops = build_fock_operators(sdef)
        ren = renormalize(tensors, sdef)
        h = build_system_hamiltonian(tensors, sdef, ren, ops=ops)

        hbar = sdef.hbar
        ws = np.sqrt(np.asarray(OM2))[list(sdef.sys_modes)]
        d = sdef.total_dim
        want = np.zeros((d, d))
        for i in range(2):
            want += hbar * ws[i] * (ops.number_ops[i] + 0.5 * np.eye(d))
            want += hbar * ren.xi_fock[i] * ops.q_ops[i]
        want += hbar * ren.nu_fock[0] * ops.pair_ops[2]
        want += hbar * ren.nu_fock[1] * ops.pair_ops[3]
        want += hbar * ren.nu12_fock * ops.pair_ops[4]
        scale = [math.sqrt(hbar / (2.0 * w)) for w in ws]
        for trip in itertools.product(range(2), repeat=3):
            val = tensors.get_third(*[sdef.sys_modes[p] for p in trip])
            if val:
                pref = scale[trip[0]] * scale[trip[1]] * scale[trip[2]]
                want += (val / 6.0) * pref * (
                    ops.q_ops[trip[0]] @ ops.q_ops[trip[1]] @ ops.q_ops[trip[2]])
        for quad in itertools.product(range(2), repeat=4):
            val = tensors.get_fourth(*[sdef.sys_modes[p] for p in quad])
            if val:
                pref = np.prod([scale[p] for p in quad])
                mats = [ops.q_ops[p] for p in quad]
                want += (val / 24.0) * pref * (
                    mats[0] @ mats[1] @ mats[2] @ mats[3])
        assert np.allclose(h, want, atol=1e-13 * np.max(np.abs(want)))

    def test_renormalization_split(self, small_open_system):
        # renormalized H_S equals bare H_S plus the bath means times the
        # coupling operators; the master equation relies on this split
        tensors, sdef, ops, ren, h_s = small_open_system
        coeff = bath_coefficients(tensors, sdef)
        h_bare = build_system_hamiltonian(tensors, sdef, zero_renorm(ren),
                                          ops=ops)
        means = [float(np.trace(coeff.a[p])) for p in range(2)]  # T = 0
        h_split = h_bare + sum(m * s for m, s in zip(means, ops.pair_ops))
        assert np.allclose(h_split, h_s, atol=1e-15)

    def test_hermitian(self, small_open_system):
        *_, h_s = small_open_system
        assert np.array_equal(h_s, h_s.T)


class TestClosedSystemOracle:
    def test_tracks_exact_reduced_dynamics(self, small_open_system):
        tensors, sdef, ops, ren, h_s = small_open_system
        rho0 = default_initial_state(sdef)
        dt, steps, rec = 0.1, 100, 10
        res = evolve(sdef, h_s, ops, tensors, rho0, dt, steps,
                     record_every=rec)
        assert res.trace_error <= 1e-12
        assert res.herm_error <= 1e-12

        # exact unitary reference: system + two explicit bath oscillators
        coeff = bath_coefficients(tensors, sdef)
        db = 5
        low = lowering(db)
        q1 = low + low.T
        n1, eye = np.diag(np.arange(db, dtype=float)), np.eye(db)
        qk = [np.kron(q1, eye), np.kron(eye, q1)]
        hb = (coeff.omegas[0] * np.kron(n1, eye)
              + coeff.omegas[1] * np.kron(eye, n1))
        bops = []
        for p in range(2):
            b = coeff.c[p][0] * qk[0] + coeff.c[p][1] * qk[1]
            for k in range(2):
                for l in range(2):
                    b = b + coeff.a[p][k, l] * (qk[k] @ qk[l])
            bops.append(b)
        h_bare = build_system_hamiltonian(tensors, sdef, zero_renorm(ren),
                                          ops=ops)
        ds, dbath = sdef.total_dim, db * db
        h_full = (np.kron(h_bare, np.eye(dbath)) + np.kron(np.eye(ds), hb)
                  + sum(np.kron(ops.pair_ops[p], bops[p]) for p in range(2)))
        evals, evecs = np.linalg.eigh(h_full)
        vac = np.zeros(dbath)
        vac[0] = 1.0
        rot0 = evecs.conj().T @ np.kron(
            rho0, np.outer(vac, vac)).astype(complex) @ evecs

        worst_master, worst_free = 0.0, 0.0
        for i, t in enumerate(res.times):
            phase = np.exp(-1j * evals * float(t))
            full_t = evecs @ (phase[:, None] * rot0
                              * phase.conj()[None, :]) @ evecs.conj().T
            rho_exact = np.einsum(
                "ijkj->ik", full_t.reshape(ds, dbath, ds, dbath))
            rho_master = to_schrodinger(res.rhos[i], h_s, float(t), sdef.hbar)
            rho_free = to_schrodinger(rho0.astype(complex), h_s, float(t),
                                      sdef.hbar)
            worst_master = max(worst_master,
                               trace_distance(rho_master, rho_exact))
            worst_free = max(worst_free, trace_distance(rho_free, rho_exact))
        # second-order memory kernel: small residual, far below the
        # coupling-free baseline error
        assert worst_master <= 2e-4
        assert worst_free >= 1e-3
        assert worst_master <= worst_free / 10.0


class TestUncoupledLimit:
    def test_frozen_interaction_picture(self):
        tensors = make_tensors(OM2)
        sdef = SystemDef(sys_modes=(0, 1), dims=3, hbar=1.0)
        ops = build_fock_operators(sdef)
        ren = renormalize(tensors, sdef)
        h_s = build_system_hamiltonian(tensors, sdef, ren, ops=ops)
        rho0 = default_initial_state(sdef)
        res = evolve(sdef, h_s, ops, tensors, rho0, 0.05, 60, record_every=20)
        assert res.trace_error == 0.0
        for rho in res.rhos:
            assert np.array_equal(rho, rho0.astype(complex))

    def test_free_precession_matches_reference(self):
        tensors = make_tensors(OM2)
        sdef = SystemDef(sys_modes=(0, 1), dims=4, hbar=1.0)
        ops = build_fock_operators(sdef)
        ren = renormalize(tensors, sdef)
        h_s = build_system_hamiltonian(tensors, sdef, ren, ops=ops)
        assert np.array_equal(ren.shifted_freqs, ren.bare_freqs)
        rho0 = default_initial_state(sdef)
        res = evolve(sdef, h_s, ops, tensors, rho0, 0.05, 80, record_every=16)
        w1 = float(ren.shifted_freqs[0])
        for t, rho in zip(res.times, res.rhos):
            rho1 = reduce_mode(rho, sdef, h_s=h_s, t=float(t))
            f = fidelity(rho1, rabi_reference(w1, sdef.dims, float(t)))
            assert f >= 1.0 - 1e-12


class TestVariants:
    def test_truncated_kernel_with_full_memory_is_identical(
            self, small_open_system):
        tensors, sdef, ops, _, h_s = small_open_system
        rho0 = default_initial_state(sdef)
        dt, steps = 0.1, 40
        full = evolve(sdef, h_s, ops, tensors, rho0, dt, steps,
                      record_every=8)
        trunc_def = SystemDef(sys_modes=sdef.sys_modes, dims=sdef.dims,
                              hbar=sdef.hbar, temperature=sdef.temperature,
                              variant="truncated_kernel",
                              tau_c=(steps + 1) * dt)
        trunc = evolve(trunc_def, h_s, ops, tensors, rho0, dt, steps,
                       record_every=8)
        assert np.array_equal(full.rhos, trunc.rhos)

    def test_short_kernel_changes_dynamics(self, small_open_system):
        tensors, sdef, ops, _, h_s = small_open_system
        rho0 = default_initial_state(sdef)
        dt, steps = 0.1, 40
        full = evolve(sdef, h_s, ops, tensors, rho0, dt, steps)
        trunc_def = SystemDef(sys_modes=sdef.sys_modes, dims=sdef.dims,
                              hbar=sdef.hbar, temperature=sdef.temperature,
                              variant="truncated_kernel", tau_c=5 * dt)
        trunc = evolve(trunc_def, h_s, ops, tensors, rho0, dt, steps)
        assert not np.array_equal(full.rhos, trunc.rhos)
        # same physics to leading order, so still close
        assert trace_distance(full.rhos[-1], trunc.rhos[-1]) <= 1e-2

    def test_single_mode_variant_runs(self):
        tensors = make_tensors(OM2, THIRD_1SYS)
        sdef = SystemDef(sys_modes=(0,), dims=4, hbar=1.0,
                         variant="low_mode_in_bath")
        ops = build_fock_operators(sdef)
        ren = renormalize(tensors, sdef)
        h_s = build_system_hamiltonian(tensors, sdef, ren, ops=ops)
        rho0 = default_initial_state(sdef)
        res = evolve(sdef, h_s, ops, tensors, rho0, 0.1, 50, record_every=10)
        assert res.trace_error <= 1e-10
        assert res.rhos.shape == (6, 4, 4)


class TestRecording:
    def test_thinning_matches_dense_history(self, small_open_system):
        tensors, sdef, ops, _, h_s = small_open_system
        rho0 = default_initial_state(sdef)
        dense = evolve(sdef, h_s, ops, tensors, rho0, 0.1, 24, record_every=1)
        thin = evolve(sdef, h_s, ops, tensors, rho0, 0.1, 24, record_every=8)
        assert np.allclose(thin.times, dense.times[::8])
        assert np.array_equal(thin.rhos, dense.rhos[::8])

    def test_time_grid(self, small_open_system):
        tensors, sdef, ops, _, h_s = small_open_system
        rho0 = default_initial_state(sdef)
        res = evolve(sdef, h_s, ops, tensors, rho0, 0.2, 10, record_every=5)
        assert np.allclose(res.times, [0.0, 1.0, 2.0])


class TestValidation:
    def test_bad_arguments(self, small_open_system):
        tensors, sdef, ops, _, h_s = small_open_system
        rho0 = default_initial_state(sdef)
        with pytest.raises(ConfigError):
            evolve(sdef, h_s, ops, tensors, rho0, 0.0, 10)
        with pytest.raises(ConfigError):
            evolve(sdef, h_s, ops, tensors, rho0, 0.1, 0)
        with pytest.raises(ConfigError):
            evolve(sdef, h_s, ops, tensors, np.eye(3, dtype=complex) / 3.0,
                   0.1, 10)
        with pytest.raises(NumericalError):
            evolve(sdef, h_s, ops, tensors,
                   2.0 * default_initial_state(sdef), 0.1, 10)

    def test_mismatched_correlation_grid(self, small_open_system):
        tensors, sdef, ops, _, h_s = small_open_system
        rho0 = default_initial_state(sdef)
        short = build_correlation_table(tensors, sdef, 0.1 * np.arange(5))
        with pytest.raises(ConfigError):
            evolve(sdef, h_s, ops, tensors, rho0, 0.1, 10, corr=short)
        wrong_dt = build_correlation_table(tensors, sdef, 0.2 * np.arange(11))
        with pytest.raises(ConfigError):
            evolve(sdef, h_s, ops, tensors, rho0, 0.1, 10, corr=wrong_dt)

    def test_operator_count_mismatch(self, small_open_system):
        tensors, sdef, ops, _, h_s = small_open_system
        rho0 = default_initial_state(sdef)
        two_mode = SystemDef(sys_modes=(0, 1), dims=4, hbar=1.0)
        corr5 = build_correlation_table(tensors, two_mode,
                                        0.1 * np.arange(11))
        with pytest.raises(ConfigError):
            evolve(sdef, h_s, ops, tensors, rho0, 0.1, 10, corr=corr5)

    def test_unstable_step_aborts(self):
        strong = make_tensors(OM2, [((0, 1, 1), 1.8), ((0, 2, 2), -1.5)])
        sdef = SystemDef(sys_modes=(0,), dims=4, hbar=1.0)
        ops = build_fock_operators(sdef)
        ren = renormalize(strong, sdef)
        h_s = build_system_hamiltonian(strong, sdef, ren, ops=ops)
        rho0 = default_initial_state(sdef)
        with pytest.raises(NumericalError):
            evolve(sdef, h_s, ops, strong, rho0, 5.0, 60)
