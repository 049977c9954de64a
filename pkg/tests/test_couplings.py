"""Normal-coordinate coupling tensors against dense contraction oracles."""

import itertools

import numpy as np
import pytest

from kinklab.errors import ConfigError
from kinklab.couplings import CouplingTensors, coupling_slice, transform
from kinklab.models import DerivativeBundle, derivatives, potential_energy


def dense_tensors(bundle, basis):
    """Reference contraction, no sparsity, no thresholds."""
    w = basis.vectors
    third = np.einsum("m,mi,mj,mk->ijk", bundle.third_diag, w, w, w)
    fourth = np.einsum("m,mi,mj,mk,ml->ijkl", bundle.fourth_diag, w, w, w, w)
    return third, fourth


@pytest.fixture(scope="module")
def small_case(phi4_n6):
    spec, eq, basis = phi4_n6
    bundle = derivatives(spec, eq.positions)
    tensors = transform(bundle, basis, threshold=0.0)
    return spec, eq, basis, bundle, tensors


class TestTransformOracle:
    def test_third_matches_dense_contraction(self, small_case):
        _, _, basis, bundle, tensors = small_case
        third, _ = dense_tensors(bundle, basis)
        scale = np.max(np.abs(third))
        n = basis.n
        for i, j, k in itertools.product(range(n), repeat=3):
            assert tensors.get_third(i, j, k) == pytest.approx(
                third[i, j, k], abs=1e-12 * scale)

    def test_fourth_matches_dense_contraction(self, small_case):
        _, _, basis, bundle, tensors = small_case
        _, fourth = dense_tensors(bundle, basis)
        scale = np.max(np.abs(fourth))
        n = basis.n
        for idx in itertools.product(range(n), repeat=4):
            assert tensors.get_fourth(*idx) == pytest.approx(
                fourth[idx], abs=1e-12 * scale)

    def test_permutation_invariance(self, small_case):
        _, _, _, _, tensors = small_case
        v = tensors.get_third(0, 2, 4)
        for perm in itertools.permutations((0, 2, 4)):
            assert tensors.get_third(*perm) == v
        v4 = tensors.get_fourth(0, 1, 2, 5)
        for perm in itertools.permutations((0, 1, 2, 5)):
            assert tensors.get_fourth(*perm) == v4

    def test_omega2_is_squared_spectrum(self, small_case):
        _, _, basis, _, tensors = small_case
        assert np.array_equal(tensors.omega2, basis.freqs ** 2)

    def test_dimension_mismatch_rejected(self, small_case):
        _, _, basis, bundle, _ = small_case
        bad = DerivativeBundle(
            grad=bundle.grad, hessian=bundle.hessian,
            third_diag=bundle.third_diag[:-1], fourth_diag=bundle.fourth_diag)
        with pytest.raises(ConfigError):
            transform(bad, basis)


class TestQuarticTaylor:
    def test_energy_expansion_closes(self, small_case):
        # phi4 is an exact quartic polynomial: the normal-coordinate
        # expansion through 4th order must reproduce the energy shift
        spec, eq, basis, bundle, tensors = small_case
        rng = np.random.default_rng(11)
        n = basis.n
        theta = 0.05 * rng.standard_normal(n)
        x = eq.positions + basis.vectors @ theta
        actual = potential_energy(spec, x) - eq.energy

        quad = 0.5 * float(tensors.omega2 @ theta ** 2)
        cubic = 0.0
        for i, j, k in itertools.product(range(n), repeat=3):
            cubic += tensors.get_third(i, j, k) * theta[i] * theta[j] * theta[k]
        cubic /= 6.0
        quartic = 0.0
        for idx in itertools.product(range(n), repeat=4):
            quartic += (tensors.get_fourth(*idx)
                        * theta[idx[0]] * theta[idx[1]]
                        * theta[idx[2]] * theta[idx[3]])
        quartic /= 24.0
        expansion = quad + cubic + quartic
        assert expansion == pytest.approx(actual, abs=1e-10 * max(1.0, abs(actual)))


class TestParitySelection:
    def test_forbidden_cubic_entries_exactly_absent(self, phi4_n60):
        # reflection-symmetric kink: the cubic coefficient field is odd, so
        # entries survive only when the mode parities multiply to odd
        spec, eq, basis = phi4_n60
        bundle = derivatives(spec, eq.positions)
        tensors = transform(bundle, basis)
        hi, lo = basis.localized_high_low()
        # hi mode is odd (anti-symmetric), lo mode even-like
        assert tensors.get_third(lo, lo, lo) == 0.0
        assert tensors.get_third(hi, hi, lo) == 0.0
        assert tensors.get_third(hi, hi, hi) != 0.0
        assert tensors.get_third(hi, lo, lo) != 0.0

    def test_threshold_drops_small_entries(self, phi4_n6):
        spec, eq, basis = phi4_n6
        bundle = derivatives(spec, eq.positions)
        loose = transform(bundle, basis, threshold=1.0)
        tight = transform(bundle, basis, threshold=0.0)
        assert len(loose.third_vals) < len(tight.third_vals)
        assert np.all(np.abs(loose.third_vals) >= 1.0)


class TestSlices:
    def test_third_slice_consistent_with_gets(self, small_case):
        _, _, basis, _, tensors = small_case
        n = basis.n
        for mode in range(n):
            mat = tensors.third_slice(mode)
            assert np.array_equal(mat, mat.T)
            for j in range(n):
                for k in range(n):
                    assert mat[j, k] == tensors.get_third(mode, j, k)

    def test_fourth_pair_slice_consistent_with_gets(self, small_case):
        _, _, basis, _, tensors = small_case
        n = basis.n
        for i, j in ((0, 0), (0, 3), (2, 5), (5, 5)):
            mat = tensors.fourth_pair_slice(i, j)
            for k in range(n):
                for l in range(n):
                    assert mat[k, l] == tensors.get_fourth(i, j, k, l)

    def test_coupling_slice_orders(self, small_case):
        _, _, _, _, tensors = small_case
        s3 = coupling_slice(tensors, 0, 3)
        assert np.allclose(s3, np.abs(tensors.third_slice(0)) / 6.0)
        s4 = coupling_slice(tensors, 1, 4)
        assert np.allclose(s4, np.abs(tensors.fourth_pair_slice(1, 1)) / 24.0)
        with pytest.raises(ConfigError):
            coupling_slice(tensors, 0, 5)

    def test_mode_range_checked(self, small_case):
        _, _, _, _, tensors = small_case
        with pytest.raises(ConfigError):
            tensors.third_slice(tensors.n)


class TestHarmonicLimit:
    def test_zero_anharmonicity_gives_empty_tensors(self, phi4_n6):
        _, eq, basis = phi4_n6
        n = basis.n
        bundle = DerivativeBundle(
            grad=np.zeros(n), hessian=np.eye(n),
            third_diag=np.zeros(n), fourth_diag=np.zeros(n))
        tensors = transform(bundle, basis)
        assert len(tensors.third_vals) == 0
        assert len(tensors.fourth_vals) == 0
        assert tensors.get_third(0, 1, 2) == 0.0
        assert tensors.get_fourth(0, 1, 2, 3) == 0.0


class TestPersistence:
    def test_save_load_roundtrip(self, small_case, tmp_path):
        _, _, _, _, tensors = small_case
        path = tmp_path / "tensors.npz"
        tensors.save(path)
        again = CouplingTensors.load(path)
        assert np.array_equal(again.omega2, tensors.omega2)
        assert np.array_equal(again.third_keys, tensors.third_keys)
        assert np.array_equal(again.third_vals, tensors.third_vals)
        assert np.array_equal(again.fourth_keys, tensors.fourth_keys)
        assert np.array_equal(again.fourth_vals, tensors.fourth_vals)
        assert again.threshold_third == tensors.threshold_third
