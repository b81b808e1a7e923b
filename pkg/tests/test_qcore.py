import numpy as np
import pytest

from fanout_dqst.qcore import (
    BitVector,
    DensityMatrix,
    DimensionError,
    Ket,
    PauliString,
    StateError,
    fidelity,
    pauli_matrix,
    project_simplex,
    pure_fidelity,
    random_density_matrix,
    trace_distance,
)
from oracles import X, Z, random_state, simplex_projection_bisect, uhlmann_fidelity_scipy


def dm(m):
    return DensityMatrix(np.asarray(m, dtype=complex))


ZERO = dm([[1, 0], [0, 0]])
ONE = dm([[0, 0], [0, 1]])
MIXED = dm(np.eye(2) / 2)


class TestBitVector:
    def test_msb_convention(self):
        assert BitVector.from_bits([1, 0, 1]).value == 5
        assert str(BitVector(3, 5)) == "101"
        assert BitVector.from_string("0011").support() == [2, 3]

    def test_mod2_addition(self):
        a, k = BitVector.from_string("0110"), BitVector.from_string("1100")
        assert str(a + k) == "1010"
        assert (a + k) + k == a
        assert a + a == BitVector.zeros(4)

    def test_width_mismatch(self):
        with pytest.raises(DimensionError):
            BitVector(2, 1) + BitVector(3, 1)

    def test_value_out_of_range(self):
        with pytest.raises(ValueError):
            BitVector(2, 4)

    def test_weight(self):
        assert BitVector.ones(5).weight == 5


class TestDensityMatrix:
    def test_rejects_non_hermitian(self):
        with pytest.raises(StateError):
            DensityMatrix([[0.5, 0.1], [0.0, 0.5]])

    def test_rejects_bad_trace(self):
        with pytest.raises(StateError):
            DensityMatrix(np.eye(2))

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(StateError):
            DensityMatrix(np.diag([1.2, -0.2]))

    def test_tolerance_boundary(self):
        DensityMatrix(np.diag([1 + 5e-11, -5e-11]))

    def test_rejects_non_power_of_two(self):
        with pytest.raises(DimensionError):
            DensityMatrix(np.eye(3) / 3)

    def test_immutable(self):
        rho = dm(np.eye(2) / 2)
        with pytest.raises(ValueError):
            rho.mat[0, 0] = 1
        with pytest.raises(AttributeError):
            rho.mat = np.eye(2)

    def test_ket_norm(self):
        with pytest.raises(StateError):
            Ket([1, 1])
        assert Ket.ghz(3).amplitudes[[0, 7]] == pytest.approx([2**-0.5, 2**-0.5])


class TestFidelity:
    def test_identity_case(self, rng):
        rho = random_density_matrix(2, rng)
        assert fidelity(rho, rho) == pytest.approx(1, abs=1e-10)

    def test_orthogonal(self):
        assert fidelity(ZERO, ONE) == pytest.approx(0, abs=1e-12)

    def test_commuting_pair(self):
        # (Tr sqrt(diag(1,0) diag(.5,.5)))^2 = (sqrt(.5))^2
        assert fidelity(ZERO, MIXED) == pytest.approx(0.5, abs=1e-12)

    def test_matches_scipy_sqrtm(self, rng):
        for _ in range(10):
            a, b = random_state(2, rng), random_state(2, rng)
            assert fidelity(a, b) == pytest.approx(uhlmann_fidelity_scipy(a, b), abs=1e-8)

    def test_symmetric(self, rng):
        a, b = random_density_matrix(3, rng), random_density_matrix(3, rng, rank=2)
        assert fidelity(a, b) == pytest.approx(fidelity(b, a), abs=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            fidelity(ZERO, dm(np.eye(4) / 4))


class TestPureFidelity:
    def test_ghz_self(self):
        psi = Ket.ghz(4)
        assert pure_fidelity(psi, DensityMatrix.from_ket(psi)) == pytest.approx(1)

    def test_maximally_mixed_diagonal(self):
        assert pure_fidelity(Ket.basis(4, 0), DensityMatrix.maximally_mixed(4)) == pytest.approx(1 / 16)

    def test_dephased_bell(self):
        # dephasing with p = 0.5 on one qubit halves the GHZ_2 coherences: F = (1 + 0.5) / 2
        psi = Ket.ghz(2)
        rho = DensityMatrix.from_ket(psi).mat
        zq = np.kron(Z, np.eye(2))
        deph = 0.75 * rho + 0.25 * zq @ rho @ zq
        assert pure_fidelity(psi, DensityMatrix(deph)) == pytest.approx(0.75, abs=1e-12)

    def test_agrees_with_uhlmann(self, rng):
        psi = Ket.ghz(2)
        rho = random_density_matrix(2, rng)
        assert pure_fidelity(psi, rho) == pytest.approx(fidelity(DensityMatrix.from_ket(psi), rho), abs=1e-8)


class TestTraceDistance:
    def test_zero_and_one(self, rng):
        rho = random_density_matrix(2, rng)
        assert trace_distance(rho, rho) == pytest.approx(0, abs=1e-12)
        assert trace_distance(ZERO, ONE) == pytest.approx(1)

    def test_triangle(self, rng):
        a, b, c = (random_density_matrix(2, rng) for _ in range(3))
        assert trace_distance(a, c) <= trace_distance(a, b) + trace_distance(b, c) + 1e-12


class TestPauli:
    def test_single(self):
        assert np.array_equal(pauli_matrix("I"), np.eye(2))
        assert np.array_equal(pauli_matrix("X"), X)

    def test_kron_order(self):
        assert np.array_equal(pauli_matrix("XZ"), np.kron(X, Z))

    def test_phase_and_validation(self):
        assert np.array_equal(pauli_matrix(PauliString("Z", -1)), -Z)
        with pytest.raises(ValueError):
            PauliString("XQ")
        with pytest.raises(ValueError):
            PauliString("X", 2)

    def test_too_large(self):
        with pytest.raises(DimensionError):
            pauli_matrix("I" * 13)

    def test_bit_order_matches_bitvector(self):
        # X on qubit 0 flips the most significant bit of the basis index
        v = np.zeros(8)
        v[BitVector.from_string("001").value] = 1
        assert np.argmax(pauli_matrix("XII") @ v) == BitVector.from_string("101").value


class TestSimplex:
    def test_examples(self):
        assert np.allclose(project_simplex([1.2, -0.2]), [1, 0])
        assert np.allclose(project_simplex([0.6, 0.6]), [0.5, 0.5])

    def test_against_bisection(self, rng):
        for _ in range(50):
            v = rng.normal(size=rng.integers(1, 20)) * 2
            assert np.allclose(project_simplex(v), simplex_projection_bisect(v), atol=1e-10)
