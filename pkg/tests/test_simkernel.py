import numpy as np
import pytest

from fanout_dqst.qcore import BitVector, DensityMatrix, DimensionError, Ket, random_density_matrix
from fanout_dqst.simkernel import (
    CountTable,
    NoiseModel,
    OutcomeDistribution,
    Setting,
    TargetKind,
    TargetSpec,
    counts_from_codes,
    exact_distribution,
    joint_state,
    outcome_distribution,
    prepare_target,
    sample_shots,
    trajectory_counts,
    trajectory_ghz_counts,
)
from fanout_dqst.twirl import sample_twirls
from fanout_dqst.dqst import ghz_fidelity_estimate, ghz_fidelity_exact
import oracles


def bits(s):
    return BitVector.from_string(s)


class TestPrepareTarget:
    def test_ghz2(self):
        m = prepare_target(TargetSpec("GHZ", 2)).mat
        for i in (0, 3):
            for j in (0, 3):
                assert m[i, j] == pytest.approx(0.5)
        assert np.count_nonzero(np.abs(m) > 1e-15) == 4

    def test_all_plus(self):
        assert np.allclose(prepare_target(TargetSpec("AllPlus", 1)).mat, 0.5)

    def test_all_zero(self):
        m = prepare_target(TargetSpec(TargetKind.ALL_ZERO, 3)).mat
        assert m[0, 0] == 1 and np.trace(m) == 1

    def test_state_prep_depol(self):
        m = prepare_target(TargetSpec("GHZ", 3), NoiseModel(state_prep_depol=0.1)).mat
        assert m[0, 0].real == pytest.approx(0.5 * 0.9 + 0.1 / 8)
        assert m[7, 7].real == pytest.approx(0.4625)

    def test_explicit(self, rng):
        rho = random_density_matrix(2, rng)
        assert np.allclose(prepare_target(TargetSpec("ExplicitMatrix", 2, rho.mat)).mat, rho.mat)
        with pytest.raises(DimensionError):
            TargetSpec("ExplicitMatrix", 3, rho.mat)

    def test_dense_cap(self):
        with pytest.raises(DimensionError):
            prepare_target(TargetSpec("GHZ", 11))


class TestNoiseModel:
    def test_ranges(self):
        with pytest.raises(ValueError):
            NoiseModel(two_qubit_depol=1.5)
        with pytest.raises(ValueError):
            NoiseModel(readout_flip=(1.0, 0.0))

    def test_per_qubit(self):
        nm = NoiseModel(readout_flip=[(0.1, 0.2), (0.0, 0.3)])
        assert nm.per_qubit and nm.readout_pairs(2)[1] == (0.0, 0.3)
        with pytest.raises(DimensionError):
            nm.readout_pairs(3)

    def test_setting_fold_must_be_odd(self):
        with pytest.raises(ValueError):
            Setting(bits("1"), "X", 2)
        with pytest.raises(ValueError):
            Setting(bits("1"), "Z")


class TestJointState:
    def test_zero_state_gives_bell(self):
        lam = joint_state(DensityMatrix([[1, 0], [0, 0]]), bits("1")).mat
        bell = np.zeros(4)
        bell[[0, 3]] = 2**-0.5
        assert np.allclose(lam, np.outer(bell, bell))

    def test_k_zero_is_product_with_plus(self, rng):
        rho = random_density_matrix(2, rng)
        lam = joint_state(rho, bits("00")).mat
        assert np.allclose(lam, np.kron(rho.mat, np.full((2, 2), 0.5)), atol=1e-15)

    @pytest.mark.parametrize("k", ["01", "10", "11"])
    def test_matches_full_operator_oracle(self, rng, k):
        rho = random_density_matrix(2, rng)
        lam = joint_state(rho, bits(k)).mat
        assert np.allclose(lam, oracles.joint_state(rho.mat, [int(c) for c in k]), atol=1e-14)

    @pytest.mark.parametrize("k,fold", [("1", 3), ("011", 1), ("101", 3), ("111", 5)])
    def test_noisy_matches_kraus_oracle(self, rng, k, fold):
        n = len(k)
        rho = random_density_matrix(n, rng)
        lam = joint_state(rho, bits(k), NoiseModel(two_qubit_depol=0.07), fold).mat
        ref = oracles.joint_state(rho.mat, [int(c) for c in k], p=0.07, fold=fold)
        assert np.allclose(lam, ref, atol=1e-13)

    def test_fold_invariance_without_noise(self, rng):
        rho = random_density_matrix(3, rng)
        a = joint_state(rho, bits("110"), fold=1).mat
        b = joint_state(rho, bits("110"), fold=3).mat
        assert np.array_equal(a, b)

    def test_meter_trace_is_symmetrized_state(self, rng):
        rho = random_density_matrix(3, rng)
        k = bits("101")
        lam = joint_state(rho, k).mat.reshape(8, 2, 8, 2)
        red = np.einsum("imjm->ij", lam)
        u = oracles.kron(oracles.X, np.eye(2), oracles.X)
        assert np.allclose(red, 0.5 * (rho.mat + u @ rho.mat @ u), atol=1e-15)

    def test_single_qubit_depol_fold3(self):
        p = 0.1
        noise = NoiseModel(two_qubit_depol=p)
        s = Setting(bits("1"), "X", 3)
        for mat in (np.eye(2) / 2, np.full((2, 2), 0.5)):
            dist = exact_distribution(DensityMatrix(mat), s, noise)
            ref = oracles.outcome_probs(oracles.joint_state(mat, [1], p=p, fold=3), "X")
            assert np.allclose(dist.probs, ref, atol=1e-14)
        # for |+>, each depolarizing step scales every pair coherence by (1 - p)
        assert dist.probs[0, 0] - dist.probs[0, 1] == pytest.approx(0.5 * (1 - p) ** 3, abs=1e-14)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(DimensionError):
            joint_state(random_density_matrix(2, rng), bits("101"))


class TestOutcomeDistribution:
    def test_ghz_all_ones(self):
        for n in (2, 4, 6):
            rho = prepare_target(TargetSpec("GHZ", n))
            probs = exact_distribution(rho, Setting(BitVector.ones(n), "X")).probs
            expect = np.zeros_like(probs)
            expect[0, 0] = expect[-1, 0] = 0.5
            assert np.allclose(probs, expect, atol=1e-15)

    def test_k_zero_populations(self, rng):
        rho = random_density_matrix(3, rng)
        probs = exact_distribution(rho, Setting(bits("000"), "X")).probs
        assert np.allclose(probs[:, 0], np.diag(rho.mat).real)
        assert np.allclose(probs[:, 1], 0, atol=1e-15)

    def test_plus_state_y_basis(self):
        rho = DensityMatrix(np.full((2, 2), 0.5))
        probs = exact_distribution(rho, Setting(bits("1"), "Y")).probs
        assert np.allclose(probs, 0.25)

    @pytest.mark.parametrize("basis", ["X", "Y"])
    def test_matches_projector_oracle_with_readout(self, rng, basis):
        rho = random_density_matrix(2, rng)
        pairs = [(0.01, 0.04), (0.02, 0.03), (0.05, 0.0)]
        noise = NoiseModel(two_qubit_depol=0.03, readout_flip=pairs)
        dist = exact_distribution(rho, Setting(bits("11"), basis, 3), noise)
        ref = oracles.outcome_probs(oracles.joint_state(rho.mat, [1, 1], 0.03, 3), basis, pairs)
        assert np.allclose(dist.probs, ref, atol=1e-14)
        assert dist.probs.sum() == pytest.approx(1, abs=1e-10)

    def test_marginal_is_born_rule(self, rng):
        rho = random_density_matrix(3, rng)
        k = bits("011")
        probs = exact_distribution(rho, Setting(k, "Y")).probs
        u = oracles.kron(np.eye(2), oracles.X, oracles.X)
        sym = 0.5 * (rho.mat + u @ rho.mat @ u)
        assert np.allclose(probs.sum(axis=1), np.diag(sym).real, atol=1e-15)

    def test_zero_noise_bit_exact(self, rng):
        rho = random_density_matrix(2, rng)
        s = Setting(bits("10"), "X")
        a = exact_distribution(rho, s).probs
        b = exact_distribution(rho, s, NoiseModel()).probs
        assert np.array_equal(a, b)

    def test_bad_basis(self, rng):
        lam = joint_state(random_density_matrix(1, rng), bits("1"))
        with pytest.raises(ValueError):
            outcome_distribution(lam, "Z")


class TestSampleShots:
    def test_deterministic_distribution(self):
        probs = np.zeros((4, 2))
        probs[2, 0] = 1
        t = sample_shots(OutcomeDistribution(Setting(bits("01"), "X"), probs), 100, 5)
        assert t.counts == {(2, 1): 100}

    def test_reproducible(self, rng):
        rho = random_density_matrix(2, rng)
        d = exact_distribution(rho, Setting(bits("11"), "X"))
        assert sample_shots(d, 1000, 99) == sample_shots(d, 1000, 99)
        assert sample_shots(d, 1000, 99).counts != sample_shots(d, 1000, 100).counts

    def test_uniform_law_of_large_numbers(self):
        probs = np.array([[0.25, 0.25], [0.25, 0.25]])
        t = sample_shots(OutcomeDistribution(Setting(bits("1"), "X"), probs), 10**6, 3)
        f = t.frequencies().ravel()
        sigma = np.sqrt(0.25 * 0.75 / 10**6)
        assert np.all(np.abs(f - 0.25) < 3 * sigma)

    def test_golden_fair_coin(self):
        # frozen from the first run of the seeded stream
        dist = OutcomeDistribution(Setting(bits("0"), "X"), np.array([[0.5, 0.0], [0.5, 0.0]]))
        t = sample_shots(dist, 10, 42)
        assert (t.get(0, 1), t.get(1, 1)) == GOLDEN_COIN

    def test_invalid_distribution(self):
        bad = OutcomeDistribution(Setting(bits("1"), "X"), np.array([[0.7, 0.0], [0.7, 0.0]]))
        with pytest.raises(ValueError):
            sample_shots(bad, 10, 0)
        with pytest.raises(ValueError):
            sample_shots(OutcomeDistribution(Setting(bits("1"), "X"), np.full((2, 2), 0.25)), 0, 0)

    def test_count_table_invariants(self):
        with pytest.raises(ValueError):
            CountTable(Setting(bits("1"), "X"), 10, {(0, 1): 9})
        a = CountTable(Setting(bits("1"), "X"), 3, {(0, 1): 3})
        b = CountTable(Setting(bits("1"), "X"), 2, {(0, 1): 1, (1, -1): 1})
        m = a.merge(b)
        assert m.shots == 5 and m.get(0, 1) == 4 and m.get(1, -1) == 1

    def test_counts_from_codes(self):
        t = counts_from_codes(Setting(bits("11"), "X"), np.array([0, 0, 7, 3]))
        assert t.counts == {(0, 1): 2, (3, -1): 1, (1, -1): 1}


GOLDEN_COIN = (3, 7)


class TestTrajectory:
    def test_zero_noise_n20_only_two_outcomes(self):
        t = trajectory_ghz_counts(20, NoiseModel(), 1, 20_000, seed=1)
        ones = (1 << 20) - 1
        assert set(t.counts) == {(0, 1), (ones, 1)}
        assert abs(t.get(0, 1) / t.shots - 0.5) < 3 * np.sqrt(0.25 / t.shots)

    def test_zero_noise_n10_fidelity_one(self):
        f, err = ghz_fidelity_estimate(trajectory_ghz_counts(10, NoiseModel(), 1, 100_000, seed=2))
        assert f == pytest.approx(1.0, abs=max(3 * err, 1e-12))

    def test_n4_matches_dense(self):
        noise = NoiseModel(two_qubit_depol=0.05, readout_flip=(0.02, 0.03))
        for fold in (1, 3):
            t = trajectory_ghz_counts(4, noise, fold, 200_000, seed=fold)
            exact = ghz_fidelity_exact(exact_distribution(prepare_target(TargetSpec("GHZ", 4)), t.setting, noise))
            f, err = ghz_fidelity_estimate(t)
            assert abs(f - exact) < 3 * err

    @pytest.mark.parametrize("basis,k", [("X", "101"), ("Y", "011"), ("X", "000")])
    def test_first_moments_match_dense(self, basis, k):
        # trajectory on a non-GHZ pure state: every cell agrees with the dense model within 4 sigma
        psi = Ket(np.array([0.1, 0.3j, -0.2, 0.5, 0.4, -0.1j, 0.35, 0.55]) / np.linalg.norm([0.1, 0.3, 0.2, 0.5, 0.4, 0.1, 0.35, 0.55]))
        noise = NoiseModel(two_qubit_depol=0.08, readout_flip=(0.03, 0.01), state_prep_depol=0.05)
        s = Setting(bits(k), basis, 3)
        shots = 200_000
        t = trajectory_counts(psi, s, noise, shots, seed=7)
        p = exact_distribution(prepare_target(TargetSpec("ExplicitMatrix", 3, DensityMatrix.from_ket(psi).mat), noise), s, noise).probs
        f = t.frequencies()
        sigma = np.sqrt(np.clip(p * (1 - p), 1e-12, None) / shots)
        assert np.all(np.abs(f - p) < 4 * sigma + 1e-9)

    def test_twirled_trajectory_matches_dense(self):
        noise = NoiseModel(two_qubit_depol=0.05)
        s = Setting(BitVector.ones(3), "X", 3)
        rng = np.random.default_rng(4)
        tw = sample_twirls(9, rng)
        t = trajectory_counts(Ket.ghz(3), s, noise, 200_000, 11, twirls=tw)
        p = exact_distribution(prepare_target(TargetSpec("GHZ", 3)), s, noise, tw).probs
        sigma = np.sqrt(np.clip(p * (1 - p), 1e-12, None) / 200_000)
        assert np.all(np.abs(t.frequencies() - p) < 4 * sigma + 1e-9)

    def test_trajectory_cap(self):
        with pytest.raises(DimensionError):
            trajectory_ghz_counts(21, NoiseModel(), 1, 10, 0)

    def test_reproducible(self):
        noise = NoiseModel(two_qubit_depol=0.02, readout_flip=(0.01, 0.01))
        a = trajectory_ghz_counts(12, noise, 3, 5000, seed=9)
        b = trajectory_ghz_counts(12, noise, 3, 5000, seed=9)
        assert a == b
