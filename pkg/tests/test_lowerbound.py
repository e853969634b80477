import itertools
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmsb import lowerbound as lb
from mmsb.errors import ConstructionWarning, DomainError, ParameterError, SizeError
from mmsb.model import CommunityMatrix, MembershipMatrix, ProbabilityOperator


def scalar_operator(p):
    return ProbabilityOperator(
        MembershipMatrix(np.ones((1, 1))), CommunityMatrix(np.array([[p]]), 1.0, normalized=False)
    )


def hamming_pairs(T1, T2):
    iu = np.triu_indices(T1.shape[0], 1)
    return int(np.count_nonzero(T1[iu] != T2[iu]))


class TestCodes:
    def test_vg_m8(self):
        code = lb.vg_code(8)
        assert np.any(np.all(code.words == 0, axis=1))
        assert len(code) >= 3
        for a, b in itertools.combinations(code.words, 2):
            assert np.count_nonzero(a != b) >= 1

    @pytest.mark.parametrize("m", [8, 10, 16, 21])
    def test_vg_distance(self, m):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConstructionWarning)
            code = lb.vg_code(m)
        d = math.ceil(m / 8)
        assert code.min_distance >= d
        for a, b in itertools.combinations(code.words, 2):
            assert np.count_nonzero(a != b) >= d

    def test_vg_m16_size(self):
        assert len(lb.vg_code(16)) >= 4

    def test_code_validation(self):
        with pytest.raises(ParameterError):
            lb.BinaryCode(2, np.array([[1, 0], [0, 1]]), 1)
        with pytest.raises(ParameterError):
            lb.BinaryCode(2, np.array([[0, 0], [1, 0]]), 2)

    def test_two_communities(self):
        code = lb.perm_resistant_code(2, lb.full_code(1))
        assert sorted(code.words[:, 0].tolist()) == [0, 1]
        assert code.words[-1].tolist() == [0]

    def test_five_communities_certified(self):
        base = lb.vg_code(10)
        code = lb.perm_resistant_code(5, base)
        assert code.perm_distance >= 1
        assert np.all(code.words[-1] == 0)
        # independent check through the T matrices over all 120 relabelings
        for w1, w2 in itertools.permutations(code.words, 2):
            T1, T2 = lb.omega_matrix(5, w1), lb.omega_matrix(5, w2)
            for p in itertools.permutations(range(5)):
                assert hamming_pairs(T1[np.ix_(p, p)], T2) >= code.perm_distance

    @pytest.mark.parametrize("K", [3, 4, 5])
    def test_relabel_maps_match_matrix_relabeling(self, K, rng):
        maps = lb.relabel_maps(K)
        w = rng.integers(0, 2, K * (K - 1) // 2)
        for r, p in enumerate(itertools.permutations(range(K))):
            assert np.array_equal(lb.omega_matrix(K, w[maps[r]]), lb.omega_matrix(K, w)[np.ix_(p, p)])

    def test_permutation_guard(self):
        with pytest.raises(SizeError):
            lb.relabel_maps(10)

    def test_length_mismatch(self):
        with pytest.raises(ParameterError):
            lb.perm_resistant_code(4, lb.full_code(5))


class TestInstances:
    def test_three_communities(self):
        inst = lb.hard_instance(3, 256, 1.0, np.zeros(3))
        assert [len(s) for s in inst.theta0.pure_sets] == [128, 96, 32]
        assert inst.n_mix == 0
        assert inst.mu == pytest.approx(3 * math.sqrt(2) / 1152, rel=1e-15)
        assert lb.pure_counts(3, 256) == [128, 96, 32]

    def test_zero_word(self):
        B = lb.b_omega(4, 100, 0.5, np.zeros(6))
        assert np.allclose(np.diag(B), 0.5)
        assert np.allclose(B[~np.eye(4, dtype=bool)], 0.25)

    @pytest.mark.parametrize("K", [2, 3, 5, 8])
    def test_zero_word_spectrum(self, K):
        vals = np.sort(np.linalg.eigvalsh(lb.b_omega(K, 100, 1.0, np.zeros(K * (K - 1) // 2))))
        want = np.sort([0.25 + K / 4] + [0.25] * (K - 1))
        assert np.max(np.abs(vals - want)) <= 1e-12

    def test_entries(self, rng):
        K, n = 4, 2048
        mu = lb.mu_for(K, 0.5)
        w = rng.integers(0, 2, 6)
        inst = lb.hard_instance(K, n, 0.5, w)
        B = inst.b_omega.bbar
        for s, (i, j) in enumerate(lb.pair_index(K)):
            assert B[i, j] == pytest.approx(0.25 + w[s] * mu / n, abs=1e-15)
        assert np.allclose(np.diag(B), 0.5)
        assert np.allclose(inst.probability().dense(), 0.5 * inst.theta0.rows @ B @ inst.theta0.rows.T)

    def test_sparsity_precondition(self):
        with pytest.raises(ParameterError, match=r"n\^\(-1/3\)"):
            lb.hard_instance(3, 256, 256**-0.5, np.zeros(3))

    def test_scale_precondition(self):
        with pytest.raises(ParameterError, match=r"n/\(8K\)"):
            lb.check_preconditions(600, 1000, 0.2)

    def test_large_k_regime(self):
        assert lb.mu_for(512, 1.0) == pytest.approx(512 / 96)
        assert lb.mu_for(511, 1.0) == pytest.approx(511 * math.sqrt(2) / 1152)

    def test_counts_can_exceed_small_n(self):
        # the ceiling schedule overshoots for small n, e.g. 5 + 4 + 2 > 9
        assert sum(lb.pure_counts(3, 9)) > 9
        with pytest.raises(ParameterError):
            lb.hard_membership(3, 9)

    @settings(max_examples=60, deadline=None)
    @given(K=st.integers(2, 6), extra=st.integers(0, 5000))
    def test_mixed_budget(self, K, extra):
        n = K * 2 ** (K + 5) + extra
        counts = lb.pure_counts(K, n)
        assert sum(counts) <= n
        theta = lb.hard_membership(K, n)
        n_mix = n - sum(counts)
        assert int(np.count_nonzero(~theta.pure_mask)) == n_mix
        assert n_mix <= n / 2 ** (K + 5)
        assert np.allclose(theta.rows[~theta.pure_mask], 1 / K)

    @pytest.mark.parametrize("K", [2, 3, 4])
    def test_frobenius_hamming_identity(self, K):
        n, mu = 500, 0.7
        m = K * (K - 1) // 2
        words = lb.full_code(m).words
        for w1, w2 in itertools.product(words, repeat=2):
            B1, B2 = lb.b_omega(K, n, mu, w1), lb.b_omega(K, n, mu, w2)
            T1, T2 = lb.omega_matrix(K, w1), lb.omega_matrix(K, w2)
            for p in itertools.permutations(range(K)):
                lhs = np.sum((B1[np.ix_(p, p)] - B2) ** 2)
                rhs = 2 * (mu / n) ** 2 * hamming_pairs(T1[np.ix_(p, p)], T2)
                assert abs(lhs - rhs) <= 1e-12


class TestKL:
    def test_identical(self, op300):
        assert lb.kl_divergence(op300, op300) == 0.0

    def test_single_pair(self):
        got = lb.kl_divergence(scalar_operator(0.5), scalar_operator(0.25))
        assert got == pytest.approx(0.14384103622589042, rel=1e-12)

    def test_absolute_continuity(self):
        with pytest.raises(DomainError):
            lb.kl_divergence(scalar_operator(0.5), scalar_operator(0.0))
        with pytest.raises(DomainError):
            lb.kl_divergence(scalar_operator(0.5), scalar_operator(1.0))

    def test_matches_dense_sum(self, rng):
        def op(seed):
            theta = MembershipMatrix(np.random.default_rng(seed).dirichlet([1, 1], size=40))
            return ProbabilityOperator(theta, CommunityMatrix(np.array([[1.0, 0.3], [0.3, 0.6]]), 0.5))

        p1, p0 = op(1), op(2)
        P1, P0 = p1.dense(), p0.dense()
        iu = np.triu_indices(40)
        a, b = P1[iu], P0[iu]
        want = np.sum(a * np.log(a / b) + (1 - a) * np.log((1 - a) / (1 - b)))
        assert lb.kl_divergence(p1, p0) == pytest.approx(want, rel=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(p=st.floats(0.01, 0.99), q=st.floats(0.01, 0.99))
    def test_nonnegative(self, p, q):
        assert lb.kl_divergence(scalar_operator(p), scalar_operator(q)) >= 0.0

    def test_hard_instance_bound(self, rng):
        K, n, rho = 3, 256, 1.0
        mu = lb.mu_for(K, rho)
        w = rng.integers(0, 2, 3)
        w[0] = 1
        p1 = lb.hard_instance(K, n, rho, w).probability()
        p0 = lb.hard_instance(K, n, rho, np.zeros(3)).probability()
        assert 0 < lb.kl_divergence(p1, p0) <= 8 * mu**2 * rho


class TestCertificate:
    def test_three_communities(self):
        report = lb.verify_theorem2(3, 256, 1.0)
        assert lb.all_passed(report)
        claims = {r["claim"]: r for r in report}
        assert claims["pure-count schedule"]["lhs"] == [128, 96, 32]
        assert claims["two-point KL"]["lhs"] <= 3.2
        for r in report:
            assert set(r) == {"claim", "paper_ref", "status", "lhs", "rhs"}

    def test_two_communities_branch(self):
        report = lb.verify_theorem2(2, 128, 0.9)
        assert lb.all_passed(report)
        names = [r["claim"] for r in report]
        assert "two-point separation" in names and "two-point KL" in names

    def test_precondition(self):
        with pytest.raises(ParameterError):
            lb.verify_theorem2(3, 256, 256**-0.5)
