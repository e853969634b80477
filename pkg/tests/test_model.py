import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmsb.errors import ParameterError
from mmsb.experiments import default_bbar
from mmsb.model import (
    CommunityMatrix,
    MembershipMatrix,
    ProbabilityOperator,
    SparseGraph,
    make_membership,
    sample_graph,
    sample_graph_coupled,
)

from conftest import standard_operator


class TestMembership:
    def test_benchmark_counts(self):
        th = make_membership(100, 3, 0.09, (1, 1, 1), 5)
        assert [len(s) for s in th.pure_sets] == [9, 9, 9]
        assert int((~th.pure_mask).sum()) == 73

    def test_all_pure(self):
        th = make_membership(4, 2, 0.5, (1, 1), 5)
        assert np.array_equal(th.rows, [[1, 0], [1, 0], [0, 1], [0, 1]])
        assert th.pure_mask.all()

    def test_mixed_rows_match_dirichlet_mean(self):
        th = make_membership(1000, 3, 0.09, (1, 1, 1), 5)
        mixed = th.rows[~th.pure_mask]
        # Dirichlet(1,1,1): each coordinate has variance 1/18
        sd = np.sqrt(1 / 18 / mixed.shape[0])
        assert np.all(np.abs(mixed.mean(axis=0) - 1 / 3) <= 5 * sd)

    @pytest.mark.parametrize("frac", [-0.1, 0.4])
    def test_invalid_fraction(self, frac):
        with pytest.raises(ParameterError):
            make_membership(100, 3, frac, (1, 1, 1), 0)

    def test_k_above_n(self):
        with pytest.raises(ParameterError):
            make_membership(2, 3, 0.0, (1, 1, 1), 0)

    def test_bad_alpha(self):
        with pytest.raises(ParameterError):
            make_membership(10, 3, 0.1, (1, 0, 1), 0)

    def test_rows_must_be_stochastic(self):
        with pytest.raises(ParameterError):
            MembershipMatrix(np.array([[0.5, 0.4]]))
        with pytest.raises(ParameterError):
            MembershipMatrix(np.array([[1.5, -0.5]]))

    def test_pure_sets_must_agree(self):
        rows = np.array([[1.0, 0.0], [0.5, 0.5]])
        with pytest.raises(ParameterError):
            MembershipMatrix(rows, pure_sets=([0, 1], []))
        assert MembershipMatrix(rows, pure_sets=([0], [])).pure_sets[0].tolist() == [0]

    def test_shuffle_is_a_permutation(self):
        a = make_membership(50, 3, 0.1, (1, 1, 1), 9)
        b = make_membership(50, 3, 0.1, (1, 1, 1), 9, shuffle=True)
        assert [len(s) for s in a.pure_sets] == [len(s) for s in b.pure_sets]
        assert np.allclose(np.sort(a.rows, axis=0), np.sort(b.rows, axis=0))

    def test_immutable(self):
        th = make_membership(10, 2, 0.2, (1, 1), 0)
        with pytest.raises(ValueError):
            th.rows[0, 0] = 0.3

    @settings(max_examples=40, deadline=None)
    @given(
        n=st.integers(3, 200),
        K=st.integers(1, 3),
        frac=st.floats(0.0, 0.33),
        seed=st.integers(0, 2**32),
    )
    def test_gram_diagonal_bounds(self, n, K, frac, seed):
        th = make_membership(n, K, frac, [1.0] * K, seed)
        gram = th.rows.T @ th.rows
        assert np.trace(gram) <= n + 1e-9
        for k in range(K):
            assert gram[k, k] >= len(th.pure_sets[k]) - 1e-9
        assert np.allclose(th.rows.sum(axis=1), 1.0, atol=1e-12)
        pure = np.isclose(th.rows.max(axis=1), 1.0, atol=0, rtol=0)
        assert np.array_equal(pure, th.pure_mask)


class TestCommunityMatrix:
    def test_scaling(self):
        B = CommunityMatrix(default_bbar(3), 0.5)
        assert np.allclose(B.b, 0.5 * default_bbar(3))
        assert B.with_rho(0.25).rho == 0.25

    @pytest.mark.parametrize(
        "bbar, rho",
        [
            ([[1.0, 0.2], [0.3, 0.5]], 1.0),
            ([[0.9, 0.2], [0.2, 0.5]], 1.0),
            ([[1.0, -0.1], [-0.1, 0.5]], 1.0),
            ([[1.0, 0.2], [0.2, 0.5]], 0.0),
            ([[1.0, 0.2], [0.2, 0.5]], 1.5),
        ],
    )
    def test_invalid(self, bbar, rho):
        with pytest.raises(ParameterError):
            CommunityMatrix(np.array(bbar), rho)

    def test_unnormalized_allowed_when_asked(self):
        B = CommunityMatrix(np.full((2, 2), 0.25), 1.0, normalized=False)
        assert B.b.max() == 0.25


class TestProbabilityOperator:
    def test_matches_dense_formula(self, op300):
        th = op300.theta.rows
        P = th @ op300.b.b @ th.T
        assert np.allclose(op300.dense(), P, atol=1e-14)
        x = np.arange(300.0)
        assert np.allclose(op300.matvec(x), P @ x)
        assert np.allclose(op300.row_sums(), P.sum(axis=1))
        assert np.allclose(op300.rows([3, 7]), P[[3, 7]])

    def test_symmetric_unit_range(self, op300):
        P = op300.dense()
        assert np.array_equal(P, P.T) or np.max(np.abs(P - P.T)) < 1e-15
        assert P.min() >= 0 and P.max() <= 1


def _constant_operator(n, value):
    th = MembershipMatrix(np.ones((n, 1)))
    return ProbabilityOperator(th, CommunityMatrix(np.array([[value]]), 1.0, normalized=False))


class TestSampling:
    def test_zero_probability(self):
        A = sample_graph(_constant_operator(20, 0.0), 1)
        assert A.edge_count == 0

    def test_certain_edges(self):
        A = sample_graph(_constant_operator(20, 1.0), 1)
        assert A.edge_count == 400
        assert np.all(A.dense() == 1)

    def test_density_concentrates(self):
        p = standard_operator(500, seed=3)
        A = sample_graph(p, 4)
        P = p.dense()
        iu = np.triu_indices(500)
        m = P[iu].mean()
        pairs = 500 * 501 / 2
        assert abs(A.density() - m) <= 5 * np.sqrt(m * (1 - m) / pairs)

    def test_symmetric_and_binary(self, graph300):
        D = graph300.dense()
        assert np.array_equal(D, D.T)
        assert set(np.unique(D)) <= {0.0, 1.0}
        csr = graph300.to_csr()
        assert (csr != csr.T).nnz == 0

    def test_deterministic(self, op300):
        assert sample_graph(op300, 5).digest() == sample_graph(op300, 5).digest()
        assert sample_graph(op300, 5).digest() != sample_graph(op300, 6).digest()

    def test_bucket_frequencies(self):
        p = standard_operator(600, seed=8)
        A = sample_graph(p, 9).dense()
        iu = np.triu_indices(600)
        probs = p.dense()[iu]
        hits = A[iu]
        edges = np.quantile(probs, np.linspace(0, 1, 11))
        bucket = np.clip(np.searchsorted(edges, probs, side="right") - 1, 0, 9)
        for b in range(10):
            sel = bucket == b
            expected = probs[sel].sum()
            sd = np.sqrt(np.sum(probs[sel] * (1 - probs[sel])))
            assert abs(hits[sel].sum() - expected) <= 5 * sd

    def test_degrees_include_self_loop_once(self):
        A = SparseGraph.from_pairs(3, np.array([0, 0]), np.array([0, 1]))
        assert A.degrees.tolist() == [2, 1, 0]
        assert A.edge_count == 3


class TestCoupledSampling:
    def test_invalid_rho(self, op300):
        for rho in (0.0, -0.1, 1.1):
            with pytest.raises(ParameterError):
                sample_graph_coupled(op300, rho, 1)

    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 2**40), lo=st.floats(0.01, 1.0), hi=st.floats(0.01, 1.0))
    def test_nested(self, op300, seed, lo, hi):
        lo, hi = min(lo, hi), max(lo, hi)
        small = sample_graph_coupled(op300, lo, seed).dense()
        large = sample_graph_coupled(op300, hi, seed).dense()
        assert np.all(small <= large)

    def test_same_seed_specific_grid(self, op300):
        small = sample_graph_coupled(op300, 0.3, 17).dense()
        large = sample_graph_coupled(op300, 0.6, 17).dense()
        assert np.all(small <= large)
        assert np.array_equal(small, small.T)

    def test_density_linear_in_rho(self):
        p = standard_operator(5000, seed=2)
        ratios = np.array([sample_graph_coupled(p, r, 1).density() / r for r in np.geomspace(0.1, 1, 8)])
        assert np.all(np.abs(ratios / ratios.mean() - 1) <= 0.03)
