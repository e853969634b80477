import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from mmsb.eigen import all_eigenvalues_desc, dense_threshold, top_eigs
from mmsb.errors import ConvergenceError, ParameterError
from mmsb.model import sample_graph

from conftest import standard_operator


def sign_fixed(V):
    V = np.array(V, dtype=float)
    idx = np.argmax(np.abs(V), axis=0)
    return V * np.sign(V[idx, np.arange(V.shape[1])])


def oracle_top(M, k):
    """Top-k by magnitude from scipy's full symmetric decomposition."""
    w, V = scipy.linalg.eigh(M)
    order = np.argsort(-np.abs(w), kind="stable")[:k]
    return w[order], sign_fixed(V[:, order])


def check_pair(pair, M, tol=1e-10):
    U = pair.vectors
    assert np.max(np.abs(U.T @ U - np.eye(pair.k))) <= 1e-10
    assert np.all(np.diff(np.abs(pair.values)) <= 1e-12)
    norm1 = np.abs(M).sum(axis=0).max()
    res = np.linalg.norm(M @ U - U * pair.values, axis=0)
    assert np.all(res <= max(tol, 1e-12) * norm1 + 1e-12)
    idx = np.argmax(np.abs(U), axis=0)
    assert np.all(U[idx, np.arange(pair.k)] > 0)


class TestExamples:
    def test_diagonal(self):
        p = top_eigs(np.diag([3.0, 1.0]), 1)
        assert np.allclose(p.values, [3.0])
        assert np.allclose(p.vectors[:, 0], [1.0, 0.0])

    def test_swap_matrix(self):
        p = top_eigs(np.array([[0.0, 1.0], [1.0, 0.0]]), 2)
        assert np.allclose(sorted(p.values, reverse=True), [1.0, -1.0])
        V = p.vectors[:, np.argsort(-p.values)]
        s = 1 / np.sqrt(2)
        assert np.allclose(np.abs(V[:, 0]), [s, s])
        assert np.allclose(V[:, 1] * np.sign(V[0, 1]), [s, -s])

    def test_all_ones_spectrum(self):
        assert np.allclose(all_eigenvalues_desc(np.ones((4, 4)), 4), [4, 0, 0, 0], atol=1e-12)

    def test_signed_ordering(self):
        assert np.allclose(all_eigenvalues_desc(np.diag([5.0, -7.0, 2.0]), 3), [5, 2, -7])

    def test_k_above_n(self):
        with pytest.raises(ParameterError):
            top_eigs(np.eye(3), 4)

    def test_nonconvergence_carries_residuals(self, rng):
        X = rng.standard_normal((600, 600))
        X = (X + X.T) / 2
        with pytest.raises(ConvergenceError) as info:
            top_eigs(X, 5, max_iter=1, method="lanczos")
        assert info.value.residuals is not None
        assert len(info.value.residuals) == 5

    def test_random_dense_matrix(self, rng):
        X = rng.standard_normal((50, 50))
        X = X + X.T
        for method in ("dense", "lanczos"):
            p = top_eigs(X, 4, method=method)
            w, V = oracle_top(X, 4)
            assert np.allclose(p.values, w, atol=1e-8)
            assert np.allclose(p.vectors, V, atol=1e-6)
            check_pair(p, X)

    def test_sampled_graph(self):
        A = sample_graph(standard_operator(200, seed=1), 2)
        p = top_eigs(A, 3, method="lanczos")
        w, V = oracle_top(A.dense(), 3)
        assert np.allclose(p.values, w, atol=1e-8)
        assert np.allclose(p.vectors, V, atol=1e-6)


class TestRoutes:
    @pytest.mark.parametrize("n", [120, 400])
    def test_lanczos_matches_dense_on_adjacency(self, n):
        A = sample_graph(standard_operator(n, seed=n), n + 1)
        a = top_eigs(A, 3, method="lanczos")
        d = top_eigs(A, 3, method="dense")
        assert np.allclose(a.values, d.values, atol=1e-8)
        assert np.allclose(a.vectors, d.vectors, atol=1e-6)
        check_pair(a, A.dense())

    @pytest.mark.parametrize("n", [150, 400])
    def test_lanczos_matches_dense_on_operator(self, n):
        p = standard_operator(n, seed=n, rho=0.4)
        a = top_eigs(p, 3, method="lanczos")
        d = top_eigs(p, 3, method="dense")
        assert np.allclose(a.values, d.values, atol=1e-8)
        assert np.allclose(a.vectors, d.vectors, atol=1e-6)

    def test_exact_operator_has_rank_k(self):
        p = standard_operator(300, seed=4)
        vals = top_eigs(p, 5, method="lanczos").values
        assert abs(vals[3]) <= 1e-8 * abs(vals[0])

    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("MMSB_DENSE_THRESHOLD", "7")
        assert dense_threshold() == 7
        monkeypatch.delenv("MMSB_DENSE_THRESHOLD")
        assert dense_threshold() == 512

    def test_deterministic(self, graph300):
        a = top_eigs(graph300, 3, method="lanczos")
        b = top_eigs(graph300, 3, method="lanczos")
        assert np.array_equal(a.vectors, b.vectors)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(5, 60), k=st.integers(1, 5), seed=st.integers(0, 2**32))
def test_pair_invariants(n, k, seed):
    k = min(k, n)
    X = np.random.default_rng(seed).standard_normal((n, n))
    X = X + X.T
    for method in ("dense", "lanczos"):
        check_pair(top_eigs(X, k, method=method), X)
