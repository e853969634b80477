"""Top-k eigendecomposition of large symmetric operators.

Two routes share one interface: a dense LAPACK decomposition for small
operators and a thick-restart Lanczos iteration with full
reorthogonalization for large ones. Operators only need ``shape`` and
``matmat``/``matvec`` (a dense ``ndarray`` or scipy sparse matrix works too).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConvergenceError, ParameterError
from .rng import mix_seed

DENSE_THRESHOLD = 512
START_SEED = 0x5EED_1A2C


def dense_threshold() -> int:
    """Dense cutoff, overridable with the ``MMSB_DENSE_THRESHOLD`` env var."""
    value = os.environ.get("MMSB_DENSE_THRESHOLD")
    return int(value) if value else DENSE_THRESHOLD


@dataclass(frozen=True)
class SpectralPair:
    """Eigenvectors (n x k, orthonormal, sign-fixed) and eigenvalues.

    Pairs are ordered by the selection rule that produced them (descending
    magnitude for :func:`top_eigs`). ``residuals[i]`` is ``||A v_i - l_i v_i||``.
    """

    vectors: np.ndarray
    values: np.ndarray
    residuals: np.ndarray

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def k(self) -> int:
        return self.vectors.shape[1]


class _Operator:
    def __init__(self, op):
        self.op = op
        n, m = op.shape
        if n != m:
            raise ParameterError("operator must be square")
        self.n = n

    def matmat(self, X):
        op = self.op
        if isinstance(op, np.ndarray) or sp.issparse(op):
            return np.asarray(op @ X)
        if hasattr(op, "matmat"):
            return np.asarray(op.matmat(X))
        return np.column_stack([op.matvec(X[:, i]) for i in range(X.shape[1])])

    def dense(self):
        op = self.op
        if isinstance(op, np.ndarray):
            return np.asarray(op, dtype=float)
        if sp.issparse(op):
            return op.toarray()
        if hasattr(op, "dense"):
            return np.asarray(op.dense(), dtype=float)
        return self.matmat(np.eye(self.n))

    def norm1(self):
        op = self.op
        if isinstance(op, np.ndarray):
            return float(np.abs(op).sum(axis=0).max(initial=0.0))
        if sp.issparse(op):
            return float(np.max(np.asarray(abs(op).sum(axis=0)), initial=0.0))
        if hasattr(op, "to_csr"):
            return float(np.max(np.asarray(abs(op.to_csr()).sum(axis=0)), initial=0.0))
        if hasattr(op, "row_sums"):
            # nonnegative symmetric operator: column sums equal row sums
            return float(np.max(np.abs(op.row_sums()), initial=0.0))
        return float(np.abs(self.matmat(np.ones((self.n, 1)))).max(initial=0.0))


def _fix_signs(V: np.ndarray) -> np.ndarray:
    V = V.copy()
    for c in range(V.shape[1]):
        i = int(np.argmax(np.abs(V[:, c])))
        if V[i, c] < 0:
            V[:, c] = -V[:, c]
    return V


def _order(values: np.ndarray, which: str) -> np.ndarray:
    if which == "LM":
        return np.argsort(-np.abs(values), kind="stable")
    if which == "LA":
        return np.argsort(-values, kind="stable")
    raise ParameterError(f"unknown selection rule {which!r}")


def _finish(A: _Operator, values, vectors) -> SpectralPair:
    vectors = _fix_signs(vectors)
    R = A.matmat(vectors) - vectors * values[None, :]
    residuals = np.linalg.norm(R, axis=0)
    return SpectralPair(vectors, np.asarray(values, dtype=float), residuals)


def _dense(A: _Operator, k: int, which: str) -> SpectralPair:
    M = A.dense()
    M = (M + M.T) / 2
    w, V = np.linalg.eigh(M)
    sel = _order(w, which)[:k]
    return _finish(A, w[sel], V[:, sel])


def _start_vector(n: int, k: int) -> np.ndarray:
    rng = np.random.default_rng(mix_seed(START_SEED, n, k))
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def _orthogonalize(V: np.ndarray, w: np.ndarray):
    """Two passes of classical Gram-Schmidt against the columns of ``V``."""
    h = V.T @ w
    w = w - V @ h
    h2 = V.T @ w
    w = w - V @ h2
    return w, h + h2


def _lanczos(A: _Operator, k: int, which: str, tol: float, max_iter: int) -> SpectralPair:
    n = A.n
    m = min(n, max(3 * k, k + 30))
    norm = A.norm1()
    if norm == 0.0:
        return _finish(A, np.zeros(k), np.eye(n, k))
    V = np.zeros((n, m + 1))
    H = np.zeros((m, m))
    V[:, 0] = _start_vector(n, k)
    rng = np.random.default_rng(mix_seed(START_SEED, n, k, 1))
    locked = 0  # columns already holding kept Ritz vectors
    best = None
    for _ in range(max(1, max_iter)):
        for j in range(locked, m):
            w = A.matmat(V[:, j : j + 1])[:, 0]
            w, h = _orthogonalize(V[:, : j + 1], w)
            H[: j + 1, j] = h
            H[j, : j + 1] = h
            beta = np.linalg.norm(w)
            if beta <= 1e-12 * norm:
                # invariant subspace found; continue from a fresh direction
                w, _ = _orthogonalize(V[:, : j + 1], rng.standard_normal(n))
                w, _ = _orthogonalize(V[:, : j + 1], w)
                beta_couple = 0.0
                if j + 1 < m:
                    H[j + 1, j] = H[j, j + 1] = 0.0
                V[:, j + 1] = w / np.linalg.norm(w) if j + 1 < n else 0.0
            else:
                beta_couple = beta
                if j + 1 < m:
                    H[j + 1, j] = H[j, j + 1] = beta
                V[:, j + 1] = w / beta
        theta, S = np.linalg.eigh(H)
        sel = _order(theta, which)
        est = np.abs(beta_couple * S[m - 1, sel[:k]])
        if m == n:
            est[:] = 0.0
        if best is None or est.max() < best.max():
            best = est
        if np.all(est <= tol * norm):
            vectors = V[:, :m] @ S[:, sel[:k]]
            vectors, _ = np.linalg.qr(vectors)
            pair = _ritz_refine(A, vectors, which, k)
            if np.all(pair.residuals <= tol * norm):
                return pair
        # thick restart: keep the best Ritz vectors plus the residual direction
        keep = min(m - 1, k + max(1, (m - k) // 2))
        idx = sel[:keep]
        Y = V[:, :m] @ S[:, idx]
        coupling = beta_couple * S[m - 1, idx]
        residual_dir = V[:, m].copy()
        V[:] = 0.0
        H[:] = 0.0
        V[:, :keep] = Y
        V[:, keep] = residual_dir
        H[np.arange(keep), np.arange(keep)] = theta[idx]
        H[keep, :keep] = coupling
        H[:keep, keep] = coupling
        locked = keep
    raise ConvergenceError(
        f"Lanczos did not converge for k={k} after {max_iter} restarts", residuals=best
    )


def _ritz_refine(A: _Operator, Q: np.ndarray, which: str, k: int) -> SpectralPair:
    """Rayleigh-Ritz on an orthonormal basis to polish values and vectors."""
    AQ = A.matmat(Q)
    G = Q.T @ AQ
    w, S = np.linalg.eigh((G + G.T) / 2)
    sel = _order(w, which)[:k]
    return _finish(A, w[sel], Q @ S[:, sel])


def _solve(op, k, tol, max_iter, method, which) -> SpectralPair:
    A = _Operator(op)
    if k < 0 or k > A.n:
        raise ParameterError(f"cannot extract k={k} eigenpairs from an operator of size {A.n}")
    if k == 0:
        return SpectralPair(np.zeros((A.n, 0)), np.zeros(0), np.zeros(0))
    if method == "auto":
        method = "dense" if A.n <= dense_threshold() else "lanczos"
    if method == "dense":
        return _dense(A, k, which)
    if method == "lanczos":
        return _lanczos(A, k, which, tol, max_iter)
    raise ParameterError(f"unknown method {method!r}")


def top_eigs(op, k: int, tol: float = 1e-10, max_iter: int = None, method: str = "auto") -> SpectralPair:
    """The ``k`` eigenpairs of largest magnitude, in descending ``|lambda|``.

    Parameters
    ----------
    op : ndarray, scipy sparse matrix or object with ``shape`` and ``matmat``
        Symmetric operator (symmetry is the caller's responsibility).
    k : int
        Number of pairs.
    tol : float
        Relative residual tolerance against the operator 1-norm.
    max_iter : int, optional
        Maximum number of Lanczos restarts, ``30 * k`` by default.
    method : {"auto", "dense", "lanczos"}
        ``auto`` uses the dense route for ``n <= dense_threshold()``.

    Returns
    -------
    SpectralPair
        Eigenvectors have their largest-magnitude entry positive.
    """
    if max_iter is None:
        max_iter = 30 * max(k, 1)
    return _solve(op, k, tol, max_iter, method, "LM")


def all_eigenvalues_desc(op, m: int, tol: float = 1e-10, max_iter: int = None, method: str = "auto") -> np.ndarray:
    """The ``m`` algebraically largest eigenvalues in descending order."""
    if max_iter is None:
        max_iter = 30 * max(m, 1)
    pair = _solve(op, m, tol, max_iter, method, "LA")
    return np.sort(pair.values)[::-1]
