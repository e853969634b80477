"""Mixed-membership SBM domain types, instance generation and adjacency sampling."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ParameterError
from .rng import pair_uniforms

_ROW_CHUNK = 256


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MembershipMatrix:
    """Row-stochastic n x K membership matrix with tracked pure-node sets.

    ``pure_sets[k]`` holds the indices of rows equal to the k-th standard
    basis vector. When ``pure_sets`` is omitted it is derived from ``rows``.
    """

    rows: np.ndarray
    pure_sets: tuple = None

    def __post_init__(self):
        rows = _frozen(self.rows)
        if rows.ndim != 2 or rows.shape[1] < 1:
            raise ParameterError("membership rows must be an n x K array")
        if np.any(rows < 0) or np.any(rows > 1):
            raise ParameterError("membership entries must lie in [0, 1]")
        if np.max(np.abs(rows.sum(axis=1) - 1.0), initial=0.0) > 1e-12:
            raise ParameterError("membership rows must sum to 1")
        object.__setattr__(self, "rows", rows)
        derived = _pure_sets_of(rows)
        if self.pure_sets is None:
            object.__setattr__(self, "pure_sets", derived)
        else:
            given = tuple(np.sort(np.asarray(s, dtype=np.int64)) for s in self.pure_sets)
            if len(given) != rows.shape[1] or any(
                not np.array_equal(g, d) for g, d in zip(given, derived)
            ):
                raise ParameterError("pure_sets disagree with the rows that are basis vectors")
            object.__setattr__(self, "pure_sets", derived)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def K(self) -> int:
        return self.rows.shape[1]

    @property
    def pure_mask(self) -> np.ndarray:
        mask = np.zeros(self.n, dtype=bool)
        for s in self.pure_sets:
            mask[s] = True
        return mask

    def permuted(self, order: np.ndarray) -> "MembershipMatrix":
        """Reorder nodes: new row ``i`` is old row ``order[i]``."""
        return MembershipMatrix(self.rows[np.asarray(order)])

    def relabeled(self, perm: Sequence[int]) -> "MembershipMatrix":
        """Permute community columns: new column ``k`` is old column ``perm[k]``."""
        return MembershipMatrix(self.rows[:, list(perm)])


def _pure_sets_of(rows: np.ndarray) -> tuple:
    K = rows.shape[1]
    is_pure = np.all((rows == 0.0) | (rows == 1.0), axis=1) & (rows.sum(axis=1) == 1.0)
    hot = np.argmax(rows, axis=1)
    sets = []
    for k in range(K):
        idx = np.flatnonzero(is_pure & (hot == k))
        idx.setflags(write=False)
        sets.append(idx)
    return tuple(sets)


@dataclass(frozen=True)
class CommunityMatrix:
    """Symmetric community matrix ``B = rho * bbar``.

    With ``normalized=True`` the maximum of ``bbar`` must equal 1.
    """

    bbar: np.ndarray
    rho: float = 1.0
    normalized: bool = True

    def __post_init__(self):
        bbar = _frozen(self.bbar)
        if bbar.ndim != 2 or bbar.shape[0] != bbar.shape[1]:
            raise ParameterError("bbar must be square")
        if not 0.0 < self.rho <= 1.0:
            raise ParameterError(f"rho must lie in (0, 1], got {self.rho}")
        if np.max(np.abs(bbar - bbar.T)) > 1e-12:
            raise ParameterError("bbar must be symmetric")
        if np.any(bbar < 0) or np.any(bbar > 1):
            raise ParameterError("bbar entries must lie in [0, 1]")
        if self.normalized and abs(bbar.max() - 1.0) > 1e-12:
            raise ParameterError("normalized bbar must have maximum entry 1")
        object.__setattr__(self, "bbar", bbar)
        object.__setattr__(self, "rho", float(self.rho))

    @property
    def K(self) -> int:
        return self.bbar.shape[0]

    @property
    def b(self) -> np.ndarray:
        return self.rho * self.bbar

    def with_rho(self, rho: float) -> "CommunityMatrix":
        return CommunityMatrix(self.bbar, rho, self.normalized)

    def relabeled(self, perm: Sequence[int]) -> "CommunityMatrix":
        p = list(perm)
        return CommunityMatrix(self.bbar[np.ix_(p, p)], self.rho, self.normalized)


@dataclass(frozen=True)
class ProbabilityOperator:
    """Implicit edge-probability matrix ``P = rho * Theta bbar Theta^T``.

    Rows are materialized on demand; ``matvec``/``matmat`` cost O(nK).
    """

    theta: MembershipMatrix
    b: CommunityMatrix

    def __post_init__(self):
        if self.theta.K != self.b.K:
            raise ParameterError("theta and B disagree on K")

    @property
    def n(self) -> int:
        return self.theta.n

    @property
    def shape(self) -> tuple:
        return (self.n, self.n)

    @property
    def rho(self) -> float:
        return self.b.rho

    def rows(self, idx) -> np.ndarray:
        th = self.theta.rows
        return (th[idx] @ self.b.b) @ th.T

    def dense(self) -> np.ndarray:
        return self.rows(slice(None))

    def matmat(self, X: np.ndarray) -> np.ndarray:
        th = self.theta.rows
        return th @ (self.b.b @ (th.T @ X))

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.matmat(np.asarray(x)[:, None])[:, 0]

    def row_sums(self) -> np.ndarray:
        return self.matvec(np.ones(self.n))

    def mean(self) -> float:
        return float(self.row_sums().sum() / self.n**2)


@dataclass(frozen=True)
class SparseGraph:
    """Symmetric 0/1 adjacency in compressed row form; self-loops allowed.

    ``indices[indptr[i]:indptr[i+1]]`` is the strictly increasing neighbor
    list of node ``i``. A self-loop is stored once, in its own row.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    _csr: sp.csr_matrix = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        indptr = np.asarray(self.indptr, dtype=np.int64)
        indices = np.asarray(self.indices, dtype=np.int64)
        indptr.setflags(write=False)
        indices.setflags(write=False)
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)
        if indptr.shape != (self.n + 1,):
            raise ParameterError("indptr must have n + 1 entries")
        data = np.ones(indices.shape[0], dtype=np.float64)
        csr = sp.csr_matrix((data, indices, indptr), shape=(self.n, self.n))
        object.__setattr__(self, "_csr", csr)

    @classmethod
    def from_pairs(cls, n: int, i: np.ndarray, j: np.ndarray) -> "SparseGraph":
        """Build from unordered pairs (each edge once, any orientation)."""
        i = np.asarray(i, dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        off = i != j
        r = np.concatenate([i, j[off]])
        c = np.concatenate([j, i[off]])
        key = np.unique(r * n + c)
        r, c = np.divmod(key, n)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(r, minlength=n), out=indptr[1:])
        return cls(n, indptr, c)

    @classmethod
    def from_dense(cls, A: np.ndarray) -> "SparseGraph":
        A = np.asarray(A)
        i, j = np.nonzero(np.triu(A))
        return cls.from_pairs(A.shape[0], i, j)

    @property
    def shape(self) -> tuple:
        return (self.n, self.n)

    @property
    def edge_count(self) -> int:
        return int(self.indices.shape[0])

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr).astype(np.float64)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    def to_csr(self) -> sp.csr_matrix:
        return self._csr

    def dense(self) -> np.ndarray:
        return self._csr.toarray()

    def rows(self, idx) -> np.ndarray:
        return self._csr[idx].toarray()

    def matmat(self, X: np.ndarray) -> np.ndarray:
        return self._csr @ X

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self._csr @ x

    def upper_pairs(self) -> tuple:
        """Edges as ``(i, j)`` arrays with ``i <= j``, row-major order."""
        r = np.repeat(np.arange(self.n), np.diff(self.indptr))
        keep = self.indices >= r
        return r[keep], self.indices[keep]

    def density(self) -> float:
        """Fraction of the n(n+1)/2 unordered pairs (diagonal included) present."""
        i, _ = self.upper_pairs()
        return i.shape[0] / (self.n * (self.n + 1) / 2)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.int64(self.n).tobytes())
        h.update(self.indptr.tobytes())
        h.update(self.indices.tobytes())
        return h.hexdigest()[:16]


def make_membership(
    n: int,
    K: int,
    pure_fraction: float,
    alpha: Sequence[float],
    seed: int,
    shuffle: bool = False,
) -> MembershipMatrix:
    """Generate memberships with ``floor(n * pure_fraction)`` pure nodes per community.

    Pure nodes come first, in community order; the remaining rows are
    i.i.d. Dirichlet(alpha). With ``shuffle`` the node order is then permuted
    by the same seeded generator.
    """
    if K < 1:
        raise ParameterError("K must be at least 1")
    if K > n:
        raise ParameterError(f"K={K} exceeds n={n}")
    if not 0.0 <= K * pure_fraction <= 1.0:
        raise ParameterError(f"pure_fraction={pure_fraction} invalid for K={K}")
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (K,) or np.any(alpha <= 0):
        raise ParameterError("alpha must be K positive numbers")
    rng = np.random.default_rng(seed)
    per = int(np.floor(n * pure_fraction))
    rows = np.zeros((n, K))
    for k in range(K):
        rows[k * per : (k + 1) * per, k] = 1.0
    n_mixed = n - K * per
    if n_mixed:
        mixed = rng.dirichlet(alpha, size=n_mixed)
        # renormalize so rows sum to 1 to machine precision
        rows[K * per :] = mixed / mixed.sum(axis=1, keepdims=True)
    if shuffle:
        rows = rows[rng.permutation(n)]
    return MembershipMatrix(rows)


def _assemble(n: int, chunks_i: list, chunks_j: list) -> SparseGraph:
    if chunks_i:
        i = np.concatenate(chunks_i)
        j = np.concatenate(chunks_j)
    else:
        i = j = np.zeros(0, dtype=np.int64)
    return SparseGraph.from_pairs(n, i, j)


def sample_graph(p: ProbabilityOperator, seed: int) -> SparseGraph:
    """Draw ``A_ij ~ Bernoulli(P_ij)`` independently for ``i <= j`` and mirror."""
    n = p.n
    rng = np.random.default_rng(seed)
    cols = np.arange(n)
    out_i, out_j = [], []
    for start in range(0, n, _ROW_CHUNK):
        stop = min(start + _ROW_CHUNK, n)
        probs = p.rows(slice(start, stop))
        u = rng.random(probs.shape)
        hit = (u < probs) & (cols[None, :] >= np.arange(start, stop)[:, None])
        r, c = np.nonzero(hit)
        out_i.append(r + start)
        out_j.append(c)
    return _assemble(n, out_i, out_j)


def sample_graph_coupled(p: ProbabilityOperator, rho_override: float, seed: int) -> SparseGraph:
    """Draw ``A_ij = 1[U_ij < rho_override * Pbar_ij]`` with per-pair keyed uniforms.

    ``Pbar`` is the operator at sparsity 1. Because ``U_ij`` depends only on
    ``(seed, i, j)``, graphs sampled with the same seed are nested in rho.
    """
    if not 0.0 < rho_override <= 1.0:
        raise ParameterError(f"rho_override must lie in (0, 1], got {rho_override}")
    pbar = ProbabilityOperator(p.theta, p.b.with_rho(1.0))
    n = p.n
    cols = np.arange(n)
    out_i, out_j = [], []
    for start in range(0, n, _ROW_CHUNK):
        stop = min(start + _ROW_CHUNK, n)
        probs = pbar.rows(slice(start, stop))
        ri = np.arange(start, stop)
        upper = cols[None, :] >= ri[:, None]
        r, c = np.nonzero(upper)
        u = pair_uniforms(seed, r + start, c)
        hit = u < rho_override * probs[r, c]
        out_i.append(r[hit] + start)
        out_j.append(c[hit])
    return _assemble(n, out_i, out_j)
