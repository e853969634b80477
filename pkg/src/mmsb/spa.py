"""Successive Projections Algorithm (vertex hunting on a point simplex)."""

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, RankDeficiencyError

ZERO_ROW_RTOL = 1e-12


@dataclass(frozen=True)
class SpaResult:
    indices: np.ndarray
    selection_norms: np.ndarray


def project_out(S: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Project the rows of ``S`` onto the orthogonal complement of ``s``."""
    return S - np.outer(S @ s, s) / (s @ s)


def spa(V: np.ndarray, r: int) -> SpaResult:
    """Select ``r`` rows of ``V`` that approximate the vertices of its simplex.

    At each step the row of largest Euclidean norm is taken (lowest index on
    ties) and every row is projected away from it.
    """
    S = np.array(V, dtype=float, copy=True)
    if S.ndim != 2:
        raise ParameterError("V must be a matrix")
    n, k = S.shape
    if not 0 <= r <= k <= n:
        raise ParameterError(f"need r <= k <= n, got r={r}, k={k}, n={n}")
    norms = np.linalg.norm(S, axis=1)
    scale = norms.max(initial=0.0)
    if scale == 0.0:
        raise RankDeficiencyError("V is all zero")
    indices, chosen = [], []
    for t in range(r):
        j = int(np.argmax(norms))
        if norms[j] < ZERO_ROW_RTOL * scale:
            raise RankDeficiencyError(f"only {t} of {r} vertices found before rows vanished")
        indices.append(j)
        chosen.append(norms[j])
        S = project_out(S, S[j].copy())
        norms = np.linalg.norm(S, axis=1)
    return SpaResult(np.array(indices, dtype=np.int64), np.array(chosen))
