"""Permutation-minimized losses and log-log slope fitting."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.optimize import linear_sum_assignment

from .errors import DomainError, ParameterError, SizeError

MAX_BRUTE_FORCE_K = 10


@dataclass(frozen=True)
class LossReport:
    loss_b: float
    loss_theta: float
    best_permutation: tuple
    elapsed: int = 0


def loss_b(b_hat: np.ndarray, b_true: np.ndarray, heuristic: bool = False):
    """``min_perm ||B_hat - B[perm][:, perm]||_F`` over all simultaneous relabelings.

    Returns ``(loss, perm)``. Exact for ``K <= 10``; larger ``K`` needs
    ``heuristic=True``, which matches diagonals greedily and is only an
    upper bound on the true minimum.
    """
    b_hat = np.asarray(b_hat, dtype=float)
    b_true = np.asarray(b_true, dtype=float)
    if b_hat.shape != b_true.shape or b_hat.shape[0] != b_hat.shape[1]:
        raise ParameterError("loss_b needs two K x K matrices")
    K = b_true.shape[0]
    if K > MAX_BRUTE_FORCE_K:
        if not heuristic:
            raise SizeError(f"K={K} > {MAX_BRUTE_FORCE_K}: pass heuristic=True for approximate matching")
        perm = _greedy_diagonal(b_hat, b_true)
        return float(np.linalg.norm(b_hat - b_true[np.ix_(perm, perm)])), tuple(perm)
    best, best_perm = np.inf, None
    for perm in itertools.permutations(range(K)):
        p = list(perm)
        val = np.sum((b_hat - b_true[np.ix_(p, p)]) ** 2)
        if val < best:
            best, best_perm = val, perm
    return float(np.sqrt(best)), tuple(best_perm)


def _greedy_diagonal(b_hat, b_true):
    cost = (np.diag(b_hat)[:, None] - np.diag(b_true)[None, :]) ** 2
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(b_true.shape[0], dtype=int)
    perm[rows] = cols
    return list(perm)


def loss_theta(theta_hat: np.ndarray, theta_true: np.ndarray):
    """``min_perm ||Theta_hat - Theta[:, perm]||_F / ||Theta||_F`` via linear assignment."""
    theta_hat = np.asarray(theta_hat, dtype=float)
    theta_true = np.asarray(theta_true, dtype=float)
    if theta_hat.shape != theta_true.shape:
        raise ParameterError("membership matrices differ in shape")
    norm = np.linalg.norm(theta_true)
    if norm == 0.0:
        raise ParameterError("true membership matrix has zero norm")
    # ||X - Y P||^2 = ||X||^2 + ||Y||^2 - 2 sum_k <X_k, Y_perm(k)>
    gain = theta_hat.T @ theta_true
    rows, cols = linear_sum_assignment(-gain)
    perm = np.empty(theta_true.shape[1], dtype=int)
    perm[rows] = cols
    resid = np.linalg.norm(theta_hat - theta_true[:, perm])
    return float(resid / norm), tuple(int(p) for p in perm)


def slope_fit(points):
    """Least-squares line through ``(ln x, ln y)``: returns ``(slope, intercept, stderr)``."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise ParameterError("slope fit needs at least two points")
    x, y = pts[:, 0], pts[:, 1]
    if np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("log-log fit needs positive coordinates")
    if np.unique(x).shape[0] < 2:
        raise ParameterError("slope fit needs distinct x values")
    res = stats.linregress(np.log(x), np.log(y))
    return float(res.slope), float(res.intercept), float(res.stderr)
