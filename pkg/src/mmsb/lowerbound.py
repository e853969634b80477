"""Hard-instance family for the minimax lower bound and its numerical certificate.

Community matrices are ``B(w) = (I + 11^T)/4 + (mu/n) T(w)`` where the binary
word ``w`` is indexed by the 2-subsets of ``[K]`` (lexicographic order) and
``T(w)`` places ``w_{k,k'}`` off the diagonal. Memberships are mostly pure,
with community sizes halving geometrically.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.special import rel_entr

from .errors import ConstructionWarning, DomainError, ParameterError, SizeError
from .model import CommunityMatrix, MembershipMatrix, ProbabilityOperator

VG_BUDGET = 1_000_000
PERM_GUARD = 1_000_000
KL_TWO_POINT_LIMIT = 3.2
_KL_CHUNK = 512


# -- codes ---------------------------------------------------------------------

def _hamming_to(words: np.ndarray, w: np.ndarray) -> np.ndarray:
    return np.count_nonzero(words != w[None, :], axis=1)


def _pairwise_min(words: np.ndarray) -> Optional[int]:
    best = None
    for i in range(words.shape[0] - 1):
        d = int(_hamming_to(words[i + 1 :], words[i]).min())
        best = d if best is None else min(best, d)
    return best


@dataclass(frozen=True)
class BinaryCode:
    """A set of binary words of length ``m`` containing the zero word.

    ``min_distance`` is checked exhaustively over all pairs on construction.
    ``perm_distance`` is set for permutation-resistant codes: the smallest
    ``d_H(T_pi(w1), w2)`` over distinct pairs and all relabelings ``pi``.
    """

    m: int
    words: np.ndarray
    min_distance: int
    perm_distance: Optional[int] = None
    K: Optional[int] = None

    def __post_init__(self):
        words = np.array(self.words, dtype=np.uint8, copy=True)
        if words.ndim != 2 or words.shape[1] != self.m:
            raise ParameterError(f"words must form an array with {self.m} columns")
        if not np.any(np.all(words == 0, axis=1)):
            raise ParameterError("code must contain the zero word")
        d = _pairwise_min(words)
        if d is not None and d < self.min_distance:
            raise ParameterError(f"pairwise distance {d} is below the claimed {self.min_distance}")
        words.setflags(write=False)
        object.__setattr__(self, "words", words)

    def __len__(self) -> int:
        return self.words.shape[0]


def _bits(values: np.ndarray, m: int) -> np.ndarray:
    shifts = np.arange(m, dtype=np.uint64)
    return ((values[:, None].astype(np.uint64) >> shifts[None, :]) & np.uint64(1)).astype(np.uint8)


def full_code(m: int) -> BinaryCode:
    """Every word of length ``m`` (distance 1); used as the base code when ``m < 8``."""
    if m < 1 or m > 20:
        raise ParameterError("full code needs 1 <= m <= 20")
    words = _bits(np.arange(2**m, dtype=np.uint64), m)
    return BinaryCode(m, words, 1)


def vg_code(m: int, seed: int = 0) -> BinaryCode:
    """Greedy packing with pairwise Hamming distance at least ``ceil(m/8)``.

    Starts from the zero word and scans a seeded candidate order, stopping
    at ``1 + 2**ceil(m/8)`` words or after ``min(2**m, 10**6)`` candidates.
    A :class:`ConstructionWarning` reports a short code, which is still valid.
    """
    if m < 8:
        raise ParameterError("vg_code needs m >= 8")
    d = math.ceil(m / 8)
    target = 1 + 2**d
    budget = min(2**m, VG_BUDGET) if m < 64 else VG_BUDGET
    rng = np.random.default_rng(seed)
    if m <= 20:
        order = rng.permutation(2**m).astype(np.uint64)
        candidates = (_bits(order[s : s + 4096], m) for s in range(0, budget, 4096))
    else:
        candidates = (
            rng.integers(0, 2, size=(min(4096, budget - s), m), dtype=np.uint8)
            for s in range(0, budget, 4096)
        )
    accepted = np.zeros((target, m), dtype=np.uint8)
    size = 1
    for block in candidates:
        for w in block:
            if size >= target:
                break
            if _hamming_to(accepted[:size], w).min() >= d:
                accepted[size] = w
                size += 1
        if size >= target:
            break
    if size < target:
        warnings.warn(
            ConstructionWarning(f"vg_code(m={m}) reached {size} of {target} words within budget"),
            stacklevel=2,
        )
    return BinaryCode(m, accepted[:size], d)


def pair_index(K: int) -> list:
    """2-subsets of ``range(K)`` in lexicographic order."""
    return list(itertools.combinations(range(K), 2))


def relabel_maps(K: int) -> np.ndarray:
    """Row ``r`` maps word positions under the ``r``-th permutation of ``range(K)``.

    ``w[maps[r]]`` is the word whose matrix ``T`` equals ``T(w)[p][:, p]``.
    """
    if math.factorial(K) > PERM_GUARD:
        raise SizeError(f"K={K} needs {math.factorial(K)} permutations, above the guard {PERM_GUARD}")
    pairs = pair_index(K)
    lookup = {s: i for i, s in enumerate(pairs)}
    maps = []
    for p in itertools.permutations(range(K)):
        maps.append([lookup[tuple(sorted((p[i], p[j])))] for i, j in pairs])
    return np.array(maps, dtype=np.int64).reshape(-1, len(pairs))


def _orbit_distance(maps: np.ndarray, w: np.ndarray, others: np.ndarray) -> np.ndarray:
    """``min_pi d_H(T_pi(w), w')`` for every row ``w'`` of ``others``."""
    orbit = w[maps]  # (K!, m)
    d = np.count_nonzero(orbit[None, :, :] != others[:, None, :], axis=2)
    return d.min(axis=1)


def perm_resistant_code(K: int, base: BinaryCode) -> BinaryCode:
    """Filter ``base`` so distinct words stay apart under every relabeling.

    Words are taken in order; each accepted word removes every remaining
    candidate within ``C(K,2)/17`` of one of its relabelings. The zero word
    is appended last, and the result is certified over all pairs and all
    ``K!`` permutations.
    """
    m = K * (K - 1) // 2
    if base.m != m:
        raise ParameterError(f"base code has length {base.m}, expected C({K},2) = {m}")
    maps = relabel_maps(K)
    radius = m / 17
    pool = base.words[np.any(base.words != 0, axis=1)]
    chosen = []
    while pool.shape[0]:
        w = pool[0]
        chosen.append(w)
        pool = pool[1:]
        if pool.shape[0]:
            pool = pool[_orbit_distance(maps, w, pool) > radius]
    chosen.append(np.zeros(m, dtype=np.uint8))
    words = np.array(chosen, dtype=np.uint8)
    perm_d = None
    for i in range(words.shape[0] - 1):
        d = int(_orbit_distance(maps, words[i], words[i + 1 :]).min())
        perm_d = d if perm_d is None else min(perm_d, d)
    if perm_d is not None and perm_d < radius:
        raise ParameterError("permutation-resistant certification failed")  # unreachable by construction
    plain = _pairwise_min(words)
    return BinaryCode(m, words, plain if plain is not None else 0, perm_d, K)


# -- instances -----------------------------------------------------------------

def omega_matrix(K: int, omega) -> np.ndarray:
    """The symmetric zero-diagonal matrix ``T(w)``."""
    omega = np.asarray(omega, dtype=float)
    pairs = pair_index(K)
    if omega.shape != (len(pairs),):
        raise ParameterError(f"word must have length {len(pairs)}")
    T = np.zeros((K, K))
    for s, (i, j) in enumerate(pairs):
        T[i, j] = T[j, i] = omega[s]
    return T


def b_omega(K: int, n: int, mu: float, omega) -> np.ndarray:
    """Diagonal ``1/2``, off-diagonal ``1/4 + w_{k,k'} mu / n``."""
    return 0.25 * (np.eye(K) + np.ones((K, K))) + (mu / n) * omega_matrix(K, omega)


def pure_counts(K: int, n: int) -> list:
    """Ceiling schedule of pure-node counts, evaluated in exact rational arithmetic."""
    if K < 2:
        raise ParameterError("K must be at least 2")
    scale = (1 - Fraction(1, 2 ** (K + 5))) * n
    counts = []
    for k in range(1, K + 1):
        if k <= K - 2:
            x = scale / 2**k
        elif k == K - 1:
            x = Fraction(3, 2) * scale / 2**k
        else:
            x = scale / 2**K
        counts.append(math.ceil(x))
    return counts


def mu_for(K: int, rho: float) -> float:
    """Perturbation scale for the two regimes of ``K``."""
    if K >= 512:
        return K / math.sqrt(rho) / 96
    return K / math.sqrt(rho) * math.sqrt(2) / 1152


def check_preconditions(K: int, n: int, rho: float) -> float:
    """Validate ``rho > n^(-1/3)`` and ``mu < n/(8K)``; returns ``mu``."""
    if K < 2:
        raise ParameterError("K must be at least 2")
    if not 0.0 < rho <= 1.0:
        raise ParameterError(f"rho must lie in (0, 1], got {rho}")
    if not rho > n ** (-1.0 / 3.0):
        raise ParameterError(f"rho > n^(-1/3) violated: rho={rho}, n^(-1/3)={n ** (-1.0 / 3.0):.6g}")
    mu = mu_for(K, rho)
    if not mu < n / (8 * K):
        raise ParameterError(f"mu < n/(8K) violated: mu={mu:.6g}, n/(8K)={n / (8 * K):.6g}")
    return mu


@dataclass(frozen=True)
class HardInstance:
    """One member of the hard family: memberships, ``B(w)``, scale and sparsity."""

    theta0: MembershipMatrix
    b_omega: CommunityMatrix
    mu: float
    rho: float
    omega: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.theta0.n

    @property
    def K(self) -> int:
        return self.theta0.K

    @property
    def n_mix(self) -> int:
        return int(np.count_nonzero(~self.theta0.pure_mask))

    def probability(self) -> ProbabilityOperator:
        return ProbabilityOperator(self.theta0, self.b_omega)


def hard_membership(K: int, n: int) -> MembershipMatrix:
    """Pure blocks sized by :func:`pure_counts`, remaining rows uniform ``1/K``."""
    counts = pure_counts(K, n)
    if sum(counts) > n:
        raise ParameterError(f"pure counts {counts} exceed n={n}")
    rows = np.full((n, K), 1.0 / K)
    start = 0
    for k, c in enumerate(counts):
        rows[start : start + c] = 0.0
        rows[start : start + c, k] = 1.0
        start += c
    return MembershipMatrix(rows)


def hard_instance(K: int, n: int, rho: float, omega) -> HardInstance:
    """Build the member of the hard family indexed by the word ``omega``."""
    mu = check_preconditions(K, n, rho)
    theta0 = hard_membership(K, n)
    B = CommunityMatrix(b_omega(K, n, mu, omega), rho, normalized=False)
    return HardInstance(theta0, B, mu, float(rho), np.asarray(omega, dtype=np.uint8))


# -- divergence ----------------------------------------------------------------

def kl_divergence(p1: ProbabilityOperator, p0: ProbabilityOperator) -> float:
    """Exact KL between edge distributions, summed over pairs ``i <= j``."""
    if p1.n != p0.n:
        raise ParameterError("operators must have the same size")
    n = p1.n
    total = 0.0
    for start in range(0, n, _KL_CHUNK):
        stop = min(start + _KL_CHUNK, n)
        idx = np.arange(start, stop)
        a = p1.rows(idx)
        b = p0.rows(idx)
        mask = np.arange(n)[None, :] >= idx[:, None]
        a = a[mask]
        b = b[mask]
        edge = (b == 0.0) | (b == 1.0)
        if np.any(edge & (a != b)):
            raise DomainError("p1 is not absolutely continuous with respect to p0")
        total += float(np.sum(rel_entr(a, b) + rel_entr(1.0 - a, 1.0 - b)))
    return total


# -- certificate ---------------------------------------------------------------

def _entry(claim: str, ref: str, ok: bool, lhs, rhs) -> dict:
    return {"claim": claim, "paper_ref": ref, "status": "pass" if ok else "fail", "lhs": lhs, "rhs": rhs}


def _p_singular_values(theta: np.ndarray, B: np.ndarray) -> np.ndarray:
    # nonzero singular values of Theta B Theta^T from the K x K congruent matrix
    G = theta.T @ theta
    w, V = np.linalg.eigh(G)
    root = V @ np.diag(np.sqrt(np.clip(w, 0.0, None))) @ V.T
    return np.sort(np.abs(np.linalg.eigvalsh(root @ B @ root)))[::-1]


def base_code(K: int, seed: int = 0) -> BinaryCode:
    """Full cube for short words, greedy packing otherwise."""
    m = K * (K - 1) // 2
    return full_code(m) if m < 8 else vg_code(m, seed)


def verify_theorem2(K: int, n: int, rho: float, delta: float = 1.0, seed: int = 0) -> list:
    """Certify the hard-instance construction for one ``(K, n, rho)``.

    Returns a list of ``{claim, paper_ref, status, lhs, rhs}`` records; the
    construction preconditions raise :class:`ParameterError` instead.
    """
    mu = check_preconditions(K, n, rho)
    m = K * (K - 1) // 2
    code = perm_resistant_code(K, base_code(K, seed))
    maps = relabel_maps(K)
    heavy = np.ones(m, dtype=np.uint8)  # maximal-weight word for the two-point family
    words = [w for w in code.words] + [heavy]
    theta0 = hard_membership(K, n)
    rows = theta0.rows
    report = []

    counts = [len(s) for s in theta0.pure_sets]
    report.append(_entry("pure-count schedule", "hard-membership pure counts", counts == pure_counts(K, n), counts, pure_counts(K, n)))
    n_mix = n - sum(counts)
    bound = n / 2 ** (K + 5)
    report.append(_entry("mixed-node budget", "hard-membership mixed count", n_mix <= bound, n_mix, bound))
    size_floor = (1 - 2.0 ** (-(K + 5))) * 2.0 ** (-K) * n
    report.append(_entry("pure-set size", "property (iii)", min(counts) >= size_floor, min(counts), size_floor))

    Bs = [b_omega(K, n, mu, w) for w in words]
    sig = min(float(np.linalg.svd(B, compute_uv=False).min()) for B in Bs)
    report.append(_entry("singular values of B", "property (i)", sig >= 1 / 8, sig, 1 / 8))

    ratios = []
    variances = []
    for B in Bs:
        s = _p_singular_values(rows, B)
        ratios.append(float(np.min(s[:-1] / s[1:])))
        P = ProbabilityOperator(theta0, CommunityMatrix(B, rho, normalized=False))
        best = 0.0
        for start in range(0, n, _KL_CHUNK):
            block = P.rows(np.arange(start, min(start + _KL_CHUNK, n)))
            best = max(best, float(np.max(np.sum(block * (1.0 - block), axis=1))))
        variances.append(best)
    report.append(_entry("singular-value gaps of P", "property (ii)", min(ratios) >= 1.2, min(ratios), 1.2))
    report.append(_entry("maximal variance row", "property (ii)", min(variances) >= n * rho / 16, min(variances), n * rho / 16))

    radius = delta * math.sqrt(math.log(n) / (n * rho))
    near = 0
    for k, pure in enumerate(theta0.pure_sets):
        others = np.setdiff1d(np.arange(n), pure)
        dist = np.linalg.norm(rows[others] - np.eye(K)[k], axis=1)
        near += int(np.count_nonzero(dist <= radius))
    report.append(_entry("mixed nodes near a vertex", "property (iv)", near == 0, near, 0))

    target = np.array([0.25 + K / 4] + [0.25] * (K - 1))
    zero = np.zeros(m, dtype=np.uint8)
    dev = float(np.max(np.abs(np.sort(np.linalg.eigvalsh(b_omega(K, n, mu, zero)))[::-1] - target)))
    report.append(_entry("spectrum of B(0)", "zero-word eigenvalues", dev <= 1e-12, dev, 1e-12))

    perms = list(itertools.permutations(range(K)))
    worst = 0.0
    code_sep = math.inf
    for a, w1 in enumerate(words):
        for b, w2 in enumerate(words):
            if a == b:
                continue
            B1 = b_omega(K, n, mu, w1)
            B2 = b_omega(K, n, mu, w2)
            best = math.inf
            for r, p in enumerate(perms):
                direct = float(np.linalg.norm(B1[np.ix_(p, p)] - B2))
                via_code = mu / n * math.sqrt(2 * int(np.count_nonzero(w1[maps[r]] != w2)))
                worst = max(worst, abs(direct - via_code))
                best = min(best, direct)
            if a < len(code) and b < len(code):
                code_sep = min(code_sep, best)
    report.append(_entry("Frobenius-Hamming identity", "permuted risk identity", worst <= 1e-12, worst, 1e-12))

    if len(code) >= 2:
        claim = mu * K / (math.sqrt(34) * n)
        report.append(_entry("code separation", "permutation-resistant packing", code_sep >= claim, code_sep, claim))

    p0 = ProbabilityOperator(theta0, CommunityMatrix(b_omega(K, n, mu, zero), rho, normalized=False))
    kls = []
    for w in words:
        if np.any(w):
            p1 = ProbabilityOperator(theta0, CommunityMatrix(b_omega(K, n, mu, w), rho, normalized=False))
            kls.append(kl_divergence(p1, p0))
    kl_bound = 8 * mu**2 * rho
    report.append(_entry("KL bound", "KL of a nonzero word", max(kls) <= kl_bound, max(kls), kl_bound))

    if K <= 511:
        Bh = b_omega(K, n, mu, heavy)
        B0 = b_omega(K, n, mu, zero)
        sep = rho * min(float(np.linalg.norm(Bh[np.ix_(p, p)] - B0)) for p in perms)
        claim = K**2 * math.sqrt(rho) / (1152 * n)
        # equality holds at K = 2, so allow rounding slack
        report.append(_entry("two-point separation", "two-point risk scale", sep >= claim * (1 - 1e-12), sep, claim))
        kl_two = kls[-1]
        report.append(_entry("two-point KL", "two-point KL ceiling", kl_two <= KL_TWO_POINT_LIMIT, kl_two, KL_TWO_POINT_LIMIT))
    return report


def all_passed(report: list) -> bool:
    return all(entry["status"] == "pass" for entry in report)
