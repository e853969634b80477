"""Plain-text formats for graphs, memberships and estimate bundles.

Graph files list each undirected edge once as ``i j`` with ``i <= j``
(0-indexed) under a ``# n=<n>`` header. Membership files are CSV with header
``theta_1,...,theta_K``.
"""

from __future__ import annotations

import csv
import json
import re
import warnings
from pathlib import Path

import numpy as np

from .errors import ParameterError
from .estimators import EstimateBundle
from .model import MembershipMatrix, SparseGraph

_HEADER = re.compile(r"#\s*n\s*=\s*(\d+)\s*$")


def write_graph(path, graph: SparseGraph) -> None:
    i, j = graph.upper_pairs()
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"# n={graph.n}\n")
        for a, b in zip(i.tolist(), j.tolist()):
            fh.write(f"{a} {b}\n")


def read_graph(path) -> SparseGraph:
    with open(path, encoding="ascii") as fh:
        first = fh.readline()
        m = _HEADER.match(first.strip())
        if not m:
            raise ParameterError(f"{path}: first line must be '# n=<n>'")
        n = int(m.group(1))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)  # edgeless graphs are valid
            data = np.loadtxt(fh, dtype=np.int64, ndmin=2, comments="#")
    if data.size == 0:
        data = np.zeros((0, 2), dtype=np.int64)
    if data.shape[1] != 2:
        raise ParameterError(f"{path}: expected two columns per edge line")
    i, j = data[:, 0], data[:, 1]
    if np.any(i < 0) or np.any(j >= n) or np.any(i > j):
        raise ParameterError(f"{path}: edges must satisfy 0 <= i <= j < n")
    return SparseGraph.from_pairs(n, i, j)


def _write_matrix(path, M: np.ndarray, prefix: str) -> None:
    M = np.atleast_2d(M)
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"{prefix}_{k + 1}" for k in range(M.shape[1])])
        for row in M:
            w.writerow([repr(float(x)) for x in row])


def _read_matrix(path, prefix: str) -> np.ndarray:
    with open(path, newline="", encoding="ascii") as fh:
        r = csv.reader(fh)
        header = next(r)
        expected = [f"{prefix}_{k + 1}" for k in range(len(header))]
        if header != expected:
            raise ParameterError(f"{path}: header must be {','.join(expected)}")
        rows = [[float(x) for x in line] for line in r if line]
    return np.array(rows, dtype=float).reshape(-1, len(header))


def write_membership(path, theta) -> None:
    rows = theta.rows if isinstance(theta, MembershipMatrix) else np.asarray(theta)
    _write_matrix(path, rows, "theta")


def read_membership(path) -> MembershipMatrix:
    return MembershipMatrix(_read_matrix(path, "theta"))


def read_matrix_csv(path, prefix: str = "b") -> np.ndarray:
    return _read_matrix(path, prefix)


def write_bundle(prefix, bundle: EstimateBundle) -> dict:
    """Write ``<prefix>_theta.csv``, ``<prefix>_b.csv`` and ``<prefix>.json``.

    Returns the JSON sidecar contents.
    """
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    _write_matrix(f"{prefix}_theta.csv", bundle.theta_hat, "theta")
    _write_matrix(f"{prefix}_b.csv", bundle.b_hat, "b")
    meta = {
        "algorithm": bundle.algorithm,
        "k_hat": int(bundle.k_hat),
        "anchors": [int(a) for a in bundle.anchors],
        "selected_set_sizes": [int(len(s)) for s in bundle.selected_sets],
        "threshold": bundle.threshold_used,
        "a": bundle.a_used,
        "eigenvalues": [float(x) for x in bundle.l_tilde],
        "timings_ms": {k: float(v) for k, v in bundle.timings.items()},
    }
    with open(f"{prefix}.json", "w", encoding="ascii") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    return meta
