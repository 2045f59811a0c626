"""Spanning-tree counting on sampled random graphs.

The empirical route to the entropy: sample G(n, c/n), extract the giant
component, and compute log tau(G) as the log-determinant of the Laplacian
with one row/column deleted (any cofactor of the Laplacian counts spanning
trees).  The factorization is a dense symmetric Cholesky with the log of
each pivot accumulated, so tau itself (exp of order n) never materializes.
n is capped at desk scale; sparse factorizations are out of scope.
"""

from __future__ import annotations

import math
import time

import numpy as np
from scipy.linalg import lapack
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .reports import EstimateReport
from .rng import derive_seed, substream

__all__ = [
    "SparseGraph",
    "ComplexityResult",
    "sample_gnp",
    "giant_component",
    "log_spanning_trees",
    "empirical_f",
    "write_edgelist",
    "read_edgelist",
    "DENSE_FACTORIZATION_CAP",
]

DENSE_FACTORIZATION_CAP = 4000


class SparseGraph:
    """Simple undirected graph: n vertices, canonical (u < v) edge array."""

    def __init__(self, n: int, edges):
        self.n = int(n)
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        self.edges = e
        self.validate()

    @classmethod
    def from_edges(cls, n: int, pairs) -> "SparseGraph":
        """Build from arbitrary pair order: canonicalizes, sorts, dedupes."""
        e = np.asarray(list(pairs), dtype=np.int64).reshape(-1, 2)
        e = np.sort(e, axis=1)
        e = np.unique(e, axis=0)
        return cls(n, e)

    def validate(self) -> None:
        if self.n < 1:
            raise ValueError(f"graph needs n >= 1 vertices, got {self.n}")
        e = self.edges
        if len(e):
            if e.min() < 0 or e.max() >= self.n:
                raise ValueError("edge endpoint out of range")
            if (e[:, 0] >= e[:, 1]).any():
                raise ValueError("edges must be canonical u < v (no self-loops)")
            if len(np.unique(e, axis=0)) != len(e):
                raise ValueError("duplicate edges")

    @property
    def m(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        return (np.bincount(self.edges[:, 0], minlength=self.n)
                + np.bincount(self.edges[:, 1], minlength=self.n))

    def adjacency(self) -> csr_matrix:
        e = self.edges
        data = np.ones(2 * len(e), dtype=np.int8)
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        return csr_matrix((data, (rows, cols)), shape=(self.n, self.n))


class ComplexityResult:
    """log of the spanning-tree count and its per-vertex normalization."""

    def __init__(self, log_tau: float, n_giant: int):
        self.log_tau = log_tau
        self.n_giant = n_giant
        self.per_vertex = log_tau / n_giant

    def to_dict(self) -> dict:
        return {"log_tau": self.log_tau, "n_giant": self.n_giant,
                "per_vertex": self.per_vertex}


def sample_gnp(n: int, p: float, seed: int) -> SparseGraph:
    """Erdos-Renyi G(n, p): each of the C(n,2) pairs kept independently with
    probability p, generated by geometric skipping over the pair index."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"p must lie in [0, 1], got {p}")
    total = n * (n - 1) // 2
    if p == 0.0 or total == 0:
        return SparseGraph(n, np.empty((0, 2), dtype=np.int64))
    if p == 1.0:
        iu = np.triu_indices(n, k=1)
        return SparseGraph(n, np.stack(iu, axis=1))

    rng = substream(seed, "gnp", n, p)
    picks = []
    pos = -1
    while True:
        batch = max(256, int((total - pos) * p * 1.1) + 16)
        gaps = rng.geometric(p, size=batch)
        lin = pos + np.cumsum(gaps)
        inside = lin[lin < total]
        picks.append(inside)
        if len(inside) < len(lin):
            break
        pos = int(lin[-1])
    lin = np.concatenate(picks)
    # linear pair index -> (i, j): row i holds indices [off[i], off[i+1])
    off = np.concatenate(([0], np.cumsum(n - 1 - np.arange(n - 1))))
    i = np.searchsorted(off, lin, side="right") - 1
    j = lin - off[i] + i + 1
    return SparseGraph(n, np.stack([i, j], axis=1))


def giant_component(g: SparseGraph) -> tuple[SparseGraph, np.ndarray]:
    """Induced subgraph on the largest component (ties broken by smallest
    contained vertex id), vertices relabeled contiguously in old-id order.
    Returns (subgraph, mapping) with mapping[new_id] = old_id."""
    _, labels = connected_components(g.adjacency(), directed=False)
    sizes = np.bincount(labels)
    candidates = np.flatnonzero(sizes == sizes.max())
    _, first_occurrence = np.unique(labels, return_index=True)
    best = candidates[np.argmin(first_occurrence[candidates])]
    keep = labels == best
    old_ids = np.flatnonzero(keep)
    new_of_old = np.full(g.n, -1, dtype=np.int64)
    new_of_old[old_ids] = np.arange(len(old_ids))
    if g.m:
        emask = keep[g.edges[:, 0]] & keep[g.edges[:, 1]]
        new_edges = new_of_old[g.edges[emask]]
    else:
        new_edges = np.empty((0, 2), dtype=np.int64)
    return SparseGraph(len(old_ids), new_edges), old_ids


def log_spanning_trees(g: SparseGraph, ground: int = 0) -> ComplexityResult:
    """log tau(G) via the Matrix-Tree theorem: Cholesky of the Laplacian with
    the ground row/column deleted, pivots accumulated in the log domain.

    Raises on a nonpositive pivot (disconnected input or numerical
    breakdown), naming the pivot index.
    """
    n = g.n
    if not (0 <= ground < n):
        raise ValueError(f"ground vertex {ground} out of range")
    if n == 1:
        return ComplexityResult(0.0, 1)
    lap = np.zeros((n, n))
    deg = g.degrees().astype(float)
    np.fill_diagonal(lap, deg)
    e = g.edges
    lap[e[:, 0], e[:, 1]] = -1.0
    lap[e[:, 1], e[:, 0]] = -1.0
    idx = np.concatenate([np.arange(ground), np.arange(ground + 1, n)])
    reduced = lap[np.ix_(idx, idx)]
    cf, info = lapack.dpotrf(reduced, lower=1, overwrite_a=1, clean=0)
    if info > 0:
        raise ValueError(
            f"nonpositive pivot at index {info - 1} while factorizing the "
            "reduced Laplacian: graph disconnected or numerical breakdown")
    if info < 0:
        raise RuntimeError(f"dpotrf: illegal argument {-info}")
    log_tau = 2.0 * float(np.sum(np.log(np.diagonal(cf))))
    return ComplexityResult(log_tau, n)


def empirical_f(n: int, c: float, reps: int, seed: int,
                dense_cap: int = DENSE_FACTORIZATION_CAP) -> EstimateReport:
    """Mean per-vertex log spanning-tree count of the giant of G(n, c/n)
    over independent repetitions."""
    if not (1 <= n <= dense_cap):
        raise ValueError(f"n must lie in [1, {dense_cap}], got {n}")
    if not (c > 1.0) or not math.isfinite(c):
        raise ValueError(f"empirical_f requires finite c > 1, got {c}")
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    t0 = time.perf_counter()
    vals = np.zeros(reps)
    for r in range(reps):
        graph = sample_gnp(n, c / n, derive_seed(seed, "empirical_f", r))
        giant, _ = giant_component(graph)
        res = log_spanning_trees(giant)
        if not (res.per_vertex >= 0.0 and math.isfinite(res.per_vertex)):
            raise ArithmeticError(
                f"per-vertex complexity {res.per_vertex} out of range")
        vals[r] = res.per_vertex
    stderr = float(vals.std(ddof=1) / math.sqrt(reps)) if reps > 1 else math.nan
    return EstimateReport(
        value=float(vals.mean()),
        stderr=stderr,
        n_samples=reps,
        truncation={"n": n},
        seed=seed,
        wall_time=time.perf_counter() - t0)


def write_edgelist(g: SparseGraph, path) -> None:
    """Flat text format: header 'n m', then one 'u v' line per edge."""
    with open(path, "w") as fh:
        fh.write(f"{g.n} {g.m}\n")
        for u, v in g.edges:
            fh.write(f"{u} {v}\n")


def read_edgelist(path) -> SparseGraph:
    with open(path) as fh:
        n, m = map(int, fh.readline().split())
        edges = [tuple(map(int, fh.readline().split())) for _ in range(m)]
    return SparseGraph.from_edges(n, edges)
