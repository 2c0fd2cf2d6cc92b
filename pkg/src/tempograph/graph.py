"""Graphs, precomputed sparse propagation operators and graph generators.

Edge ``(s, t)`` with weight ``w`` is stored as adjacency entry ``W[s, t] = w``.
Operators act on node-feature matrices from the left, so ``(P @ X)[i]`` mixes
the features of the nodes that ``P`` row ``i`` points to. Undirected graphs
carry both directions explicitly.
"""

import threading
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .autodiff import ShapeError, Tensor, _make

__all__ = [
    "Graph",
    "SparseOperator",
    "spmm",
    "identity_operator",
    "sym_norm_adjacency",
    "scaled_laplacian",
    "random_walk_matrices",
    "estimate_lambda_max",
    "exact_lambda_max",
    "watts_strogatz",
]

OPERATOR_KINDS = ("identity", "sym_norm_adjacency", "laplacian", "scaled_laplacian", "rw_out", "rw_in")


class Graph:
    """Immutable weighted directed graph on nodes ``0 .. num_nodes - 1``.

    ``edge_index`` has shape ``(2, E)`` (sources in row 0, targets in row 1).
    Missing weights default to 1.0.
    """

    def __init__(self, num_nodes, edge_index, edge_weight=None):
        num_nodes = int(num_nodes)
        if num_nodes < 1:
            raise ValueError(f"num_nodes must be positive, got {num_nodes}")
        ei = np.asarray(edge_index, dtype=np.int64)
        if ei.size == 0:
            ei = np.zeros((2, 0), dtype=np.int64)
        if ei.ndim != 2 or ei.shape[0] != 2:
            raise ValueError(f"edge_index must have shape (2, E), got {ei.shape}")
        if ei.size and (ei.min() < 0 or ei.max() >= num_nodes):
            raise ValueError(f"edge_index references a node outside [0, {num_nodes})")
        if edge_weight is None:
            ew = np.ones(ei.shape[1], dtype=np.float64)
        else:
            ew = np.asarray(edge_weight, dtype=np.float64).reshape(-1)
        if ew.shape[0] != ei.shape[1]:
            raise ValueError(f"{ew.shape[0]} edge weights for {ei.shape[1]} edges")
        if not np.isfinite(ew).all() or (ew < 0).any():
            raise ValueError("edge weights must be finite and nonnegative")
        ei.setflags(write=False)
        ew.setflags(write=False)
        self.num_nodes = num_nodes
        self.edge_index = ei
        self.edge_weight = ew
        self._cache = {}
        self._lock = threading.RLock()

    @property
    def num_edges(self):
        return self.edge_index.shape[1]

    def degree(self):
        """Weighted out-degree of every node."""
        return np.bincount(self.edge_index[0], weights=self.edge_weight, minlength=self.num_nodes)

    def dense_adjacency(self):
        w = np.zeros((self.num_nodes, self.num_nodes))
        np.add.at(w, (self.edge_index[0], self.edge_index[1]), self.edge_weight)
        return w

    def cached(self, key, build):
        op = self._cache.get(key)
        if op is None:
            with self._lock:
                op = self._cache.get(key)
                if op is None:
                    op = build()
                    self._cache[key] = op
        return op

    def __repr__(self):
        return f"Graph(num_nodes={self.num_nodes}, num_edges={self.num_edges})"


def _to_csr(n, rows, cols, vals):
    """Coalesced CSR arrays (duplicates summed, columns sorted within rows)."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.float64)
    keep = vals != 0.0
    rows, cols, vals = rows[keep], cols[keep], vals[keep]
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    if rows.size:
        new = np.ones(rows.size, dtype=bool)
        new[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
        starts = np.flatnonzero(new)
        vals = np.add.reduceat(vals, starts)
        rows, cols = rows[starts], cols[starts]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    return indptr, cols, vals


@dataclass(frozen=True, eq=False)
class SparseOperator:
    """Non-trainable ``n x n`` operator in CSR form with its transpose."""

    kind: str
    num_nodes: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    t_indptr: np.ndarray
    t_indices: np.ndarray
    t_data: np.ndarray

    @classmethod
    def from_coo(cls, kind, n, rows, cols, vals):
        if kind not in OPERATOR_KINDS:
            raise ValueError(f"unknown operator kind {kind!r}")
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        indptr, indices, data = _to_csr(n, rows, cols, vals)
        t_indptr, t_indices, t_data = _to_csr(n, cols, rows, vals)
        for a in (indptr, indices, data, t_indptr, t_indices, t_data):
            a.setflags(write=False)
        return cls(kind, n, indptr, indices, data, t_indptr, t_indices, t_data)

    @classmethod
    def from_dense(cls, kind, mat):
        mat = np.asarray(mat, dtype=np.float64)
        rows, cols = np.nonzero(mat)
        return cls.from_coo(kind, mat.shape[0], rows, cols, mat[rows, cols])

    @property
    def nnz(self):
        return self.data.shape[0]

    def entries(self):
        """``(row, col, value)`` coordinate triples."""
        rows = np.repeat(np.arange(self.num_nodes), np.diff(self.indptr))
        return rows, self.indices.copy(), self.data.copy()

    def to_dense(self):
        out = np.zeros((self.num_nodes, self.num_nodes))
        rows, cols, vals = self.entries()
        out[rows, cols] = vals
        return out

    def row_sums(self):
        return _kernels.csr_rowsum(self.indptr, self.data)

    def apply(self, x):
        """Untracked ``self @ x`` on a plain array."""
        return _kernels.csr_spmm(self.indptr, self.indices, self.data, np.ascontiguousarray(x, dtype=np.float64))

    def apply_transpose(self, x):
        return _kernels.csr_spmm(self.t_indptr, self.t_indices, self.t_data, np.ascontiguousarray(x, dtype=np.float64))


def spmm(op, x):
    """Tracked sparse-dense product ``op @ x``; gradient flows to ``x`` only."""
    if op.num_nodes != x.shape[0]:
        raise ShapeError(f"spmm: operator on {op.num_nodes} nodes applied to {x.shape[0]} rows")
    out = op.apply(x.values)
    return _make(out, (x,), lambda g: (op.apply_transpose(g),), "spmm")


def identity_operator(n):
    idx = np.arange(n)
    return SparseOperator.from_coo("identity", n, idx, idx, np.ones(n))


def _inv_sqrt(deg):
    out = np.zeros_like(deg)
    pos = deg > 0
    out[pos] = 1.0 / np.sqrt(deg[pos])
    return out


def _inv(deg):
    out = np.zeros_like(deg)
    pos = deg > 0
    out[pos] = 1.0 / deg[pos]
    return out


def sym_norm_adjacency(g, add_self_loops=True):
    """``D^-1/2 (A + sI) D^-1/2``; zero-degree nodes give zero rows and columns."""

    def build():
        rows, cols, w = g.edge_index[0], g.edge_index[1], g.edge_weight
        if add_self_loops:
            loop = np.arange(g.num_nodes)
            rows = np.concatenate([rows, loop])
            cols = np.concatenate([cols, loop])
            w = np.concatenate([w, np.ones(g.num_nodes)])
        deg = np.bincount(rows, weights=w, minlength=g.num_nodes)
        d = _inv_sqrt(deg)
        return SparseOperator.from_coo("sym_norm_adjacency", g.num_nodes, rows, cols, d[rows] * w * d[cols])

    return g.cached(("sym_norm_adjacency", bool(add_self_loops)), build)


def _symmetrized(g):
    """Edges of ``(W + W^T) / 2`` as COO arrays."""
    rows = np.concatenate([g.edge_index[0], g.edge_index[1]])
    cols = np.concatenate([g.edge_index[1], g.edge_index[0]])
    w = np.concatenate([g.edge_weight, g.edge_weight]) * 0.5
    return rows, cols, w


def _laplacian(g):
    """Normalized Laplacian ``I - D^-1/2 A D^-1/2`` of the symmetrized graph."""

    def build():
        rows, cols, w = _symmetrized(g)
        deg = np.bincount(rows, weights=w, minlength=g.num_nodes)
        d = _inv_sqrt(deg)
        loop = np.arange(g.num_nodes)
        return SparseOperator.from_coo(
            "laplacian",
            g.num_nodes,
            np.concatenate([loop, rows]),
            np.concatenate([loop, cols]),
            np.concatenate([np.ones(g.num_nodes), -d[rows] * w * d[cols]]),
        )

    return g.cached(("laplacian",), build)


def estimate_lambda_max(op, max_iter=200, tol=1e-8, seed=0):
    """Largest eigenvalue of a symmetric PSD operator by power iteration.

    Stops after ``max_iter`` iterations or once the Rayleigh quotient changes
    by less than ``tol`` relative to its value.
    """
    n = op.num_nodes
    v = np.random.default_rng(seed).uniform(0.5, 1.5, size=(n, 1))
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = op.apply(v)
        new = float((v * w).sum())
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        if abs(new - lam) <= tol * abs(new):
            lam = new
            break
        lam = new
    return lam


DENSE_EIGEN_MAX_NODES = 1024


def exact_lambda_max(op):
    """Largest eigenvalue of a symmetric operator.

    Graphs with at most ``DENSE_EIGEN_MAX_NODES`` nodes use a dense symmetric
    eigensolver. Power iteration stalls when the top two eigenvalues are
    close, and its estimate is then a lower bound that pushes the scaled
    spectrum past 1. Larger graphs fall back to :func:`estimate_lambda_max`.
    """
    if op.num_nodes <= DENSE_EIGEN_MAX_NODES:
        return float(np.linalg.eigvalsh(op.to_dense())[-1])
    return estimate_lambda_max(op)


def scaled_laplacian(g, lambda_max=2.0):
    """``2 L / lambda_max - I`` with ``L`` the normalized Laplacian.

    ``lambda_max="exact"`` computes the largest eigenvalue of ``L`` (see
    :func:`exact_lambda_max`); otherwise the given positive constant is used.
    """
    if isinstance(lambda_max, str):
        if lambda_max != "exact":
            raise ValueError(f"lambda_max must be a positive number or 'exact', got {lambda_max!r}")
        key = ("scaled_laplacian", "exact")
    else:
        lambda_max = float(lambda_max)
        if not lambda_max > 0 or not np.isfinite(lambda_max):
            raise ValueError(f"lambda_max must be positive, got {lambda_max}")
        key = ("scaled_laplacian", lambda_max)

    def build():
        lap = _laplacian(g)
        lam = exact_lambda_max(lap) if lambda_max == "exact" else lambda_max
        if lam <= 1e-12:
            # edgeless graphs have L = I
            lam = 1.0
        rows, cols, vals = lap.entries()
        vals = vals * (2.0 / lam)
        vals[rows == cols] -= 1.0
        return SparseOperator.from_coo("scaled_laplacian", g.num_nodes, rows, cols, vals)

    return g.cached(key, build)


def random_walk_matrices(g):
    """Forward ``D_O^-1 W`` and backward ``D_I^-1 W^T`` transition operators."""

    def build():
        src, dst, w = g.edge_index[0], g.edge_index[1], g.edge_weight
        d_out = _inv(np.bincount(src, weights=w, minlength=g.num_nodes))
        d_in = _inv(np.bincount(dst, weights=w, minlength=g.num_nodes))
        rw_out = SparseOperator.from_coo("rw_out", g.num_nodes, src, dst, d_out[src] * w)
        rw_in = SparseOperator.from_coo("rw_in", g.num_nodes, dst, src, d_in[dst] * w)
        return rw_out, rw_in

    return g.cached(("random_walk",), build)


def watts_strogatz(n, k, p, rng):
    """Small-world graph: ring lattice of ``k`` nearest neighbours, rewired.

    Each lattice edge ``(u, u + j)`` keeps ``u`` and, with probability ``p``,
    swaps its far endpoint for a uniformly drawn node that is neither ``u``
    nor already adjacent to ``u``. Rewiring leaves an edge in place when
    ``u`` is adjacent to every other node. Edges are stored in both
    directions with unit weight.
    """
    n, k = int(n), int(k)
    if n < 2:
        raise ValueError(f"watts_strogatz needs n >= 2, got {n}")
    if k < 0 or k % 2 or k >= n:
        raise ValueError(f"k must be even with 0 <= k < n, got k={k}, n={n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"rewiring probability must lie in [0, 1], got {p}")
    half = k // 2
    adj = [set() for _ in range(n)]
    edges = []
    for j in range(1, half + 1):
        for u in range(n):
            v = (u + j) % n
            adj[u].add(v)
            adj[v].add(u)
            edges.append([u, v])
    if p > 0:
        # one pass per lattice ring, like the classic construction
        flips = rng.random(len(edges)) < p
        for e in np.flatnonzero(flips):
            u, v = edges[e]
            if len(adj[u]) >= n - 1:
                continue
            while True:
                w = int(rng.integers(n))
                if w != u and w not in adj[u]:
                    break
            adj[u].discard(v)
            adj[v].discard(u)
            adj[u].add(w)
            adj[w].add(u)
            edges[e] = [u, w]
    und = np.asarray(edges, dtype=np.int64).reshape(-1, 2).T
    edge_index = np.concatenate([und, und[::-1]], axis=1)
    return Graph(n, edge_index)
