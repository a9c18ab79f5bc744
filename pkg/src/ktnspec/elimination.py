"""Structured elimination for shifted Laplacian systems.

Systems of the form (Lap(w) - diag(mu)) z = b are factored without ever
forming a diagonal by subtraction except at the pivot itself. This keeps
eigenvalues many orders of magnitude below ``max L_ii`` resolvable, which a
generic LU of ``L_sym - rho I`` cannot do.

The fill pattern depends only on the graph, so it is computed once per
network (minimum-degree ordering) and reused for every shift and temperature.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from . import kernels
from .kernels import vectorized
from .network import Network


@dataclass(frozen=True, eq=False)
class EliminationPattern:
    """Symbolic factor: elimination order, per-step later neighbours and fill pairs.

    Edge slots ``0 .. n_base-1`` are the network's edges; the rest are fill.
    Step ``t`` eliminates ``perm[t]``; its later neighbours are
    ``col_nodes[col_ptr[t]:col_ptr[t+1]]`` joined through slots ``col_edges``.
    ``pair_edges[pair_ptr[t]:pair_ptr[t+1]]`` lists the slot of every neighbour
    pair (a, b), a before b in that list, in row-major order.
    """

    perm: np.ndarray
    col_ptr: np.ndarray
    col_nodes: np.ndarray
    col_edges: np.ndarray
    pair_ptr: np.ndarray
    pair_edges: np.ndarray
    n_base: int
    n_slots: int

    @property
    def n(self) -> int:
        return len(self.perm)

    @property
    def fill(self) -> int:
        return self.n_slots - self.n_base


def symbolic_pattern(n: int, edge_i, edge_j) -> EliminationPattern:
    """Minimum-degree elimination pattern, ties broken by lowest index."""
    adj = [dict() for _ in range(n)]
    for e, (a, b) in enumerate(zip(edge_i.tolist(), edge_j.tolist())):
        adj[a][b] = e
        adj[b][a] = e
    n_slots = len(edge_i)
    heap = [(len(adj[v]), v) for v in range(n)]
    heapq.heapify(heap)
    done = np.zeros(n, bool)
    perm = []
    col_ptr = [0]
    col_nodes, col_edges = [], []
    pair_ptr = [0]
    pair_edges = []
    while heap:
        deg, v = heapq.heappop(heap)
        if done[v] or deg != len(adj[v]):
            continue
        done[v] = True
        perm.append(v)
        nb = sorted(adj[v])
        col_nodes.extend(nb)
        col_edges.extend(adj[v][x] for x in nb)
        col_ptr.append(len(col_nodes))
        for ia, a in enumerate(nb):
            da = adj[a]
            for b in nb[ia + 1:]:
                e = da.get(b)
                if e is None:
                    e = n_slots
                    n_slots += 1
                    da[b] = e
                    adj[b][a] = e
                pair_edges.append(e)
        pair_ptr.append(len(pair_edges))
        for a in nb:
            del adj[a][v]
            heapq.heappush(heap, (len(adj[a]), a))
        adj[v] = {}
    as64 = lambda x: np.asarray(x, dtype=np.int64)  # noqa: E731
    return EliminationPattern(as64(perm), as64(col_ptr), as64(col_nodes), as64(col_edges),
                              as64(pair_ptr), as64(pair_edges), len(edge_i), n_slots)


def network_pattern(net: Network) -> EliminationPattern:
    """Cached elimination pattern of a network."""
    pat = getattr(net, "_elim_pattern", None)
    if pat is None:
        pat = symbolic_pattern(net.n_states, net.edge_i, net.edge_j)
        object.__setattr__(net, "_elim_pattern", pat)
    return pat


@dataclass(frozen=True, eq=False)
class ShiftedFactor:
    """LDL^T of Lap(w) - diag(mu) on a fixed pattern."""

    pattern: EliminationPattern
    pivots: np.ndarray
    lval: np.ndarray

    def solve(self, b) -> np.ndarray:
        p = self.pattern
        dt = self.pivots.dtype
        sol = vectorized.ldl_solve if dt != np.float64 else kernels.ldl_solve
        return sol(p.perm, p.col_ptr, p.col_nodes, self.lval, self.pivots,
                   np.ascontiguousarray(b, dtype=dt))

    @property
    def inertia_negative(self) -> int:
        """Number of negative pivots (eigenvalues of the system below zero)."""
        return int(np.count_nonzero(self.pivots < 0))


def factor_shifted(pattern: EliminationPattern, w, mu) -> ShiftedFactor | None:
    """Factor Lap(w) - diag(mu); None when an exact zero pivot appears.

    float64 input uses the selected backend; any other float dtype (e.g.
    ``np.longdouble``) runs the numpy kernels in that precision.
    """
    w = np.asarray(w)
    w0 = np.zeros(pattern.n_slots, w.dtype)
    w0[:pattern.n_base] = w
    ext = w.dtype != np.float64
    fac = vectorized.shifted_ldl if ext else kernels.shifted_ldl
    piv, lval, ok = fac(pattern.perm, pattern.col_ptr, pattern.col_nodes, pattern.col_edges,
                        pattern.pair_ptr, pattern.pair_edges, w0,
                        np.ascontiguousarray(mu, dtype=w.dtype))
    if not ok:
        return None
    return ShiftedFactor(pattern, piv, lval)
