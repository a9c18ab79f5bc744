"""Minimum spanning tree, barrier/escape functions and the zero-temperature spectrum.

The asymptotic recursion repeatedly picks the state with the largest escape
barrier v(i) = u(i) - V_i as a new sink, cuts the highest saddle on its tree
path to the previous sink of its component, and updates u only inside the
component that was split off.
"""
from __future__ import annotations

import heapq
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DomainError, StructuralError
from .network import Network

GENERICNESS_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SpanningTree:
    """MST rooted at the global minimum, with ancestor-jump tables for path maxima.

    ``edges`` are network edge ids. ``parent``/``parent_edge`` describe the
    rooted tree (-1 at the root). ``cut_rank[e]`` ranks tree edges by
    (V ascending, pair descending), so the maximal rank on a path selects the
    highest saddle and, among equal saddles, the lexicographically smallest
    pair.
    """

    network: Network
    edges: np.ndarray
    root: int
    parent: np.ndarray
    parent_edge: np.ndarray
    depth: np.ndarray
    bfs_order: np.ndarray
    indptr: np.ndarray
    adj_state: np.ndarray
    adj_edge: np.ndarray
    cut_rank: np.ndarray
    _up: np.ndarray = field(repr=False)
    _up_edge: np.ndarray = field(repr=False)

    @property
    def n_states(self) -> int:
        return self.network.n_states

    @property
    def cost(self) -> float:
        return float(self.network.edge_V[self.edges].sum())

    def edge_V(self, e) -> np.ndarray:
        return self.network.edge_V[e]

    def lca(self, i: int, j: int) -> int:
        up, depth = self._up, self.depth
        if depth[i] < depth[j]:
            i, j = j, i
        diff = depth[i] - depth[j]
        k = 0
        while diff:
            if diff & 1:
                i = up[k, i]
            diff >>= 1
            k += 1
        if i == j:
            return int(i)
        for k in range(up.shape[0] - 1, -1, -1):
            if up[k, i] != up[k, j]:
                i, j = up[k, i], up[k, j]
        return int(self.parent[i])

    def _climb_max(self, i: int, steps: int):
        """Highest-rank edge on the first ``steps`` edges above i (rank, edge)."""
        best_r, best_e = -1, -1
        k = 0
        while steps:
            if steps & 1:
                e = self._up_edge[k, i]
                if e >= 0 and self.cut_rank[e] > best_r:
                    best_r, best_e = self.cut_rank[e], e
                i = self._up[k, i]
            steps >>= 1
            k += 1
        return best_r, best_e

    def path_max_edge(self, i: int, j: int) -> int:
        """Network edge id of the highest saddle on the tree path (-1 if i == j)."""
        if i == j:
            return -1
        a = self.lca(i, j)
        ri, ei = self._climb_max(i, int(self.depth[i] - self.depth[a]))
        rj, ej = self._climb_max(j, int(self.depth[j] - self.depth[a]))
        return int(ei if ri > rj else ej)

    def path(self, i: int, j: int) -> np.ndarray:
        a = self.lca(i, j)
        left, right = [], []
        x = i
        while x != a:
            left.append(x)
            x = int(self.parent[x])
        x = j
        while x != a:
            right.append(x)
            x = int(self.parent[x])
        return np.array(left + [a] + right[::-1], dtype=np.int64)


def _ancestor_tables(parent, parent_edge, cut_rank, root):
    n = len(parent)
    levels = max(1, int(np.ceil(np.log2(max(n, 2)))) + 1)
    up = np.empty((levels, n), np.int64)
    up_edge = np.empty((levels, n), np.int64)
    up[0] = np.where(parent >= 0, parent, root)
    up_edge[0] = parent_edge
    rank = np.append(cut_rank, -1)  # index -1 maps to "no edge"
    for k in range(1, levels):
        mid = up[k - 1]
        up[k] = up[k - 1][mid]
        a, b = up_edge[k - 1], up_edge[k - 1][mid]
        up_edge[k] = np.where(rank[b] > rank[a], b, a)
    return up, up_edge


def kruskal_order(net: Network) -> np.ndarray:
    """Edge ids sorted by (V, smaller endpoint, larger endpoint)."""
    return np.lexsort((net.edge_j, net.edge_i, net.edge_V))


def minimum_spanning_tree(net: Network) -> SpanningTree:
    """Kruskal MST over saddle energies, deterministic under ties."""
    n = net.n_states
    if n == 0:
        raise StructuralError("empty network")
    order = kruskal_order(net)
    taken = kernels.kruskal(n, net.edge_i, net.edge_j, order)
    edges = np.sort(order[taken])
    if len(edges) != n - 1:
        raise StructuralError("network is disconnected; no spanning tree")
    m = net.n_edges
    ti, tj = net.edge_i[edges], net.edge_j[edges]
    heads = np.concatenate([ti, tj])
    tails = np.concatenate([tj, ti])
    eids = np.concatenate([edges, edges])
    perm = np.lexsort((tails, heads))
    indptr = np.zeros(n + 1, np.int64)
    np.cumsum(np.bincount(heads, minlength=n), out=indptr[1:])
    adj_state, adj_edge = tails[perm], eids[perm]
    root = int(np.argmin(net.V))
    bfs, parent, pedge, depth = kernels.root_tree(n, indptr, adj_state, adj_edge, root)
    cut_rank = np.full(m, -1, np.int64)
    # V ascending, then pair descending
    o = np.lexsort((-net.edge_j[edges], -net.edge_i[edges], net.edge_V[edges]))
    cut_rank[edges[o]] = np.arange(len(edges))
    up, up_edge = _ancestor_tables(parent, pedge, cut_rank, root)
    return SpanningTree(net, edges, root, parent, pedge, depth, bfs, indptr, adj_state,
                        adj_edge, cut_rank, up, up_edge)


@dataclass(frozen=True, eq=False)
class BarrierFunctions:
    """u, v and nearest-sink labels; NaN / -1 outside the evaluated region.

    At sinks u = V and v = 0.
    """

    u: np.ndarray
    v: np.ndarray
    sink_assignment: np.ndarray


def barrier_escape(tree: SpanningTree, sinks, restricted_to=None) -> BarrierFunctions:
    """Multi-source minimax sweep over the tree (or one forest component)."""
    net = tree.network
    n = net.n_states
    sinks = np.unique(np.asarray(list(sinks), dtype=np.int64))
    if len(sinks) == 0:
        raise StructuralError("sink set is empty")
    allowed = np.ones(n, bool)
    if restricted_to is not None:
        allowed[:] = False
        allowed[np.asarray(list(restricted_to), dtype=np.int64)] = True
        if not allowed[sinks].all():
            raise StructuralError("a sink lies outside the restricted component")
    u = np.full(n, np.inf)
    lab = np.full(n, -1, np.int64)
    heap = []
    for s in sinks:
        u[s] = -np.inf
        lab[s] = s
        heap.append((-np.inf, int(s), int(s)))
    heapq.heapify(heap)
    done = np.zeros(n, bool)
    eV = net.edge_V
    while heap:
        du, x, s = heapq.heappop(heap)
        if done[x]:
            continue
        done[x] = True
        for p in range(tree.indptr[x], tree.indptr[x + 1]):
            y = int(tree.adj_state[p])
            if done[y] or not allowed[y]:
                continue
            c = max(du, eV[tree.adj_edge[p]])
            if c < u[y] or (c == u[y] and s < lab[y]):
                u[y] = c
                lab[y] = s
                heapq.heappush(heap, (c, y, s))
    u[sinks] = net.V[sinks]
    u[~done] = np.nan
    lab[~done] = -1
    v = u - net.V
    return BarrierFunctions(u, v, lab)


@dataclass(frozen=True, eq=False)
class AsymptoticEigenpair:
    """One step of the zero-temperature recursion (0-based internal states)."""

    k: int
    sink: int
    cutting_edge: int
    p: int
    q: int
    delta: float
    S: np.ndarray
    C: np.ndarray
    parent_sink: int

    def indicator(self, n: int) -> np.ndarray:
        x = np.zeros(n)
        x[self.S] = 1.0
        return x


@dataclass(frozen=True)
class DeltaTie:
    """Consecutive ranks whose barriers coincide within tolerance."""

    k: int
    delta: float
    benign: bool


@dataclass(frozen=True, eq=False)
class AsymptoticSpectrum(Sequence):
    """Sequence of AsymptoticEigenpair with the tree and final barrier state."""

    pairs: tuple
    tree: SpanningTree
    root: int
    u: np.ndarray
    ties: tuple

    def __getitem__(self, k):
        return self.pairs[k]

    def __len__(self):
        return len(self.pairs)

    def by_sink(self, s: int) -> AsymptoticEigenpair:
        for p in self.pairs:
            if p.sink == s:
                return p
        raise KeyError(s)

    @property
    def deltas(self) -> np.ndarray:
        return np.array([p.delta for p in self.pairs])

    @property
    def sinks(self) -> np.ndarray:
        return np.array([self.root] + [p.sink for p in self.pairs], dtype=np.int64)


def asymptotic_spectrum(net: Network, K: int | None = None, tree: SpanningTree | None = None,
                        keep_sets: bool = True) -> AsymptoticSpectrum:
    """First K steps of the sink / cutting-edge recursion.

    Barriers come out non-increasing, Delta_1 >= Delta_2 >= ...; exact
    repeats (within GENERICNESS_TOL) are reported in ``ties``. With
    ``keep_sets=False`` the S_k and C_k arrays are dropped (memory at scale).
    """
    n = net.n_states
    if K is None:
        K = n - 1
    if not 1 <= K <= n - 1:
        raise DomainError(f"K must satisfy 1 <= K <= N-1 = {n - 1}, got {K}")
    if tree is None:
        tree = minimum_spanning_tree(net)
    V = net.V
    eV = net.edge_V
    root = tree.root
    removed = np.zeros(net.n_edges, bool)
    is_sink = np.zeros(n, bool)
    is_sink[root] = True
    comp_sink = np.full(n, root, np.int64)
    u = np.full(n, np.inf)
    members = np.empty(n, np.int64)
    changed = np.zeros(n, bool)
    kernels.forest_update(tree.indptr, tree.adj_state, tree.adj_edge, eV, removed, root, u,
                          members, changed)
    u[root] = V[root]
    v = u - V
    v[root] = -np.inf
    pairs = []
    ties = []
    for k in range(1, K + 1):
        s = int(np.argmax(v))
        delta = float(v[s])
        c = int(comp_sink[s])
        e = tree.path_max_edge(s, c)
        removed[e] = True
        changed[:] = False
        cnt = kernels.forest_update(tree.indptr, tree.adj_state, tree.adj_edge, eV, removed, s,
                                    u, members, changed)
        S = members[:cnt].copy()
        u[s] = V[s]
        changed[s] = True
        comp_sink[S] = s
        is_sink[s] = True
        v[S] = u[S] - V[S]
        v[s] = -np.inf
        if keep_sets:
            S_out = np.sort(S)
            C_out = S_out[changed[S_out]]
        else:
            S_out = C_out = np.zeros(0, np.int64)
        pairs.append(AsymptoticEigenpair(k, s, int(e), int(net.edge_i[e]), int(net.edge_j[e]),
                                         delta, S_out, C_out, c))
        if k > 1 and abs(pairs[-2].delta - delta) <= GENERICNESS_TOL * max(1.0, abs(delta)):
            prev = pairs[-2]
            # the new cut is harmful only if it lands in either piece of the split
            # that produced the previous tied rank
            same = c in (prev.sink, prev.parent_sink)
            ties.append(DeltaTie(k - 1, delta, not same))
    return AsymptoticSpectrum(tuple(pairs), tree, root, u, tuple(ties))


@dataclass(frozen=True)
class GenericnessReport:
    """Coincidences among V_i, V_ij and saddle-minus-minimum barriers.

    Each duplicate entry lists a group of (0-based) indices whose values agree
    within tolerance. Barrier differences are taken over (edge, endpoint)
    pairs, the only differences that can become Delta_k.
    """

    duplicate_V: tuple
    duplicate_edge_V: tuple
    duplicate_barriers: tuple
    delta_ties: tuple

    @property
    def is_generic(self) -> bool:
        return not (self.duplicate_V or self.duplicate_edge_V or self.duplicate_barriers
                    or self.delta_ties)

    @property
    def harmful_ties(self) -> tuple:
        return tuple(t for t in self.delta_ties if not t.benign)

    def __len__(self):
        return (len(self.duplicate_V) + len(self.duplicate_edge_V) + len(self.duplicate_barriers)
                + len(self.delta_ties))


def _duplicate_groups(values, keys=None, tol=GENERICNESS_TOL):
    values = np.asarray(values, float)
    if len(values) < 2:
        return ()
    o = np.argsort(values, kind="stable")
    sv = values[o]
    close = np.diff(sv) <= tol * np.maximum(1.0, np.abs(sv[1:]))
    groups = []
    start = None
    for t, c in enumerate(close):
        if c and start is None:
            start = t
        if not c and start is not None:
            groups.append(o[start:t + 1])
            start = None
    if start is not None:
        groups.append(o[start:])
    if keys is not None:
        groups = [keys[g] for g in groups]
    return tuple(tuple(np.asarray(g).tolist()) for g in groups)


def check_genericness(net: Network, spectrum: AsymptoticSpectrum | None = None,
                      tol: float = GENERICNESS_TOL) -> GenericnessReport:
    """Report violations of the distinct-values assumption.

    Delta ties are classified from the full recursion (computed unless
    ``spectrum`` is passed in).
    """
    dV = _duplicate_groups(net.V, tol=tol)
    dE = _duplicate_groups(net.edge_V, tol=tol)
    m = net.n_edges
    bar = np.concatenate([net.edge_V - net.V[net.edge_i], net.edge_V - net.V[net.edge_j]])
    keys = np.concatenate([np.column_stack([np.arange(m), net.edge_i]),
                           np.column_stack([np.arange(m), net.edge_j])])
    dB = _duplicate_groups(bar, tol=tol)
    dB = tuple(tuple(tuple(keys[i].tolist()) for i in g) for g in dB)
    if spectrum is None and net.n_states > 1 and net.is_connected():
        spectrum = asymptotic_spectrum(net, keep_sets=False)
    ties = spectrum.ties if spectrum is not None else ()
    return GenericnessReport(dV, dE, dB, ties)


def minmax_path(tree: SpanningTree, i: int, j: int):
    """Tree path from i to j and its highest saddle (NaN when i == j)."""
    path = tree.path(int(i), int(j))
    e = tree.path_max_edge(int(i), int(j))
    return path, (float(tree.network.edge_V[e]) if e >= 0 else float("nan"))
