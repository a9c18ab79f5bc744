"""Disconnectivity graphs of the lowest states, with barrier-threshold lumping."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .mst import SpanningTree, minimum_spanning_tree
from .network import Network


@dataclass(frozen=True)
class Group:
    """Lumped states; ``members`` are internal indices, the first is the lowest."""

    index: int
    members: tuple
    V: float
    value: float

    @property
    def representative(self) -> int:
        return self.members[0]


@dataclass(frozen=True)
class Node:
    """Merge-tree node: a leaf holds a group, an internal node a merge level."""

    level: float
    group: Group | None = None
    children: tuple = ()

    @property
    def is_leaf(self) -> bool:
        return self.group is not None

    def leaves(self):
        if self.is_leaf:
            yield self.group
        for c in self.children:
            yield from c.leaves()


@dataclass(frozen=True)
class DisconnectivityGraph:
    network: Network
    groups: tuple
    root: Node
    threshold: float

    def to_dict(self) -> dict:
        ids = self.network.ids

        def enc(node: Node):
            if node.is_leaf:
                g = node.group
                return {"group": g.index, "V": g.V, "value": g.value,
                        "members": [int(ids[m]) for m in g.members]}
            return {"level": node.level, "children": [enc(c) for c in node.children]}

        return {"threshold": self.threshold, "n_groups": len(self.groups), "tree": enc(self.root)}


def _barrier(tree: SpanningTree, a: int, b: int) -> float:
    e = tree.path_max_edge(a, b)
    return -np.inf if e < 0 else float(tree.network.edge_V[e])


def lump_states(net: Network, states, threshold: float, tree: SpanningTree | None = None):
    """Greedy lumping in increasing V.

    Each state joins the existing group whose lowest member m it reaches over
    a barrier u with u - V_m < ``threshold`` (the lowest such u, ties to the
    lower m); otherwise it opens a new group. Any two members a, b of a group
    are then joined by a path whose highest saddle lies less than
    ``threshold`` above min(V_a, V_b).
    """
    if not threshold > 0:
        raise DomainError("lumping threshold must be positive")
    tree = tree or minimum_spanning_tree(net)
    states = np.asarray(states, dtype=np.int64)
    order = states[np.lexsort((states, net.V[states]))]
    reps: list[int] = []
    members: list[list[int]] = []
    for s in order.tolist():
        best, best_u = -1, np.inf
        for g, m in enumerate(reps):
            u = _barrier(tree, s, m)
            if u - net.V[m] < threshold and u < best_u:
                best, best_u = g, u
        if best < 0:
            reps.append(s)
            members.append([s])
        else:
            members[best].append(s)
    return members


def disconnectivity_graph(net: Network, top_n: int, lump_threshold: float,
                          coloring=None) -> DisconnectivityGraph:
    """Merge tree of the ``top_n`` lowest states after lumping.

    Groups merge at the minimax saddle between their lowest members
    (single linkage on the ultrametric barrier). ``coloring`` is a per-state
    array; each group carries the value at its lowest member.
    """
    n = net.n_states
    if not 1 <= top_n <= n:
        raise DomainError(f"top_n must lie in [1, {n}]")
    tree = minimum_spanning_tree(net)
    states = np.lexsort((np.arange(n), net.V))[:top_n]
    lumps = lump_states(net, states, lump_threshold, tree)
    values = np.zeros(n) if coloring is None else np.asarray(coloring, float)
    if values.shape != (n,):
        raise DomainError("coloring must have one value per state")
    groups = tuple(Group(g, tuple(m), float(net.V[m[0]]), float(values[m[0]]))
                   for g, m in enumerate(lumps))

    # Kruskal over group pairs with barrier weights
    k = len(groups)
    pairs = [(_barrier(tree, groups[a].representative, groups[b].representative), a, b)
             for a in range(k) for b in range(a + 1, k)]
    pairs.sort()
    nodes = {g: Node(groups[g].V, groups[g]) for g in range(k)}
    parent = list(range(k))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, a, b in pairs:
        ra, rb = find(a), find(b)
        if ra == rb:
            continue
        na, nb = nodes.pop(ra), nodes.pop(rb)
        kids = []
        for c in (na, nb):
            # flatten equal-level merges into one multi-way node
            kids.extend(c.children if (not c.is_leaf and c.level == u) else (c,))
        lo, hi = min(ra, rb), max(ra, rb)
        parent[hi] = lo
        nodes[lo] = Node(u, None, tuple(kids))
    (root,) = nodes.values()
    return DisconnectivityGraph(net, groups, root, float(lump_threshold))
