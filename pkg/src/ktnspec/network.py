"""Network data model: minima (states), transition states (edges), topology helpers.

States are addressed by 0-based *internal* indices everywhere in the library.
``Network.ids`` translates them back to the 1-based catalogue ids, and
``Network.index_of`` goes the other way.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import DomainError, StructuralError


@dataclass(frozen=True)
class MinimumRecord:
    index: int
    V: float
    order: int
    nu: float

    def __post_init__(self):
        if self.order < 1:
            raise DomainError(f"minimum {self.index}: point group order must be >= 1")
        if not self.nu > 0:
            raise DomainError(f"minimum {self.index}: mean frequency must be > 0")
        if not np.isfinite(self.V):
            raise DomainError(f"minimum {self.index}: potential must be finite")


@dataclass(frozen=True)
class TransitionStateRecord:
    i: int
    j: int
    V: float
    order: int
    nu: float

    def __post_init__(self):
        if self.i == self.j:
            raise StructuralError(f"transition state joins minimum {self.i} to itself")
        if self.order < 1:
            raise DomainError(f"saddle ({self.i}, {self.j}): point group order must be >= 1")
        if not self.nu > 0:
            raise DomainError(f"saddle ({self.i}, {self.j}): mean frequency must be > 0")


def _frozen(a, dtype):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Network:
    """Immutable catalogue of states and edges.

    Edge ``e`` joins internal states ``edge_i[e] < edge_j[e]``; edges are kept
    sorted by that pair. ``indptr``/``adj_state``/``adj_edge`` is the CSR
    adjacency (both directions).
    """

    ids: np.ndarray
    V: np.ndarray
    order: np.ndarray
    log_nu: np.ndarray
    edge_i: np.ndarray
    edge_j: np.ndarray
    edge_V: np.ndarray
    edge_order: np.ndarray
    edge_log_nu: np.ndarray
    kappa: int
    n_merged_duplicates: int = 0
    clamped_edges: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    indptr: np.ndarray = field(init=False, repr=False)
    adj_state: np.ndarray = field(init=False, repr=False)
    adj_edge: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        for name, dt in (("ids", np.int64), ("V", float), ("order", float), ("log_nu", float),
                         ("edge_i", np.int64), ("edge_j", np.int64), ("edge_V", float),
                         ("edge_order", float), ("edge_log_nu", float),
                         ("clamped_edges", np.int64)):
            object.__setattr__(self, name, _frozen(getattr(self, name), dt))
        n, m = len(self.V), len(self.edge_V)
        heads = np.concatenate([self.edge_i, self.edge_j])
        tails = np.concatenate([self.edge_j, self.edge_i])
        eids = np.concatenate([np.arange(m), np.arange(m)])
        perm = np.lexsort((tails, heads))
        indptr = np.zeros(n + 1, np.int64)
        np.cumsum(np.bincount(heads, minlength=n), out=indptr[1:])
        object.__setattr__(self, "indptr", _frozen(indptr, np.int64))
        object.__setattr__(self, "adj_state", _frozen(tails[perm], np.int64))
        object.__setattr__(self, "adj_edge", _frozen(eids[perm], np.int64))

    @property
    def n_states(self) -> int:
        return len(self.V)

    @property
    def n_edges(self) -> int:
        return len(self.edge_V)

    @property
    def nu(self) -> np.ndarray:
        return np.exp(self.log_nu)

    @property
    def edge_nu(self) -> np.ndarray:
        return np.exp(self.edge_log_nu)

    def neighbors(self, i):
        """(neighbour states, edge ids) of internal state ``i``."""
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.adj_state[lo:hi], self.adj_edge[lo:hi]

    def adjacency(self):
        """{state: [edge ids]} with internal indices."""
        return {i: list(self.neighbors(i)[1]) for i in range(self.n_states)}

    def index_of(self, ext_id) -> int:
        """Internal index of a catalogue id."""
        lookup = getattr(self, "_lookup", None)
        if lookup is None:
            lookup = {int(k): i for i, k in enumerate(self.ids)}
            object.__setattr__(self, "_lookup", lookup)
        try:
            return lookup[int(ext_id)]
        except KeyError:
            raise StructuralError(f"state id {ext_id} is not in the network") from None

    def indices_of(self, ext_ids):
        return np.array([self.index_of(k) for k in ext_ids], dtype=np.int64)

    def edge_index(self, i, j) -> int:
        """Edge id joining internal states i and j, or -1."""
        a, b = (i, j) if i < j else (j, i)
        nb, ed = self.neighbors(a)
        hit = np.flatnonzero(nb == b)
        return int(ed[hit[0]]) if len(hit) else -1

    def sparse_pattern(self, values=None):
        """Symmetric N x N csr matrix with ``values`` (default 1) on edges."""
        if values is None:
            values = np.ones(self.n_edges)
        n = self.n_states
        rows = np.concatenate([self.edge_i, self.edge_j])
        cols = np.concatenate([self.edge_j, self.edge_i])
        return sp.csr_matrix((np.concatenate([values, values]), (rows, cols)), shape=(n, n))

    def subnetwork(self, states, edge_mask=None) -> "Network":
        """Restriction to ``states`` (internal indices) and the edges among them.

        ``edge_mask`` optionally removes further edges. Catalogue ids are kept.
        """
        states = np.unique(np.asarray(states, dtype=np.int64))
        remap = np.full(self.n_states, -1, np.int64)
        remap[states] = np.arange(len(states))
        keep = (remap[self.edge_i] >= 0) & (remap[self.edge_j] >= 0)
        if edge_mask is not None:
            keep &= edge_mask
        clamped = np.zeros(self.n_edges, bool)
        clamped[self.clamped_edges] = True
        new_i, new_j = remap[self.edge_i[keep]], remap[self.edge_j[keep]]
        return Network(
            ids=self.ids[states], V=self.V[states], order=self.order[states],
            log_nu=self.log_nu[states], edge_i=new_i, edge_j=new_j,
            edge_V=self.edge_V[keep], edge_order=self.edge_order[keep],
            edge_log_nu=self.edge_log_nu[keep], kappa=self.kappa,
            n_merged_duplicates=self.n_merged_duplicates,
            clamped_edges=np.flatnonzero(clamped[keep]),
        )

    def component_labels(self, edge_mask=None):
        mask = np.ones(self.n_edges, bool) if edge_mask is None else edge_mask
        n = self.n_states
        g = sp.csr_matrix((np.ones(mask.sum()), (self.edge_i[mask], self.edge_j[mask])),
                          shape=(n, n))
        return connected_components(g, directed=False)

    def is_connected(self) -> bool:
        return self.n_states > 0 and self.component_labels()[0] == 1

    def minimum_records(self):
        return [MinimumRecord(int(k), float(v), int(o), float(np.exp(l)))
                for k, v, o, l in zip(self.ids, self.V, self.order, self.log_nu)]

    def transition_state_records(self):
        ids = self.ids
        return [TransitionStateRecord(int(ids[a]), int(ids[b]), float(v), int(o), float(np.exp(l)))
                for a, b, v, o, l in zip(self.edge_i, self.edge_j, self.edge_V,
                                         self.edge_order, self.edge_log_nu)]


def network_from_arrays(ids, V, order, log_nu, ts_min1, ts_min2, ts_V, ts_order, ts_log_nu,
                        kappa) -> Network:
    """Assemble a Network from columns; ``ts_min*`` are catalogue ids.

    Duplicate saddles for one pair keep the lowest V; saddles below an endpoint
    are clamped up to the higher endpoint with a warning.
    """
    if int(kappa) < 1:
        raise DomainError("kappa must be a positive integer")
    ids = np.asarray(ids, dtype=np.int64)
    V = np.asarray(V, float)
    order = np.asarray(order, float)
    log_nu = np.asarray(log_nu, float)
    if len(np.unique(ids)) != len(ids):
        raise StructuralError("duplicate minimum index")
    if np.any(order < 1):
        raise DomainError("point group order must be >= 1")
    if not np.all(np.isfinite(V)) or not np.all(np.isfinite(log_nu)):
        raise DomainError("non-finite minimum potential or frequency")
    sorter = np.argsort(ids, kind="stable")
    a = np.asarray(ts_min1, dtype=np.int64)
    b = np.asarray(ts_min2, dtype=np.int64)
    ts_V = np.asarray(ts_V, float)
    ts_order = np.asarray(ts_order, float)
    ts_log_nu = np.asarray(ts_log_nu, float)
    if np.any(ts_order < 1):
        raise DomainError("saddle point group order must be >= 1")
    if not np.all(np.isfinite(ts_V)) or not np.all(np.isfinite(ts_log_nu)):
        raise DomainError("non-finite saddle potential or frequency")

    def lookup(x):
        pos = np.searchsorted(ids[sorter], x)
        pos = np.minimum(pos, len(ids) - 1)
        found = ids[sorter][pos] == x if len(ids) else np.zeros(len(x), bool)
        if not np.all(found):
            bad = x[~found][0]
            raise StructuralError(f"transition state references unknown minimum {bad}")
        return sorter[pos]

    ia, ib = (lookup(a), lookup(b)) if len(a) else (a, b)
    if np.any(ia == ib):
        k = int(np.flatnonzero(ia == ib)[0])
        raise StructuralError(f"transition state {k + 1} is a self-loop on minimum {a[k]}")
    lo, hi = np.minimum(ia, ib), np.maximum(ia, ib)

    # keep-lowest-saddle dedup: sort by (pair, V) and take the first of each pair
    perm = np.lexsort((ts_V, hi, lo))
    lo, hi = lo[perm], hi[perm]
    first = np.ones(len(lo), bool)
    first[1:] = (lo[1:] != lo[:-1]) | (hi[1:] != hi[:-1])
    n_dup = int(len(lo) - first.sum())
    sel = perm[first]
    lo, hi = lo[first], hi[first]
    eV = ts_V[sel].copy()
    floor = np.maximum(V[lo], V[hi])
    below = eV < floor
    if below.any():
        warnings.warn(f"{int(below.sum())} saddle(s) lie below an endpoint minimum; "
                      "clamped to the higher endpoint", RuntimeWarning, stacklevel=2)
        eV[below] = floor[below]
    return Network(ids=ids, V=V, order=order, log_nu=log_nu, edge_i=lo, edge_j=hi,
                   edge_V=eV, edge_order=ts_order[sel], edge_log_nu=ts_log_nu[sel],
                   kappa=int(kappa), n_merged_duplicates=n_dup,
                   clamped_edges=np.flatnonzero(below))


def build_network(minima, saddles, kappa) -> Network:
    """Network from MinimumRecord / TransitionStateRecord sequences."""
    minima = list(minima)
    saddles = list(saddles)
    return network_from_arrays(
        [m.index for m in minima], [m.V for m in minima], [m.order for m in minima],
        np.log([m.nu for m in minima]) if minima else [],
        [s.i for s in saddles], [s.j for s in saddles], [s.V for s in saddles],
        [s.order for s in saddles], np.log([s.nu for s in saddles]) if saddles else [],
        kappa,
    )


def largest_connected_component(net: Network) -> Network:
    """Largest connected component; ties go to the component with the lowest index."""
    if net.n_states == 0:
        raise StructuralError("empty network")
    ncomp, labels = net.component_labels()
    if ncomp == 1:
        return net
    sizes = np.bincount(labels)
    best = int(np.argmax(sizes))  # argmax returns the first maximal label
    return net.subnetwork(np.flatnonzero(labels == best))


def cap_network(net: Network, V_max: float, reference_state: int | None = None) -> Network:
    """States reachable from ``reference_state`` through saddles below ``V_max``.

    Uses the minimax property: dropping every edge with V >= V_max and taking
    the reference's component yields exactly the states whose minimum-spanning-
    tree path to the reference stays below the cap.
    """
    if net.n_states == 0:
        raise StructuralError("empty network")
    ref = int(np.argmin(net.V)) if reference_state is None else int(reference_state)
    if not 0 <= ref < net.n_states:
        raise StructuralError(f"reference state {ref} out of range")
    if not net.V[ref] < V_max:
        raise DomainError(f"reference state lies at or above the cap V_max={V_max}")
    keep = net.edge_V < V_max
    _, labels = net.component_labels(keep)
    return net.subnetwork(np.flatnonzero(labels == labels[ref]), edge_mask=keep)
