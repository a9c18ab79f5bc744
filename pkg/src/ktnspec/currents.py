"""Eigencurrents, emission/absorption and cuts.

For an eigenpair (lam, phi) of L the eigencurrent on edge (i, j) is
``F_ij = pi_i L_ij (phi_i - phi_j)``, so the net current out of state i is
``lam pi_i phi_i``. States with phi >= 0 emit; the cut separating emitters
from absorbers carries the largest flux of all cuts.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import StructuralError
from .rates import Generator
from .network import Network
from .spectral import EigenpairRecord

_T_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class EdgeCurrentField:
    """Signed current per edge, oriented ``edge_i -> edge_j``.

    ``F`` follows the network's edge order; the reverse orientation is
    ``-F`` by construction. ``t`` is the time at which the factor
    ``exp(-lam t)`` was applied (0 means no decay). ``label`` names the
    source (eigenpair rank, ``"reactive"``, ...).
    """

    network: Network
    T: float
    F: np.ndarray
    lam: float = 0.0
    t: float = 0.0
    label: object = None

    def divergence(self) -> np.ndarray:
        """Net current leaving each state."""
        net = self.network
        out = np.zeros(net.n_states, self.F.dtype)
        np.add.at(out, net.edge_i, self.F)
        np.add.at(out, net.edge_j, -self.F)
        return out

    def oriented(self, i: int, j: int) -> float:
        """F_ij for internal indices; 0 when i, j share no edge."""
        e = self.network.edge_index(i, j)
        if e < 0:
            return 0.0
        return self.F[e] if self.network.edge_i[e] == i else -self.F[e]

    def at_time(self, t: float) -> "EdgeCurrentField":
        """Same field re-evaluated at time ``t``."""
        fac = np.exp(-np.asarray(self.lam, self.F.dtype) * (t - self.t))
        return EdgeCurrentField(self.network, self.T, self.F * fac, self.lam, t, self.label)


@dataclass(frozen=True, eq=False)
class CutSet:
    """Partition (S', S'') with the edges it cuts.

    ``edges`` are network edge indices; ``current`` is the current on each of
    them oriented from S' to S''; ``flux`` is their sum.
    """

    inside: np.ndarray
    edges: np.ndarray
    current: np.ndarray
    flux: float

    @property
    def outside(self) -> np.ndarray:
        return ~self.inside

    def __len__(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class EmissionAbsorption:
    """Per-state emission ``lam pi_i phi_i`` and the sign partition.

    ``emitting`` marks phi_i >= 0. ``total_emitted`` (sum over emitters) and
    ``total_absorbed`` (sum over absorbers, negative) cancel up to rounding.
    """

    emission: np.ndarray
    emitting: np.ndarray
    total_emitted: float
    total_absorbed: float

    @property
    def imbalance(self) -> float:
        """|emitted + absorbed| relative to the emitted total."""
        tot = abs(self.total_emitted)
        return float(abs(self.total_emitted + self.total_absorbed) / tot) if tot > 0 else 0.0


@dataclass(frozen=True)
class CutDistribution:
    """Cut currents sorted in decreasing order with shares and their CDF."""

    edges: np.ndarray
    currents: np.ndarray
    shares: np.ndarray
    cdf: np.ndarray


def _check_pair(gen: Generator, pair: EigenpairRecord):
    if len(pair.phi) != gen.n:
        raise StructuralError(f"eigenpair has {len(pair.phi)} components, network has {gen.n}")
    if not np.isclose(pair.T, gen.T, rtol=_T_RTOL, atol=0.0):
        raise StructuralError(f"eigenpair temperature {pair.T} does not match generator "
                              f"temperature {gen.T}")


def _weights(gen: Generator, dtype) -> np.ndarray:
    if np.dtype(dtype) == np.float64:
        return gen.weight
    return np.exp(gen.log_weight.astype(dtype))


def eigencurrent(gen: Generator, pair: EigenpairRecord, t: float = 0.0,
                 label=None) -> EdgeCurrentField:
    """Eigencurrent of ``pair`` on ``gen``, scaled by exp(-lam t)."""
    _check_pair(gen, pair)
    net = gen.network
    phi = pair.phi
    w = _weights(gen, phi.dtype)
    lam = pair.lam
    F = w * (phi[net.edge_i] - phi[net.edge_j])
    if t:
        F = F * np.exp(-np.asarray(lam, phi.dtype) * t)
    return EdgeCurrentField(net, gen.T, F, lam, float(t), label)


def emission_absorption(gen: Generator, pair: EigenpairRecord) -> EmissionAbsorption:
    """Emission per state and the phi >= 0 / phi < 0 partition."""
    _check_pair(gen, pair)
    phi = pair.phi
    pi = gen.pi if phi.dtype == np.float64 else np.exp(gen.log_pi.astype(phi.dtype))
    em = pair.lam * pi * phi
    pos = phi >= 0
    return EmissionAbsorption(em, pos, em[pos].sum(), em[~pos].sum())


def _as_mask(n: int, states) -> np.ndarray:
    a = np.asarray(states)
    if a.dtype == bool:
        if a.shape != (n,):
            raise StructuralError(f"boolean partition mask must have length {n}")
        return a.copy()
    m = np.zeros(n, bool)
    idx = a.astype(np.int64).ravel()
    if len(idx) and (idx.min() < 0 or idx.max() >= n):
        raise StructuralError("partition refers to states outside the network")
    if len(np.unique(idx)) != len(idx):
        raise StructuralError("partition lists a state twice")
    m[idx] = True
    return m


def _cut(field: EdgeCurrentField, inside: np.ndarray) -> CutSet:
    net = field.network
    a, b = inside[net.edge_i], inside[net.edge_j]
    edges = np.flatnonzero(a != b)
    cur = np.where(a[edges], field.F[edges], -field.F[edges])
    return CutSet(inside, edges, cur, cur.sum() if len(cur) else field.F.dtype.type(0))


def partition_cut(field: EdgeCurrentField, partition) -> CutSet:
    """CutSet of a partition given as (S', S'') or a boolean S' mask."""
    n = field.network.n_states
    if isinstance(partition, np.ndarray) and partition.dtype == bool:
        return _cut(field, _as_mask(n, partition))
    try:
        first, second = partition
    except (TypeError, ValueError):
        raise StructuralError("partition must be a pair of state sets") from None
    m1, m2 = _as_mask(n, first), _as_mask(n, second)
    if np.any(m1 & m2):
        raise StructuralError("partition sets overlap")
    if not np.all(m1 | m2):
        raise StructuralError("partition does not cover every state")
    return _cut(field, m1)


def cut_flux(field: EdgeCurrentField, partition) -> float:
    """Current from S' to S'' summed over the cut edges."""
    return partition_cut(field, partition).flux


def emission_absorption_cut(gen: Generator, pair: EigenpairRecord,
                            field: EdgeCurrentField | None = None) -> CutSet:
    """The cut between emitters (phi >= 0) and absorbers (phi < 0)."""
    ea = emission_absorption(gen, pair)
    if ea.emitting.all() or not ea.emitting.any():
        raise StructuralError("eigenvector has a single sign; there is no emission-absorption cut")
    if field is None:
        field = eigencurrent(gen, pair)
    return _cut(field, ea.emitting)


def cut_current_distribution(cut: CutSet) -> CutDistribution:
    """Sort cut currents (largest first) and return shares of the total flux."""
    if len(cut) == 0:
        raise StructuralError("empty cut")
    order = np.argsort(-cut.current, kind="stable")
    cur = cut.current[order]
    shares = cur / cut.flux
    return CutDistribution(cut.edges[order], cur, shares, np.cumsum(shares))


def node_balance_residual(field: EdgeCurrentField, gen: Generator, pair: EigenpairRecord) -> float:
    """max_i |div F - lam pi_i phi_i| / (lam max_i pi_i |phi_i|)."""
    em = emission_absorption(gen, pair).emission
    scale = np.max(np.abs(em))
    if scale == 0:
        return float(np.max(np.abs(field.divergence())))
    return float(np.max(np.abs(field.divergence() - em)) / scale)
