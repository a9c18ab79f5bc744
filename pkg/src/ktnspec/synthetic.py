"""Synthetic landscapes for tests, benchmarks and demos."""
from __future__ import annotations

import numpy as np

from .network import Network, network_from_arrays


def _assemble(V, pairs, edge_V, order=None, edge_order=None, nu=None, edge_nu=None, kappa=3):
    V = np.asarray(V, float)
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    n, m = len(V), len(pairs)
    order = np.ones(n) if order is None else np.asarray(order, float)
    edge_order = np.ones(m) if edge_order is None else np.asarray(edge_order, float)
    nu = np.ones(n) if nu is None else np.asarray(nu, float)
    edge_nu = np.ones(m) if edge_nu is None else np.asarray(edge_nu, float)
    return network_from_arrays(np.arange(1, n + 1), V, order, np.log(nu),
                               pairs[:, 0] + 1, pairs[:, 1] + 1, edge_V, edge_order,
                               np.log(edge_nu), kappa)


def from_edges(V, pairs, edge_V, **kw) -> Network:
    """Network from 0-based ``pairs``; ids are 1..N, prefactors default to 1.

    Keyword arguments ``order``, ``edge_order``, ``nu``, ``edge_nu`` and
    ``kappa`` override the unit defaults.
    """
    return _assemble(V, pairs, edge_V, **kw)


def chain(V, edge_V, **kw) -> Network:
    """Linear chain 1-2-...-N with saddle ``edge_V[k]`` between k+1 and k+2."""
    n = len(V)
    pairs = np.column_stack([np.arange(n - 1), np.arange(1, n)])
    return _assemble(V, pairs, edge_V, **kw)


def random_network(n: int, rng=None, extra_edges: float = 0.5, kappa: int = 3,
                   barrier_width: float = 1.0) -> Network:
    """Random connected landscape.

    A uniformly random recursive tree plus ``extra_edges * n`` further distinct
    pairs. V_i ~ U[0, 1]; each saddle lies U[0, barrier_width] above its higher
    endpoint; point-group orders in {1, 2}; mean frequencies U[0.5, 1.5].
    """
    rng = np.random.default_rng(rng)
    perm = rng.permutation(n)
    pairs = set()
    for a in range(1, n):
        i, j = int(perm[a]), int(perm[rng.integers(0, a)])
        pairs.add((min(i, j), max(i, j)))
    want = len(pairs) + int(extra_edges * n)
    max_pairs = n * (n - 1) // 2
    while len(pairs) < min(want, max_pairs):
        i, j = (int(x) for x in rng.integers(0, n, 2))
        if i != j:
            pairs.add((min(i, j), max(i, j)))
    pairs = np.array(sorted(pairs), dtype=np.int64).reshape(-1, 2)
    V = rng.uniform(0.0, 1.0, n)
    m = len(pairs)
    edge_V = np.maximum(V[pairs[:, 0]], V[pairs[:, 1]]) + rng.uniform(0.0, barrier_width, m)
    return _assemble(V, pairs, edge_V,
                     order=rng.integers(1, 3, n), edge_order=rng.integers(1, 3, m),
                     nu=rng.uniform(0.5, 1.5, n), edge_nu=rng.uniform(0.5, 1.5, m),
                     kappa=kappa)


def _funnel(rng, size, bottom, depth, offset):
    """Funnel: states hang off lower ones, each saddle a little above the upper state."""
    V = np.empty(size)
    V[0] = bottom
    V[1:] = bottom + np.sort(rng.uniform(0.1, depth, size - 1))
    pairs, ev = [], []
    for a in range(1, size):
        b = int(rng.integers(0, a))
        pairs.append((offset + b, offset + a))
        ev.append(V[a] + rng.uniform(0.05, 0.25))
    return V, pairs, ev


def double_funnel(size: int = 10, rng=None, barrier: float = 2.0, bottoms=(0.0, 0.15),
                  depth: float = 0.6, kappa: int = 3) -> Network:
    """Two funnels of ``size`` states whose bottoms are states 0 and ``size``.

    The funnels are joined by a single saddle at ``barrier`` between their
    highest states, so the rate-limiting barrier out of the upper funnel is
    ``barrier - bottoms[1]``.
    """
    rng = np.random.default_rng(rng)
    Va, pa, ea = _funnel(rng, size, bottoms[0], depth, 0)
    Vb, pb, eb = _funnel(rng, size, bottoms[1], depth, size)
    V = np.concatenate([Va, Vb])
    pairs = pa + pb + [(size - 1, 2 * size - 1)]
    ev = ea + eb + [barrier]
    return _assemble(V, pairs, ev, kappa=kappa)


def funnel_with_satellites(size: int = 12, n_satellites: int = 4, rng=None,
                           funnel_barrier: float = 1.5, satellite_barrier: float = 1.8,
                           kappa: int = 3):
    """A main funnel, a secondary basin and high-barrier satellite states.

    The secondary basin (``size // 3`` states, bottom 0.3) joins the main
    funnel through one saddle at ``funnel_barrier``; each satellite (V about
    0.55) hangs off a funnel state through a saddle near ``satellite_barrier``.
    Any cap strictly between the two barrier levels removes exactly the
    satellites. Returns the network; the satellites are the last
    ``n_satellites`` states.
    """
    rng = np.random.default_rng(rng)
    main = size - size // 3
    Va, pa, ea = _funnel(rng, main, 0.0, 0.5, 0)
    Vb, pb, eb = _funnel(rng, size // 3, 0.3, 0.4, main)
    V = list(Va) + list(Vb)
    pairs = pa + pb + [(main - 1, size - 1)]
    ev = ea + eb + [funnel_barrier]
    for s in range(n_satellites):
        V.append(0.55 + 0.01 * s)
        host = int(rng.integers(0, main))
        pairs.append((host, size + s))
        ev.append(satellite_barrier + 0.013 * s)
    return _assemble(V, pairs, ev, kappa=kappa)


def multi_funnel(n_funnels: int = 3, size: int = 8, rng=None, barrier: float = 1.6,
                 depth: float = 0.6, kappa: int = 3) -> Network:
    """``n_funnels`` funnels in a row; funnel f has its bottom at 0.1 f (state f * size).

    Consecutive funnels are joined between their highest states by a saddle
    at ``barrier + 0.07 f``, so the inter-funnel barriers are distinct.
    """
    rng = np.random.default_rng(rng)
    V, pairs, ev = [], [], []
    for f in range(n_funnels):
        Vf, pf, ef = _funnel(rng, size, 0.1 * f, depth, f * size)
        V.extend(Vf)
        pairs.extend(pf)
        ev.extend(ef)
        if f:
            pairs.append((f * size - 1, (f + 1) * size - 1))
            ev.append(barrier + 0.07 * f)
    return _assemble(V, pairs, ev, kappa=kappa)
