"""Harmonic rate law, equilibrium distribution and the sparse generator L(T)."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.special import logsumexp

from .errors import DomainError, StructuralError
from .network import Network


def _check_T(T):
    if not (np.isfinite(T) and T > 0):
        raise DomainError(f"temperature must be positive, got {T}")


def log_rates(net: Network, T: float):
    """Per-edge log L_ij (i -> j) and log L_ji, harmonic transition-state theory.

    log L_ij = log O_i - log O_ij + kappa log nu_i - (kappa-1) log nu_ij - (V_ij - V_i)/T
    """
    _check_T(T)
    k = net.kappa
    i, j = net.edge_i, net.edge_j
    saddle = -np.log(net.edge_order) - (k - 1) * net.edge_log_nu
    site = np.log(net.order) + k * net.log_nu
    fwd = site[i] + saddle - (net.edge_V - net.V[i]) / T
    bwd = site[j] + saddle - (net.edge_V - net.V[j]) / T
    return fwd, bwd


def pairwise_rate(net: Network, i: int, j: int, T: float) -> float:
    """L_ij(T) for internal states i, j; 0 when they share no edge."""
    _check_T(T)
    e = net.edge_index(i, j)
    if e < 0:
        return 0.0
    k = net.kappa
    lr = (np.log(net.order[i]) - np.log(net.edge_order[e]) + k * net.log_nu[i]
          - (k - 1) * net.edge_log_nu[e] - (net.edge_V[e] - net.V[i]) / T)
    return float(np.exp(lr))


def log_equilibrium_weights(net: Network, T: float) -> np.ndarray:
    """Unnormalised log pi_i = -V_i/T - log O_i - kappa log nu_i."""
    _check_T(T)
    return -net.V / T - np.log(net.order) - net.kappa * net.log_nu


def equilibrium_distribution(net: Network, T: float) -> np.ndarray:
    lw = log_equilibrium_weights(net, T)
    return np.exp(lw - logsumexp(lw))


@dataclass(frozen=True, eq=False)
class Generator:
    """L(T) on a network, with pi and the per-edge conductances pi_i L_ij.

    ``log_pi`` is normalised (sum of pi is one). ``log_weight[e]`` is
    log(pi_i L_ij) = log(pi_j L_ji), computed from a single symmetric formula,
    so detailed balance holds by construction.
    """

    network: Network
    T: float
    log_pi: np.ndarray
    log_rate_fwd: np.ndarray
    log_rate_bwd: np.ndarray
    log_weight: np.ndarray

    @property
    def n(self) -> int:
        return self.network.n_states

    @cached_property
    def pi(self) -> np.ndarray:
        return np.exp(self.log_pi)

    @cached_property
    def sqrt_pi(self) -> np.ndarray:
        return np.exp(0.5 * self.log_pi)

    @cached_property
    def rate_fwd(self) -> np.ndarray:
        return np.exp(self.log_rate_fwd)

    @cached_property
    def rate_bwd(self) -> np.ndarray:
        return np.exp(self.log_rate_bwd)

    @cached_property
    def weight(self) -> np.ndarray:
        return np.exp(self.log_weight)

    @cached_property
    def n_underflow(self) -> int:
        """Edges whose rate or conductance underflowed to an exact zero."""
        return int(np.count_nonzero((self.rate_fwd == 0) | (self.rate_bwd == 0)
                                    | (self.weight == 0)))

    @cached_property
    def escape_rates(self) -> np.ndarray:
        """-L_ii = sum_j L_ij."""
        net = self.network
        out = np.bincount(net.edge_i, self.rate_fwd, minlength=self.n)
        out += np.bincount(net.edge_j, self.rate_bwd, minlength=self.n)
        return out

    @cached_property
    def L(self) -> sp.csr_matrix:
        net = self.network
        n = self.n
        rows = np.concatenate([net.edge_i, net.edge_j, np.arange(n)])
        cols = np.concatenate([net.edge_j, net.edge_i, np.arange(n)])
        vals = np.concatenate([self.rate_fwd, self.rate_bwd, -self.escape_rates])
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))

    @cached_property
    def L_sym(self) -> sp.csr_matrix:
        """P^{1/2} L P^{-1/2}; off-diagonals are sqrt(L_ij L_ji)."""
        net = self.network
        n = self.n
        off = np.exp(0.5 * (self.log_rate_fwd + self.log_rate_bwd))
        rows = np.concatenate([net.edge_i, net.edge_j, np.arange(n)])
        cols = np.concatenate([net.edge_j, net.edge_i, np.arange(n)])
        vals = np.concatenate([off, off, -self.escape_rates])
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))

    @cached_property
    def lsym_norm_inf(self) -> float:
        return float(abs(self.L_sym).sum(axis=1).max()) if self.n else 0.0

    def row_sum_residual(self) -> float:
        """max_i |sum_j L_ij| / max_i |L_ii|."""
        rs = np.abs(np.asarray(self.L.sum(axis=1)).ravel())
        scale = self.escape_rates.max() if self.n else 1.0
        return float(rs.max() / scale) if scale > 0 else 0.0

    def detailed_balance_residual(self) -> float:
        """max over edges of |pi_i L_ij - pi_j L_ji| / max(pi_i L_ij, pi_j L_ji)."""
        net = self.network
        a = self.pi[net.edge_i] * self.rate_fwd
        b = self.pi[net.edge_j] * self.rate_bwd
        m = np.maximum(a, b)
        ok = m > 0
        if not ok.any():
            return 0.0
        return float(np.max(np.abs(a - b)[ok] / m[ok]))


def generator(net: Network, T: float) -> Generator:
    _check_T(T)
    if net.n_states == 0:
        raise StructuralError("empty network")
    lw = log_equilibrium_weights(net, T)
    log_z = logsumexp(lw)
    log_pi = lw - log_z
    fwd, bwd = log_rates(net, T)
    # pi_i L_ij with the site factors cancelled analytically
    log_weight = (-net.edge_V / T - np.log(net.edge_order)
                  - (net.kappa - 1) * net.edge_log_nu - log_z)
    for a in (log_pi, fwd, bwd, log_weight):
        a.setflags(write=False)
    return Generator(net, float(T), log_pi, fwd, bwd, log_weight)


def symmetrized_apply(gen: Generator, x) -> np.ndarray:
    """L_sym @ x with the sparse symmetrised generator."""
    x = np.asarray(x, float)
    if x.shape[0] != gen.n:
        raise StructuralError(f"vector has length {x.shape[0]}, network has {gen.n} states")
    return gen.L_sym @ x
