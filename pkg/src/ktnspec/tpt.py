"""Transition path theory: committor, reactive current and A -> B rates."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import kernels
from .currents import CutSet, EdgeCurrentField
from .errors import ConvergenceError, DomainError, StructuralError
from .rates import Generator

DEFAULT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class CommittorField:
    """Forward committor q (probability of reaching B before A).

    ``residual`` is the final relative preconditioned residual of the
    interior solve; ``undetermined`` marks interior states with no path to
    A or B (their q is a placeholder, see :func:`committor`).
    """

    generator: Generator
    A: np.ndarray
    B: np.ndarray
    q: np.ndarray
    residual: float
    iterations: int
    preconditioner: str
    undetermined: np.ndarray

    @property
    def interior(self) -> np.ndarray:
        m = np.ones(len(self.q), bool)
        m[self.A] = False
        m[self.B] = False
        return m

    def harmonic_residual(self) -> float:
        """max over interior i of |sum_j pi_i L_ij (q_j - q_i)| / max_i pi_i L_ii."""
        div = reactive_current(self).divergence()
        inner = self.interior & ~self.undetermined
        if not inner.any():
            return 0.0
        gen = self.generator
        deg = np.zeros(gen.n)
        net = gen.network
        np.add.at(deg, net.edge_i, gen.weight)
        np.add.at(deg, net.edge_j, gen.weight)
        return float(np.max(np.abs(div[inner])) / np.max(deg))


def _state_set(n: int, states, name: str) -> np.ndarray:
    idx = np.unique(np.asarray(states, dtype=np.int64).ravel())
    if len(idx) == 0:
        raise DomainError(f"{name} must be nonempty")
    if idx[0] < 0 or idx[-1] >= n:
        raise DomainError(f"{name} refers to states outside the network")
    return idx


class _DirichletLaplacian:
    """Interior block of the conductance Laplacian, applied in edge-difference form.

    y_i = sum_j w_ij (x_i - x_j) + c_i x_i with c_i the conductance to the
    boundary. Forming differences first keeps the product accurate relative
    to the currents themselves, which matters when x is nearly constant
    over strongly connected regions.
    """

    def __init__(self, m, ei, ej, w, c):
        self.m, self.ei, self.ej, self.w, self.c = m, ei, ej, w, c

    def __matmul__(self, x):
        f = self.w * (x[self.ei] - x[self.ej])
        return (self.c * x + np.bincount(self.ei, f, self.m)
                - np.bincount(self.ej, f, self.m))

    def csr(self) -> sp.csr_matrix:
        m = self.m
        deg = self.c + np.bincount(self.ei, self.w, m) + np.bincount(self.ej, self.w, m)
        return sp.coo_matrix((np.concatenate([deg, -self.w, -self.w]),
                              (np.concatenate([np.arange(m), self.ei, self.ej]),
                               np.concatenate([np.arange(m), self.ej, self.ei]))),
                             shape=(m, m)).tocsr()


def _preconditioner(M: sp.csr_matrix):
    n = M.shape[0]
    low = sp.tril(M, format="csr")
    low.sort_indices()
    ip, ix = low.indptr.astype(np.int64), low.indices.astype(np.int64)
    val = kernels.ic0(n, ip, ix, low.data.astype(float))
    if len(val):
        return (lambda r: kernels.ic0_solve(n, ip, ix, val, r)), "ic0"
    dinv = 1.0 / M.diagonal()
    return (lambda r: dinv * r), "jacobi"


def _pcg(op: _DirichletLaplacian, b: np.ndarray, tol: float, max_iter: int):
    """Preconditioned CG with one true-residual refinement pass per restart.

    Stops when sqrt(r^T M^{-1} r) / sqrt(b^T M^{-1} b) <= tol, with r the
    residual recomputed from the current iterate.
    """
    prec, kind = _preconditioner(op.csr())
    x = np.zeros(op.m)
    ref = np.sqrt(b @ prec(b))
    if ref == 0:
        return x, 0.0, 0, kind
    total = 0
    rel = np.inf
    while total < max_iter:
        r = b - op @ x
        z = prec(r)
        rz = r @ z
        rel = np.sqrt(abs(rz)) / ref
        if rel <= tol:
            return x, rel, total, kind
        # inner CG on the correction until its own recursive residual meets tol
        p = z.copy()
        start_rel = rel
        for _ in range(max_iter - total):
            total += 1
            Mp = op @ p
            alpha = rz / (p @ Mp)
            x += alpha * p
            r -= alpha * Mp
            z = prec(r)
            rz_new = r @ z
            if np.sqrt(abs(rz_new)) / ref <= tol:
                break
            p = z + (rz_new / rz) * p
            rz = rz_new
        r = b - op @ x
        rel_true = np.sqrt(abs(r @ prec(r))) / ref
        if rel_true <= tol:
            return x, rel_true, total, kind
        if rel_true >= 0.5 * start_rel:
            rel = rel_true
            break  # refinement no longer gains
        rel = rel_true
    raise ConvergenceError(f"committor CG did not reach {tol:g} in {max_iter} iterations "
                           f"(relative residual {rel:.3g}, preconditioner {kind})")


def committor(gen: Generator, A, B, tol: float = DEFAULT_TOL,
              max_iter: int | None = None) -> CommittorField:
    """Solve sum_j L_ij q_j = 0 off A and B with q = 0 on A and q = 1 on B.

    Multiplying row i by pi_i gives the Dirichlet problem of the conductance
    Laplacian, which is symmetric positive definite on the interior; it is
    solved by conjugate gradients preconditioned with zero fill-in
    incomplete Cholesky (Jacobi if that breaks down). The default iteration
    cap is 10 sqrt(N); ConvergenceError is raised when it is hit.

    Interior states whose connected component touches neither A nor B get
    the equilibrium-weighted mean of the boundary values and are flagged in
    ``undetermined``.
    """
    net = gen.network
    n = gen.n
    A = _state_set(n, A, "A")
    B = _state_set(n, B, "B")
    if np.intersect1d(A, B).size:
        raise DomainError("A and B must be disjoint")
    q = np.zeros(n)
    q[B] = 1.0
    boundary = np.zeros(n, bool)
    boundary[A] = boundary[B] = True
    undetermined = np.zeros(n, bool)
    if boundary.all():
        return CommittorField(gen, A, B, q, 0.0, 0, "none", undetermined)

    # interior components cut off from A and B
    inner_edges = ~boundary[net.edge_i] & ~boundary[net.edge_j]
    n_comp, labels = net.component_labels(inner_edges)
    touch = np.zeros(n_comp, bool)
    cross = boundary[net.edge_i] != boundary[net.edge_j]
    for i, j in zip(net.edge_i[cross], net.edge_j[cross]):
        touch[labels[j] if boundary[i] else labels[i]] = True
    isolated = ~boundary & ~touch[labels]
    if isolated.any():
        pb = gen.pi[boundary]
        q[isolated] = (gen.pi[B].sum() / pb.sum()) if pb.sum() > 0 else 0.5
        undetermined = isolated

    free = ~boundary & ~isolated
    idx = np.flatnonzero(free)
    if len(idx) == 0:
        return CommittorField(gen, A, B, q, 0.0, 0, "none", undetermined)
    pos = -np.ones(n, np.int64)
    pos[idx] = np.arange(len(idx))
    w = gen.weight
    i, j = net.edge_i, net.edge_j
    m = len(idx)
    both = free[i] & free[j]
    c = np.zeros(m)
    b = np.zeros(m)
    for src, dst in ((i, j), (j, i)):
        edge = free[src] & boundary[dst]
        np.add.at(c, pos[src[edge]], w[edge])
        to_b = free[src] & np.isin(dst, B)
        np.add.at(b, pos[src[to_b]], w[to_b])
    op = _DirichletLaplacian(m, pos[i[both]], pos[j[both]], w[both], c)
    if max_iter is None:
        max_iter = int(np.ceil(10 * np.sqrt(n)))
    x, rel, it, kind = _pcg(op, b, tol, max_iter)
    q[idx] = np.clip(x, 0.0, 1.0)
    return CommittorField(gen, A, B, q, float(rel), it, kind, undetermined)


def reactive_current(cf: CommittorField) -> EdgeCurrentField:
    """F^R_ij = pi_i L_ij (q_j - q_i), oriented along the network edges."""
    gen = cf.generator
    net = gen.network
    F = gen.weight * (cf.q[net.edge_j] - cf.q[net.edge_i])
    return EdgeCurrentField(net, gen.T, F, 0.0, 0.0, "reactive")


def _check_level(level: float):
    if not (0.0 <= level < 1.0):
        raise DomainError(f"committor level must lie in [0, 1), got {level}")


def isocommittor_cut(cf: CommittorField, level: float,
                     field: EdgeCurrentField | None = None) -> CutSet:
    """Edges with q_i <= level < q_j, currents oriented from low to high q."""
    _check_level(level)
    field = field or reactive_current(cf)
    below = cf.q <= level
    net = cf.generator.network
    a, b = below[net.edge_i], below[net.edge_j]
    edges = np.flatnonzero(a != b)
    cur = np.where(a[edges], field.F[edges], -field.F[edges])
    return CutSet(below, edges, cur, float(cur.sum()) if len(cur) else 0.0)


def transition_rate(cf: CommittorField, level: float = 0.5) -> float:
    """Reactive flux nu_R through the isocommittor cut at ``level``."""
    return isocommittor_cut(cf, level).flux


def tpt_rates(cf: CommittorField, nu_R: float | None = None) -> tuple[float, float]:
    """(k_AB, k_BA) = nu_R / sum pi (1 - q), nu_R / sum pi q."""
    if nu_R is None:
        nu_R = transition_rate(cf)
    pi = cf.generator.pi
    rho_a = float(pi @ (1.0 - cf.q))
    rho_b = float(pi @ cf.q)
    if rho_a <= 0 or rho_b <= 0:
        raise DomainError("equilibrium mass lies entirely on one side of the committor")
    return nu_R / rho_a, nu_R / rho_b


def committor_dense(gen: Generator, A, B) -> np.ndarray:
    """Direct dense solve of the committor equations (reference path, small N)."""
    n = gen.n
    A = _state_set(n, A, "A")
    B = _state_set(n, B, "B")
    L = gen.L.toarray()
    q = np.zeros(n)
    q[B] = 1.0
    free = np.ones(n, bool)
    free[A] = free[B] = False
    if not free.any():
        return q
    Lff = L[np.ix_(free, free)]
    rhs = -L[np.ix_(free, np.isin(np.arange(n), B))].sum(axis=1)
    try:
        q[free] = np.linalg.solve(Lff, rhs)
    except np.linalg.LinAlgError as exc:
        raise StructuralError("interior block is singular (state cut off from A and B)") from exc
    return q
