"""Scalar-loop kernels, compiled with numba when the backend allows.

Under ``KTNSPEC_BACKEND=numpy`` the functions whose loop structure cannot be
vectorised (union-find, tree traversal, incomplete Cholesky) run as plain
Python; the hot elimination kernels have vectorised twins in ``vectorized``.
"""
import numpy as np

from .._backend import njit


@njit
def kruskal(n, edge_i, edge_j, order):
    """Edges (positions in ``order``) accepted by Kruskal's algorithm."""
    parent = np.arange(n)
    rank = np.zeros(n, np.int64)
    taken = np.zeros(len(order), np.bool_)
    count = 0
    for t in range(len(order)):
        e = order[t]
        a = edge_i[e]
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        b = edge_j[e]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a == b:
            continue
        if rank[a] < rank[b]:
            a, b = b, a
        parent[b] = a
        if rank[a] == rank[b]:
            rank[a] += 1
        taken[t] = True
        count += 1
        if count == n - 1:
            break
    return taken


@njit
def root_tree(n, indptr, adj, adj_edge, root):
    """BFS order, parent, parent edge and depth of a tree given as CSR."""
    parent = np.full(n, -1, np.int64)
    pedge = np.full(n, -1, np.int64)
    depth = np.zeros(n, np.int64)
    order = np.empty(n, np.int64)
    seen = np.zeros(n, np.bool_)
    order[0] = root
    seen[root] = True
    head, tail = 0, 1
    while head < tail:
        x = order[head]
        head += 1
        for p in range(indptr[x], indptr[x + 1]):
            y = adj[p]
            if not seen[y]:
                seen[y] = True
                parent[y] = x
                pedge[y] = adj_edge[p]
                depth[y] = depth[x] + 1
                order[tail] = y
                tail += 1
    return order[:tail], parent, pedge, depth


@njit
def forest_update(indptr, adj, adj_edge, edge_key, removed, source, u, members, changed):
    """Minimax sweep from ``source`` through the forest (edges not ``removed``).

    For every state reached, the largest ``edge_key`` on its path to the
    source is compared with ``u``; smaller values replace ``u`` and the state
    is flagged in ``changed``. Returns the number of states written to
    ``members`` (the source's component, source first).
    """
    n = len(u)
    best = np.empty(n)
    members[0] = source
    best[source] = -np.inf
    head, tail = 0, 1
    visited = np.zeros(n, np.bool_)
    visited[source] = True
    while head < tail:
        x = members[head]
        head += 1
        for p in range(indptr[x], indptr[x + 1]):
            e = adj_edge[p]
            if removed[e]:
                continue
            y = adj[p]
            if visited[y]:
                continue
            visited[y] = True
            b = best[x]
            if edge_key[e] > b:
                b = edge_key[e]
            best[y] = b
            if b < u[y]:
                u[y] = b
                changed[y] = True
            members[tail] = y
            tail += 1
    return tail


@njit
def ic0(n, indptr, indices, data):
    """Zero fill-in incomplete Cholesky of a symmetric matrix.

    Input is the lower triangle (diagonal last in each row) in CSR, columns
    sorted. Returns the factor values in the same pattern, or an empty array
    on a nonpositive pivot.
    """
    val = data.copy()
    diag_pos = np.empty(n, np.int64)
    for i in range(n):
        diag_pos[i] = indptr[i + 1] - 1
    for i in range(n):
        lo, hi = indptr[i], indptr[i + 1] - 1
        for p in range(lo, hi):
            j = indices[p]
            # L_ij = (A_ij - sum_k<j L_ik L_jk) / L_jj over the shared pattern
            s = val[p]
            a, b = lo, indptr[j]
            bend = indptr[j + 1] - 1
            while a < p and b < bend:
                ca, cb = indices[a], indices[b]
                if ca == cb:
                    s -= val[a] * val[b]
                    a += 1
                    b += 1
                elif ca < cb:
                    a += 1
                else:
                    b += 1
            val[p] = s / val[diag_pos[j]]
        s = val[hi]
        for p in range(lo, hi):
            s -= val[p] * val[p]
        if not s > 0:
            return np.empty(0)
        val[hi] = np.sqrt(s)
    return val


@njit
def ic0_solve(n, indptr, indices, val, b):
    """Solve (L L^T) x = b for the ic0 factor."""
    y = b.copy()
    for i in range(n):
        lo, hi = indptr[i], indptr[i + 1] - 1
        s = y[i]
        for p in range(lo, hi):
            s -= val[p] * y[indices[p]]
        y[i] = s / val[hi]
    for i in range(n - 1, -1, -1):
        lo, hi = indptr[i], indptr[i + 1] - 1
        y[i] /= val[hi]
        yi = y[i]
        for p in range(lo, hi):
            y[indices[p]] -= val[p] * yi
    return y


@njit
def gth_ldl_dense_loop(pi, W):
    """Pivoted subtraction-free LDL^T of P^{-1/2} Lap(W) P^{-1/2}.

    Each step eliminates the remaining state with the largest s_i/pi_i, where
    s_i is recomputed as the sum of its current conductances (never by
    subtraction). Returns the unit-lower factor columns (rows in original
    state order), pivots d and the elimination order.
    """
    n = len(pi)
    W = W.copy()
    sq = np.sqrt(pi)
    Lm = np.zeros((n, n))
    d = np.zeros(n)
    order = np.empty(n, np.int64)
    rem = np.ones(n, np.bool_)
    idx = np.empty(n, np.int64)
    for step in range(n):
        m = 0
        for i in range(n):
            if rem[i]:
                idx[m] = i
                m += 1
        best = -1.0
        piv = -1
        spiv = 0.0
        for a in range(m):
            i = idx[a]
            s = 0.0
            for b in range(m):
                s += W[i, idx[b]]
            r = s / pi[i]
            if r > best:
                best = r
                piv = i
                spiv = s
        order[step] = piv
        rem[piv] = False
        d[step] = best
        Lm[piv, step] = 1.0
        if spiv > 0.0:
            for a in range(m):
                j = idx[a]
                if j == piv:
                    continue
                wj = W[j, piv]
                if wj == 0.0:
                    continue
                Lm[j, step] = -wj / spiv * sq[piv] / sq[j]
                f = wj / spiv
                for b in range(m):
                    k = idx[b]
                    if k == piv or k == j:
                        continue
                    wk = W[piv, k]
                    if wk != 0.0:
                        W[j, k] += f * wk
        for a in range(n):
            W[piv, a] = 0.0
            W[a, piv] = 0.0
    return Lm, d, order


@njit
def shifted_ldl_loop(perm, col_ptr, col_nodes, col_edges, pair_ptr, pair_edges, w0, mu0):
    """Structured LDL^T of Lap(w) - diag(mu) on a precomputed fill pattern.

    The Schur complement stays in conductance/mass form: eliminating x with
    pivot p = s_x - mu_x adds w_ax w_xb / p to every fill pair (a, b) and
    w_ax mu_x / p to mu_a, and s is always re-summed from conductances.
    Returns (pivots, factor values aligned with col_nodes, ok flag).
    """
    w = w0.copy()
    mu = mu0.copy()
    n = len(perm)
    piv = np.empty(n)
    lval = np.empty(len(col_nodes))
    for t in range(n):
        x = perm[t]
        lo, hi = col_ptr[t], col_ptr[t + 1]
        s = 0.0
        for q in range(lo, hi):
            s += w[col_edges[q]]
        p = s - mu[x]
        if p == 0.0 or not np.isfinite(p):
            return piv, lval, False
        piv[t] = p
        mx = mu[x] / p
        for q in range(lo, hi):
            wq = w[col_edges[q]]
            lval[q] = -wq / p
            mu[col_nodes[q]] += wq * mx
        r = pair_ptr[t]
        for a in range(lo, hi):
            wa = w[col_edges[a]] / p
            for b in range(a + 1, hi):
                w[pair_edges[r]] += wa * w[col_edges[b]]
                r += 1
    return piv, lval, True


@njit
def ldl_solve_loop(perm, col_ptr, col_nodes, lval, piv, b):
    y = b.copy()
    n = len(perm)
    z = np.empty(n)
    for t in range(n):
        zt = y[perm[t]]
        z[t] = zt
        for q in range(col_ptr[t], col_ptr[t + 1]):
            y[col_nodes[q]] -= lval[q] * zt
    for t in range(n):
        z[t] /= piv[t]
    x = np.zeros(n)
    for t in range(n - 1, -1, -1):
        s = z[t]
        for q in range(col_ptr[t], col_ptr[t + 1]):
            s -= lval[q] * x[col_nodes[q]]
        x[perm[t]] = s
    return x
