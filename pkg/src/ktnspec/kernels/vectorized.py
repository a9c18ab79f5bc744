"""Pure-numpy versions of the elimination kernels.

Each outer step is a Python loop over pivots; the inner work is vectorised.
Arithmetic is the same as in ``loops`` except for summation order, so the
results agree to rounding. The shifted factor and solve keep the dtype of
their inputs, which lets the spectral code run them in extended precision.
"""
import numpy as np


def gth_ldl_dense(pi, W):
    n = len(pi)
    W = np.array(W, dtype=float)
    sq = np.sqrt(pi)
    Lm = np.zeros((n, n))
    d = np.zeros(n)
    order = np.empty(n, np.int64)
    rem = np.ones(n, bool)
    for step in range(n):
        idx = np.flatnonzero(rem)
        s = W[np.ix_(idx, idx)].sum(axis=1)
        r = s / pi[idx]
        a = int(np.argmax(r))
        piv = idx[a]
        spiv = s[a]
        order[step] = piv
        rem[piv] = False
        d[step] = r[a]
        Lm[piv, step] = 1.0
        rest = idx[idx != piv]
        if spiv > 0.0 and len(rest):
            wcol = W[rest, piv]
            Lm[rest, step] = -wcol / spiv * sq[piv] / sq[rest]
            upd = np.outer(wcol / spiv, W[piv, rest])
            np.fill_diagonal(upd, 0.0)
            W[np.ix_(rest, rest)] += upd
        W[piv, :] = 0.0
        W[:, piv] = 0.0
    return Lm, d, order


def shifted_ldl(perm, col_ptr, col_nodes, col_edges, pair_ptr, pair_edges, w0, mu0):
    w = np.array(w0)
    mu = np.array(mu0, dtype=w.dtype)
    n = len(perm)
    piv = np.empty(n, w.dtype)
    lval = np.empty(len(col_nodes), w.dtype)
    for t in range(n):
        x = perm[t]
        lo, hi = col_ptr[t], col_ptr[t + 1]
        we = w[col_edges[lo:hi]]
        p = we.sum() - mu[x]
        if p == 0.0 or not np.isfinite(p):
            return piv, lval, False
        piv[t] = p
        lval[lo:hi] = -we / p
        nodes = col_nodes[lo:hi]
        mu[nodes] += we * (mu[x] / p)
        m = hi - lo
        if m > 1:
            ia, ib = np.triu_indices(m, 1)
            pe = pair_edges[pair_ptr[t]:pair_ptr[t + 1]]
            # fill pairs are distinct within one step, so fancy += is safe
            w[pe] += (we[ia] / p) * we[ib]
    return piv, lval, True


def ldl_solve(perm, col_ptr, col_nodes, lval, piv, b):
    y = np.array(b)
    n = len(perm)
    z = np.empty(n, y.dtype)
    for t in range(n):
        zt = y[perm[t]]
        z[t] = zt
        lo, hi = col_ptr[t], col_ptr[t + 1]
        y[col_nodes[lo:hi]] -= lval[lo:hi] * zt
    z /= piv
    x = np.zeros(n, y.dtype)
    for t in range(n - 1, -1, -1):
        lo, hi = col_ptr[t], col_ptr[t + 1]
        x[perm[t]] = z[t] - lval[lo:hi] @ x[col_nodes[lo:hi]]
    return x
