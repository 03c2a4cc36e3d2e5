"""Hot inner loops, each with a numba and a pure-numpy implementation.

The public names (``sinkhorn_scaling``, ``gw_order_one_cost``, ``sba_blocks``,
``box_filter``) point at the numba variants unless numba is missing or
``GRAPHON_AUG_DISABLE_NUMBA`` is set. Both variants stay importable so they
can be cross-checked and benchmarked.
"""

import numpy as np

from ._accel import USE_NUMBA, njit

TINY = 1e-300


# ---------------------------------------------------------------- sinkhorn

def sinkhorn_scaling_numpy(kernel, mu, nu, iterations, tolerance):
    """Alternate scaling updates for ``diag(a) @ kernel @ diag(b)``.

    Args:
        kernel: (I, J) positive matrix.
        mu: (I,) target row sums.
        nu: (J,) target column sums.
        iterations: sweep budget.
        tolerance: stop once the max row-marginal violation falls below it
            (column marginals are exact after each sweep).

    Returns:
        a, b, number of sweeps, final violation.
    """
    b = np.ones(kernel.shape[1])
    kb = kernel @ b
    err = np.inf
    it = 0
    while it < iterations:
        it += 1
        a = mu / np.maximum(kb, TINY)
        b = nu / np.maximum(kernel.T @ a, TINY)
        kb = kernel @ b
        err = np.max(np.abs(a * kb - mu))
        if err < tolerance:
            break
    if it == 0:
        a = mu / np.maximum(kb, TINY)
    return a, b, it, err


@njit
def sinkhorn_scaling_numba(kernel, mu, nu, iterations, tolerance):
    n_i, n_j = kernel.shape
    a = np.empty(n_i)
    b = np.ones(n_j)
    kb = np.empty(n_i)
    kta = np.empty(n_j)
    for i in range(n_i):
        s = 0.0
        for j in range(n_j):
            s += kernel[i, j]
        kb[i] = s
    err = np.inf
    it = 0
    while it < iterations:
        it += 1
        for i in range(n_i):
            a[i] = mu[i] / max(kb[i], TINY)
        for j in range(n_j):
            kta[j] = 0.0
        for i in range(n_i):
            ai = a[i]
            for j in range(n_j):
                kta[j] += kernel[i, j] * ai
        for j in range(n_j):
            b[j] = nu[j] / max(kta[j], TINY)
        err = 0.0
        for i in range(n_i):
            s = 0.0
            for j in range(n_j):
                s += kernel[i, j] * b[j]
            kb[i] = s
            v = abs(a[i] * s - mu[i])
            if v > err:
                err = v
        if err < tolerance:
            break
    if it == 0:
        for i in range(n_i):
            a[i] = mu[i] / max(kb[i], TINY)
    return a, b, it, err


# ------------------------------------------------- order-one GW cost matrix

def gw_order_one_cost_numpy(w1, w2, plan):
    """C[i, k] = sum_{j, l} |w1[i, j] - w2[k, l]| * plan[j, l]."""
    n_i, n_k = w1.shape[0], w2.shape[0]
    cost = np.empty((n_i, n_k))
    for i in range(n_i):
        diff = np.abs(w1[i][:, None, None] - w2[None, :, :])  # (j, k, l)
        cost[i] = np.einsum("jkl,jl->k", diff, plan)
    return cost


@njit
def gw_order_one_cost_numba(w1, w2, plan):
    n_i, n_k = w1.shape[0], w2.shape[0]
    cost = np.zeros((n_i, n_k))
    for i in range(n_i):
        for k in range(n_k):
            s = 0.0
            for j in range(n_i):
                x = w1[i, j]
                for l in range(n_k):
                    t = plan[j, l]
                    if t != 0.0:
                        s += abs(x - w2[k, l]) * t
            cost[i, k] = s
    return cost


# ------------------------------------------- greedy pivot block assignment

def sba_blocks_numpy(adj, threshold):
    """Greedy pivot clustering of the rows of ``adj`` (scanned in index order).

    Node ``i`` joins the first pivot whose normalized row Hamming distance,
    ignoring columns ``i`` and the pivot, is at most ``threshold``; otherwise
    it becomes a new pivot. Returns the block index of every node.
    """
    n = adj.shape[0]
    labels = np.empty(n, dtype=np.int64)
    pivots = []
    denom = max(n - 2, 1)
    for i in range(n):
        if pivots:
            p = np.asarray(pivots)
            diff = np.abs(adj[p] - adj[i][None, :])
            diff[:, i] = 0.0
            diff[np.arange(len(p)), p] = 0.0
            dist = diff.sum(axis=1) / denom
            hit = np.flatnonzero(dist <= threshold)
            if hit.size:
                labels[i] = hit[0]
                continue
        labels[i] = len(pivots)
        pivots.append(i)
    return labels


@njit
def sba_blocks_numba(adj, threshold):
    n = adj.shape[0]
    labels = np.empty(n, dtype=np.int64)
    pivots = np.empty(n, dtype=np.int64)
    n_piv = 0
    denom = max(n - 2, 1)
    for i in range(n):
        assigned = False
        for q in range(n_piv):
            p = pivots[q]
            s = 0.0
            for m in range(n):
                if m != i and m != p:
                    s += abs(adj[i, m] - adj[p, m])
            if s / denom <= threshold:
                labels[i] = q
                assigned = True
                break
        if not assigned:
            labels[i] = n_piv
            pivots[n_piv] = i
            n_piv += 1
    return labels


# ----------------------------------------------------------- box smoothing

def box_filter_numpy(mat, window):
    """Mean over a ``window`` x ``window`` neighbourhood, truncated at the borders."""
    h = window // 2
    n_r, n_c = mat.shape
    padded = np.zeros((n_r + 1, n_c + 1))
    padded[1:, 1:] = np.cumsum(np.cumsum(mat, axis=0), axis=1)
    r0 = np.clip(np.arange(n_r) - h, 0, n_r)
    r1 = np.clip(np.arange(n_r) + h + 1, 0, n_r)
    c0 = np.clip(np.arange(n_c) - h, 0, n_c)
    c1 = np.clip(np.arange(n_c) + h + 1, 0, n_c)
    sums = (padded[r1][:, c1] - padded[r0][:, c1] - padded[r1][:, c0] + padded[r0][:, c0])
    counts = np.outer(r1 - r0, c1 - c0)
    return sums / counts


@njit
def box_filter_numba(mat, window):
    h = window // 2
    n_r, n_c = mat.shape
    out = np.empty((n_r, n_c))
    for i in range(n_r):
        lo_i = max(i - h, 0)
        hi_i = min(i + h + 1, n_r)
        for j in range(n_c):
            lo_j = max(j - h, 0)
            hi_j = min(j + h + 1, n_c)
            s = 0.0
            for a in range(lo_i, hi_i):
                for b in range(lo_j, hi_j):
                    s += mat[a, b]
            out[i, j] = s / ((hi_i - lo_i) * (hi_j - lo_j))
    return out


if USE_NUMBA:
    sinkhorn_scaling = sinkhorn_scaling_numba
    gw_order_one_cost = gw_order_one_cost_numba
    sba_blocks = sba_blocks_numba
    box_filter = box_filter_numba
else:
    sinkhorn_scaling = sinkhorn_scaling_numpy
    gw_order_one_cost = gw_order_one_cost_numpy
    sba_blocks = sba_blocks_numpy
    box_filter = box_filter_numpy
