"""Entropic transport, Gromov-Wasserstein distances and GW barycenters.

Matrices handled here are symmetric with entries in [0, 1] (adjacency matrices
or step-function values); measures are 1-d probability vectors.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .errors import NumericError, ValidationError

__all__ = [
    "GwParams",
    "TransportPlan",
    "check_symmetric_unit",
    "check_probability",
    "sinkhorn_plan",
    "gw_cost_matrix",
    "gw_objective",
    "gw_distance",
    "gw_barycenter",
    "monotone_coupling",
    "round_to_marginals",
]

# order-one costs above this size are too expensive to optimize directly
ORDER_ONE_EXACT_LIMIT = 64
# below this size every node order of the smaller input is tried as a start
EXHAUSTIVE_START_LIMIT = 4


def _parse_order(order) -> int:
    if order in (1, "1", "one"):
        return 1
    if order in (2, "2", "two"):
        return 2
    raise ValidationError(f"GW order must be one or two, got {order!r}")


@dataclass(frozen=True)
class GwParams:
    """Solver settings shared by ``gw_distance`` and ``gw_barycenter``.

    ``epsilon`` is the proximal (KL) strength of each outer step,
    ``outer_iterations`` bounds the proximal / barycenter loop and
    ``sinkhorn_iterations`` the scaling sweeps inside each step.
    """

    order: int = 2
    epsilon: float = 0.05
    outer_iterations: int = 50
    sinkhorn_iterations: int = 300
    tolerance: float = 1e-7
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "order", _parse_order(self.order))
        if not self.epsilon > 0:
            raise ValidationError("epsilon must be positive")
        if not self.tolerance > 0:
            raise ValidationError("tolerance must be positive")
        if self.outer_iterations < 1 or self.sinkhorn_iterations < 1:
            raise ValidationError("iteration budgets must be positive")


@dataclass(frozen=True)
class TransportPlan:
    matrix: np.ndarray
    row_marginal: np.ndarray
    col_marginal: np.ndarray

    def marginal_error(self) -> float:
        rows = np.abs(self.matrix.sum(axis=1) - self.row_marginal).max(initial=0.0)
        cols = np.abs(self.matrix.sum(axis=0) - self.col_marginal).max(initial=0.0)
        return float(max(rows, cols))

    def is_feasible(self, marginal_tolerance: float = 1e-6) -> bool:
        return bool(np.all(self.matrix >= 0) and self.marginal_error() <= marginal_tolerance)


def check_symmetric_unit(w, name: str = "matrix") -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] < 1:
        raise ValidationError(f"{name} must be a non-empty square matrix")
    if not np.all(np.isfinite(w)):
        raise NumericError(f"{name} has non-finite entries")
    if not np.array_equal(w, w.T):
        raise ValidationError(f"{name} is not symmetric")
    if w.min() < 0 or w.max() > 1:
        raise ValidationError(f"{name} has entries outside [0, 1]")
    return w


def check_probability(p, size: int | None = None, name: str = "measure") -> np.ndarray:
    p = np.asarray(p, dtype=np.float64).ravel()
    if size is not None and p.size != size:
        raise ValidationError(f"{name} has length {p.size}, expected {size}")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValidationError(f"{name} is not a probability vector")
    return p


def sinkhorn_plan(kernel, mu, nu, iterations: int = 300, tolerance: float = 1e-7) -> TransportPlan:
    """Scale a positive kernel to the coupling ``diag(a) K diag(b)`` with marginals mu, nu."""
    kernel = np.asarray(kernel, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    nu = np.asarray(nu, dtype=np.float64)
    if kernel.shape != (mu.size, nu.size):
        raise ValidationError(f"kernel shape {kernel.shape} does not match marginals ({mu.size}, {nu.size})")
    if not np.all(np.isfinite(kernel)):
        raise NumericError("kernel has non-finite entries")
    kernel = np.maximum(kernel, kernels.TINY)
    a, b, _, _ = kernels.sinkhorn_scaling(kernel, mu, nu, int(iterations), float(tolerance))
    plan = a[:, None] * kernel * b[None, :]
    return TransportPlan(plan, mu, nu)


def round_to_marginals(plan, mu, nu) -> np.ndarray:
    """Nearby nonnegative matrix with row sums ``mu`` and column sums ``nu``.

    Rows and then columns that exceed their marginal are scaled down; the
    remaining deficit is restored by a nonnegative rank-one correction.
    """
    t = np.asarray(plan, dtype=np.float64)
    rows = t.sum(axis=1)
    t = t * np.minimum(1.0, np.divide(mu, rows, out=np.ones_like(rows), where=rows > 0))[:, None]
    cols = t.sum(axis=0)
    t = t * np.minimum(1.0, np.divide(nu, cols, out=np.ones_like(cols), where=cols > 0))[None, :]
    err_r = np.maximum(mu - t.sum(axis=1), 0.0)
    err_c = np.maximum(nu - t.sum(axis=0), 0.0)
    mass = err_r.sum()
    if mass > 0:
        t = t + np.outer(err_r, err_c) / mass
    return t


def _as_matrix(plan) -> np.ndarray:
    return plan.matrix if isinstance(plan, TransportPlan) else np.asarray(plan, dtype=np.float64)


def gw_cost_matrix(w1, w2, plan, order=2) -> np.ndarray:
    """Linearized GW cost ``C[i, k] = sum_{j,l} |w1[i,j] - w2[k,l]|^p T[j,l]``.

    Order two uses the squared-loss decomposition (three matrix products);
    order one evaluates the quadruple sum directly.
    """
    order = _parse_order(order)
    t = _as_matrix(plan)
    w1 = np.asarray(w1, dtype=np.float64)
    w2 = np.asarray(w2, dtype=np.float64)
    if t.shape != (w1.shape[0], w2.shape[0]):
        raise ValidationError(f"plan shape {t.shape} inconsistent with matrices {w1.shape}, {w2.shape}")
    if order == 1:
        return kernels.gw_order_one_cost(w1, w2, t)
    mu = t.sum(axis=1)
    nu = t.sum(axis=0)
    return ((w1 * w1) @ mu)[:, None] + ((w2 * w2) @ nu)[None, :] - 2.0 * (w1 @ t @ w2.T)


def gw_objective(w1, w2, plan, order=2) -> float:
    """Unregularized GW objective at a fixed plan."""
    t = _as_matrix(plan)
    value = float(np.sum(gw_cost_matrix(w1, w2, t, order) * t))
    # clamp round-off negatives (including -0.0) to exactly zero
    return value if value > 0 else 0.0


def _rank_rows(rows: np.ndarray) -> np.ndarray:
    _, inverse = np.unique(rows, axis=0, return_inverse=True)
    return inverse.ravel().astype(np.int64)


def _refine(w: np.ndarray, colors: np.ndarray) -> np.ndarray:
    while True:
        n_col = colors.max() + 1
        onehot = np.zeros((w.shape[0], n_col))
        onehot[np.arange(w.shape[0]), colors] = 1.0
        # heavier connections sort first
        sig = -np.round(w @ onehot, 10)
        new = _rank_rows(np.column_stack([colors, sig]))
        if new.max() == colors.max():
            return new
        colors = new


def canonical_order(w, mu) -> np.ndarray:
    """Node order that is invariant under simultaneous relabeling of ``w`` and ``mu``.

    Colour refinement seeded by the measure (heaviest first); remaining ties
    are broken by individualizing the lowest-index member of the first tied
    class and refining again.
    """
    w = np.asarray(w, dtype=np.float64)
    n = w.shape[0]
    colors = _rank_rows(-np.round(np.asarray(mu, dtype=np.float64), 12)[:, None])
    colors = _refine(w, colors)
    while colors.max() + 1 < n:
        counts = np.bincount(colors)
        tied = int(np.flatnonzero(counts > 1)[0])
        pick = int(np.flatnonzero(colors == tied)[0])
        split = 2 * colors
        split[pick] -= 1
        colors = _refine(w, _rank_rows(split[:, None]))
    order = np.empty(n, dtype=np.int64)
    order[colors] = np.arange(n)
    return order


def _northwest_corner(order_a, mu, order_b, nu) -> np.ndarray:
    t = np.zeros((mu.size, nu.size))
    ra = mu[order_a].astype(np.float64).copy()
    rb = nu[order_b].astype(np.float64).copy()
    i = j = 0
    while i < ra.size and j < rb.size:
        m = min(ra[i], rb[j])
        t[order_a[i], order_b[j]] += m
        ra[i] -= m
        rb[j] -= m
        if ra[i] <= rb[j]:
            i += 1
        else:
            j += 1
    return t


def monotone_coupling(w1, mu1, w2, mu2) -> np.ndarray:
    """Northwest-corner coupling between the canonical node orders of both inputs."""
    return _northwest_corner(canonical_order(w1, mu1), mu1, canonical_order(w2, mu2), mu2)


def _proximal_step(w1, w2, t, mu1, mu2, params: GwParams, opt_order: int) -> np.ndarray:
    """One proximal update followed by an exact line search towards it.

    The GW objective is quadratic along the segment between two couplings,
    so the best step in [0, 1] has a closed form and the iterate never gets
    worse; plain proximal steps can oscillate when epsilon is small relative
    to the curvature.
    """
    cost = gw_cost_matrix(w1, w2, t, opt_order)
    shifted = cost - cost.min()
    kernel = t * np.exp(-shifted / params.epsilon)
    target = sinkhorn_plan(kernel, mu1, mu2, params.sinkhorn_iterations, params.tolerance).matrix
    target = round_to_marginals(target, mu1, mu2)
    direction = target - t
    slope = float(np.sum(cost * direction))
    curvature = float(np.sum(gw_cost_matrix(w1, w2, direction, opt_order) * direction))
    if curvature > 0:
        step = min(max(-slope / curvature, 0.0), 1.0)
    else:
        step = 1.0 if curvature + 2.0 * slope < 0 else 0.0
    if step == 1.0:
        return target
    return t + step * direction


def spectral_order(w, mu, sign: int = 1) -> np.ndarray:
    """Nodes sorted by the second eigenvector of the measure-weighted matrix."""
    root = np.sqrt(np.asarray(mu, dtype=np.float64))
    n = root.size
    if n < 2:
        return np.arange(n)
    vals, vecs = np.linalg.eigh(root[:, None] * w * root[None, :])
    vec = sign * vecs[:, np.argsort(-vals, kind="stable")[1]]
    return np.lexsort((np.arange(n), -np.round(vec, 12)))


def _initial_couplings(w1, mu1, w2, mu2) -> list[np.ndarray]:
    product = np.outer(mu1, mu2)
    sorted_nw = monotone_coupling(w1, mu1, w2, mu2)
    starts = [product, sorted_nw, 0.5 * (sorted_nw + product)]
    o1 = spectral_order(w1, mu1)
    for sign in (1, -1):
        nw = _northwest_corner(o1, mu1, spectral_order(w2, mu2, sign), mu2)
        starts.append(0.5 * (nw + product))
    if min(mu1.size, mu2.size) <= EXHAUSTIVE_START_LIMIT:
        # tiny inputs: try every order of the smaller side against the
        # canonical order of the larger one, as a vertex and as a blend
        if mu1.size <= mu2.size:
            fixed = canonical_order(w2, mu2)
            pairs = ((np.array(p), fixed) for p in itertools.permutations(range(mu1.size)))
        else:
            fixed = canonical_order(w1, mu1)
            pairs = ((fixed, np.array(p)) for p in itertools.permutations(range(mu2.size)))
        for oa, ob in pairs:
            nw = _northwest_corner(oa, mu1, ob, mu2)
            starts += [nw, 0.5 * (nw + product)]
    return starts


def _proximal_descent(w1, mu1, w2, mu2, t0, params: GwParams, opt_order: int):
    t = t0
    value = gw_objective(w1, w2, t, opt_order)
    best_t, best_value = t, value
    for _ in range(params.outer_iterations):
        t_new = _proximal_step(w1, w2, t, mu1, mu2, params, opt_order)
        new_value = gw_objective(w1, w2, t_new, opt_order)
        if new_value < best_value:
            best_t, best_value = t_new, new_value
        decrease = value - new_value
        t, value = t_new, new_value
        if decrease < params.tolerance:
            break
    return best_t, best_value


def gw_distance(w1, mu1, w2, mu2, params: GwParams | None = None) -> tuple[float, TransportPlan]:
    """Gromov-Wasserstein discrepancy between two measured matrices.

    Runs proximal-point descent from several couplings (product, canonical
    sorted, and sorted/spectral blends with the product) and keeps the best
    local optimum.
    For ``order=2`` the returned value is the squared 2-order distance.
    """
    params = params or GwParams()
    w1 = check_symmetric_unit(w1, "W1")
    w2 = check_symmetric_unit(w2, "W2")
    mu1 = check_probability(mu1, w1.shape[0], "mu1")
    mu2 = check_probability(mu2, w2.shape[0], "mu2")
    # solve in a fixed argument orientation so that d(X, Y) == d(Y, X) exactly
    swapped = (w2.shape[0], w2.tobytes(), mu2.tobytes()) < (w1.shape[0], w1.tobytes(), mu1.tobytes())
    if swapped:
        w1, mu1, w2, mu2 = w2, mu2, w1, mu1
    order = params.order
    opt_order = order
    if order == 1 and max(w1.shape[0], w2.shape[0]) > ORDER_ONE_EXACT_LIMIT:
        opt_order = 2

    starts = _initial_couplings(w1, mu1, w2, mu2)
    best_t, best_value = None, np.inf
    for t0 in starts:
        t, value = _proximal_descent(w1, mu1, w2, mu2, t0, params, opt_order)
        if opt_order != order:
            value = gw_objective(w1, w2, t, order)
        if value < best_value:
            best_t, best_value = t, value
    if swapped:
        return best_value, TransportPlan(best_t.T.copy(), mu2, mu1)
    return best_value, TransportPlan(best_t, mu1, mu2)


def _edge_density(a: np.ndarray) -> float:
    n = a.shape[0]
    if n < 2:
        return 0.0
    return float((a.sum() - np.trace(a)) / (n * (n - 1)))


def gw_barycenter(
    matrices: Sequence,
    measures: Sequence,
    K: int,
    weights=None,
    params: GwParams | None = None,
) -> tuple[np.ndarray, list[float]]:
    """Order-two GW barycenter with a uniform measure over ``K`` atoms.

    Alternates one proximal plan update per input (kept only when it lowers
    that input's objective against the current barycenter) with the closed-form
    barycenter update ``sum_m w_m T_m^T A_m T_m / (nu nu^T)``, symmetrized and
    clamped to [0, 1].

    Returns:
        the K x K barycenter and the weighted objective after every outer step
        (non-increasing).
    """
    params = params or GwParams()
    if len(matrices) == 0:
        raise ValidationError("gw_barycenter needs at least one input matrix")
    if K < 1:
        raise ValidationError("K must be at least 1")
    if len(measures) != len(matrices):
        raise ValidationError("one measure per input matrix is required")
    mats = [check_symmetric_unit(a, f"matrix {m}") for m, a in enumerate(matrices)]
    mus = [check_probability(p, a.shape[0], f"measure {m}") for m, (a, p) in enumerate(zip(mats, measures))]
    n_in = len(mats)
    if weights is None:
        weights = np.full(n_in, 1.0 / n_in)
    weights = check_probability(weights, n_in, "weights")

    nu = np.full(K, 1.0 / K)
    density = float(sum(w * _edge_density(a) for w, a in zip(weights, mats)))
    bary = np.full((K, K), density)
    nu_order = np.arange(K)
    # half sorted coupling (breaks the symmetry of the constant start), half
    # product coupling (keeps full support so proximal steps can move mass)
    plans = [
        0.5 * _northwest_corner(canonical_order(a, p), p, nu_order, nu) + 0.5 * np.outer(p, nu)
        for a, p in zip(mats, mus)
    ]
    values = [gw_objective(a, bary, t) for a, t in zip(mats, plans)]

    trace: list[float] = []
    for _ in range(params.outer_iterations):
        for m, (a, p) in enumerate(zip(mats, mus)):
            t_new = _proximal_step(a, bary, plans[m], p, nu, params, 2)
            v_new = gw_objective(a, bary, t_new)
            if v_new <= values[m]:
                plans[m], values[m] = t_new, v_new
        bary = _barycenter_update(mats, plans, weights)
        values = [gw_objective(a, bary, t) for a, t in zip(mats, plans)]
        total = float(np.dot(weights, values))
        trace.append(total)
        if len(trace) > 1 and trace[-2] - total < params.tolerance:
            break
    return bary, trace


def _barycenter_update(mats, plans, weights) -> np.ndarray:
    k = plans[0].shape[1]
    num = np.zeros((k, k))
    den = np.zeros((k, k))
    for w, a, t in zip(weights, mats, plans):
        num += w * (t.T @ a @ t)
        col = t.sum(axis=0)
        den += w * np.outer(col, col)
    bary = num / np.maximum(den, kernels.TINY)
    bary = 0.5 * (bary + bary.T)
    return np.clip(bary, 0.0, 1.0)
