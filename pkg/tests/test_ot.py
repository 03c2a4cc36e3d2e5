import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from graphon_aug.errors import NumericError, ValidationError
from graphon_aug.graph import Graph, node_measure, permute_graph
from graphon_aug.ot import (
    GwParams,
    TransportPlan,
    canonical_order,
    gw_barycenter,
    gw_cost_matrix,
    gw_distance,
    gw_objective,
    sinkhorn_plan,
)

from conftest import path_graph, random_graph, random_symmetric


def quadruple_sum_cost(w1, w2, t, p):
    """C[i, k] = sum_{j, l} |w1[i, j] - w2[k, l]|^p T[j, l], evaluated term by term."""
    n1, n2 = w1.shape[0], w2.shape[0]
    c = np.zeros((n1, n2))
    for i in range(n1):
        for k in range(n2):
            for j in range(n1):
                for l in range(n2):
                    c[i, k] += abs(w1[i, j] - w2[k, l]) ** p * t[j, l]
    return c


def grid_oracle_2x2(w1, w2, step=1e-5):
    """Minimum GW objective over T(t) = [[t, 1/2 - t], [1/2 - t, t]]."""
    ts = np.arange(0.0, 0.5 + step / 2, step)
    best = np.inf
    for t in ts:
        plan = np.array([[t, 0.5 - t], [0.5 - t, t]])
        best = min(best, float(np.sum(quadruple_sum_cost(w1, w2, plan, 2) * plan)))
    return best


def grid_oracle_2x2_fast(w1, w2, step=1e-5):
    # the objective is a quadratic polynomial in t; evaluate it on the grid in closed form
    ts = np.arange(0.0, 0.5 + step / 2, step)
    e = [np.array([[1.0, -1.0], [-1.0, 1.0]]), np.array([[0.0, 0.5], [0.5, 0.0]])]
    a, b = e[0], e[1]
    f = lambda x, y: float(np.sum(quadruple_sum_cost(w1, w2, y, 2) * x))
    c2, c1, c0 = f(a, a), f(a, b) + f(b, a), f(b, b)
    return float(np.min(c2 * ts**2 + c1 * ts + c0))


class TestSinkhorn:
    def test_product_kernel_is_fixed_point(self, rng):
        mu = rng.dirichlet(np.ones(4))
        nu = rng.dirichlet(np.ones(3))
        plan = sinkhorn_plan(np.outer(mu, nu), mu, nu, iterations=1)
        assert np.allclose(plan.matrix, np.outer(mu, nu), atol=1e-15)

    def test_one_by_one(self):
        assert np.allclose(sinkhorn_plan([[7.0]], [1.0], [1.0]).matrix, [[1.0]])

    def test_two_by_two_matches_grid_projection(self):
        eps = 0.05
        kernel = np.array([[2.0, 1.0], [1.0, 2.0]])
        plan = sinkhorn_plan(kernel, [0.5, 0.5], [0.5, 0.5], iterations=1000, tolerance=1e-14).matrix
        # oracle: minimize <T, -eps log K> + eps sum T log T over the 2x2 coupling segment
        ts = np.linspace(1e-9, 0.5 - 1e-9, 500_001)
        diag, off = ts, 0.5 - ts
        obj = eps * (2 * diag * np.log(diag) + 2 * off * np.log(off)) - eps * (2 * diag * np.log(2.0))
        t_star = ts[np.argmin(obj)]
        assert abs(plan[0, 0] - t_star) <= 1e-6
        assert np.allclose(plan, plan.T)

    def test_non_finite_kernel(self):
        with pytest.raises(NumericError):
            sinkhorn_plan([[np.nan, 1.0], [1.0, 1.0]], [0.5, 0.5], [0.5, 0.5])

    def test_shape_mismatch(self):
        with pytest.raises(ValidationError):
            sinkhorn_plan(np.ones((2, 3)), [0.5, 0.5], [0.5, 0.5])

    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 8), m=st.integers(1, 8))
    def test_marginals(self, seed, n, m):
        rng = np.random.default_rng(seed)
        mu, nu = rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(m))
        plan = sinkhorn_plan(np.exp(-rng.random((n, m)) / 0.1), mu, nu, iterations=2000, tolerance=1e-12)
        assert plan.is_feasible(1e-6)


class TestCostMatrix:
    def test_zero_case(self):
        assert np.array_equal(gw_cost_matrix([[0.0]], [[0.0]], [[1.0]]), [[0.0]])

    @pytest.mark.parametrize("order,expected", [(2, 0.25), (1, 0.5)])
    def test_one_by_one(self, order, expected):
        assert np.allclose(gw_cost_matrix([[0.8]], [[0.3]], [[1.0]], order), [[expected]])

    @pytest.mark.parametrize("order", [1, 2])
    def test_three_by_three_product_plan(self, rng, order):
        w1, w2 = random_symmetric(rng, 3), random_symmetric(rng, 3)
        t = np.outer(np.full(3, 1 / 3), np.full(3, 1 / 3))
        assert np.allclose(gw_cost_matrix(w1, w2, t, order), quadruple_sum_cost(w1, w2, t, order), atol=1e-10)

    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 8), m=st.integers(1, 8), order=st.sampled_from([1, 2]))
    def test_matches_quadruple_sum_for_any_matrix(self, seed, n, m, order):
        rng = np.random.default_rng(seed)
        w1, w2, t = random_symmetric(rng, n), random_symmetric(rng, m), rng.random((n, m))
        assert np.abs(gw_cost_matrix(w1, w2, t, order) - quadruple_sum_cost(w1, w2, t, order)).max() <= 1e-10

    def test_shape_mismatch(self):
        with pytest.raises(ValidationError):
            gw_cost_matrix(np.zeros((2, 2)), np.zeros((3, 3)), np.zeros((3, 2)))


class TestGwDistance:
    @pytest.mark.parametrize("order,expected", [("two", 0.25), ("one", 0.5)])
    def test_forced_one_by_one(self, order, expected):
        value, plan = gw_distance([[0.8]], [1.0], [[0.3]], [1.0], GwParams(order=order))
        assert value == pytest.approx(expected, abs=1e-12)
        assert np.allclose(plan.matrix, [[1.0]])

    def test_two_by_two_grid_oracle(self):
        w1 = np.array([[0.0, 1.0], [1.0, 0.0]])
        w2 = np.array([[0.0, 0.5], [0.5, 0.0]])
        oracle = grid_oracle_2x2(w1, w2, step=1e-3)
        assert oracle == pytest.approx(grid_oracle_2x2_fast(w1, w2), abs=1e-6)
        value, _ = gw_distance(w1, [0.5, 0.5], w2, [0.5, 0.5])
        assert value <= grid_oracle_2x2_fast(w1, w2) + 1e-3
        assert value == pytest.approx(0.125, abs=1e-6)

    def test_three_by_three_permutation_oracle(self):
        rng = np.random.default_rng(3)
        mu = np.full(3, 1 / 3)
        for _ in range(20):
            w1, w2 = random_symmetric(rng, 3), random_symmetric(rng, 3)
            best_vertex = min(
                gw_objective(w1, w2, np.eye(3)[list(p)] / 3) for p in itertools.permutations(range(3))
            )
            value, _ = gw_distance(w1, mu, w2, mu)
            assert value <= best_vertex + 1e-3

    def test_self_distance(self, rng):
        g = random_graph(rng, 10)
        mu = node_measure(g)
        value, plan = gw_distance(g.adjacency(), mu, g.adjacency(), mu)
        assert value <= 1e-6
        assert plan.is_feasible()

    @settings(max_examples=25)
    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 10))
    def test_permutation_invariance(self, seed, n):
        rng = np.random.default_rng(seed)
        g = random_graph(rng, n, p=float(rng.uniform(0.1, 0.9)))
        h = permute_graph(g, rng.permutation(n))
        value, _ = gw_distance(g.adjacency(), node_measure(g), h.adjacency(), node_measure(h))
        assert value <= 1e-3

    @settings(max_examples=25)
    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 12), m=st.integers(1, 12))
    def test_symmetry_and_feasibility(self, seed, n, m):
        rng = np.random.default_rng(seed)
        g, h = random_graph(rng, n), random_graph(rng, m)
        d1, p1 = gw_distance(g.adjacency(), node_measure(g), h.adjacency(), node_measure(h))
        d2, p2 = gw_distance(h.adjacency(), node_measure(h), g.adjacency(), node_measure(g))
        assert abs(d1 - d2) <= 1e-6
        assert d1 >= 0
        assert p1.is_feasible() and p2.is_feasible()
        assert p1.matrix.shape == (n, m)

    def test_order_one_large_uses_order_two_plan(self, rng):
        g, h = random_graph(rng, 70), random_graph(rng, 66)
        value, plan = gw_distance(g.adjacency(), node_measure(g), h.adjacency(), node_measure(h),
                                  GwParams(order=1, outer_iterations=5))
        assert value == pytest.approx(gw_objective(g.adjacency(), h.adjacency(), plan, 1))

    @pytest.mark.parametrize(
        "w1,mu1,w2,mu2",
        [
            (np.zeros((2, 2)), [1.0], np.zeros((2, 2)), [0.5, 0.5]),
            (np.array([[0.0, 1.0], [0.0, 0.0]]), [0.5, 0.5], np.zeros((1, 1)), [1.0]),
            (np.array([[0.0, 2.0], [2.0, 0.0]]), [0.5, 0.5], np.zeros((1, 1)), [1.0]),
            (np.zeros((2, 2)), [0.7, 0.7], np.zeros((1, 1)), [1.0]),
        ],
    )
    def test_invalid_inputs(self, w1, mu1, w2, mu2):
        with pytest.raises(ValidationError):
            gw_distance(w1, mu1, w2, mu2)

    @pytest.mark.parametrize("kwargs", [{"epsilon": 0}, {"tolerance": -1}, {"order": 3}, {"outer_iterations": 0}])
    def test_params_validation(self, kwargs):
        with pytest.raises(ValidationError):
            GwParams(**kwargs)


class TestCanonicalOrder:
    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 14))
    def test_relabeling_invariance(self, seed, n):
        rng = np.random.default_rng(seed)
        g = random_graph(rng, n, p=float(rng.uniform(0, 1)))
        perm = rng.permutation(n)
        h = permute_graph(g, perm)
        a, b = g.adjacency(), h.adjacency()
        oa = canonical_order(a, node_measure(g))
        ob = canonical_order(b, node_measure(h))
        assert sorted(oa) == list(range(n))
        assert np.array_equal(a[np.ix_(oa, oa)], b[np.ix_(ob, ob)])


class TestBarycenter:
    def test_two_points(self):
        bary, _ = gw_barycenter([np.zeros((1, 1)), np.ones((1, 1))], [[1.0], [1.0]], 1)
        assert np.allclose(bary, [[0.5]])

    def test_duplication_invariance(self, rng):
        a = random_graph(rng, 8).adjacency()
        mu = np.full(8, 1 / 8)
        b1, t1 = gw_barycenter([a], [mu], 5)
        b3, t3 = gw_barycenter([a, a, a], [mu, mu, mu], 5)
        assert np.abs(b1 - b3).max() <= 1e-8
        assert abs(t1[-1] - t3[-1]) <= 1e-8

    @pytest.mark.parametrize("seed", range(6))
    def test_single_input_uniform_measure_reaches_zero(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(4, 13))
        a = random_graph(rng, n, p=0.4).adjacency()
        _, trace = gw_barycenter([a], [np.full(n, 1 / n)], n)
        assert trace[-1] <= 1e-4

    def test_single_regular_graph_degree_measure_reaches_zero(self):
        cycle = Graph("c", 8, tuple((i, (i + 1) % 8) for i in range(8)))
        _, trace = gw_barycenter([cycle.adjacency()], [node_measure(cycle)], 8)
        assert trace[-1] <= 1e-4

    def test_single_nonregular_graph_degree_measure_has_positive_floor(self):
        # a uniform barycenter measure cannot match non-uniform degree weights
        # atom for atom, so some atom must mix nodes and the objective stays positive
        g = path_graph(4)
        _, trace = gw_barycenter([g.adjacency()], [node_measure(g)], 4)
        assert trace[-1] > 1e-3

    @settings(max_examples=20)
    @given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 4), k=st.integers(1, 8))
    def test_trace_non_increasing_and_bary_valid(self, seed, m, k):
        rng = np.random.default_rng(seed)
        graphs = [random_graph(rng, int(rng.integers(1, 12)), p=float(rng.uniform(0.1, 0.8))) for _ in range(m)]
        bary, trace = gw_barycenter([g.adjacency() for g in graphs], [node_measure(g) for g in graphs], k,
                                    weights=rng.dirichlet(np.ones(m)))
        assert all(b <= a + 1e-8 for a, b in zip(trace, trace[1:]))
        assert np.array_equal(bary, bary.T)
        assert bary.min() >= 0 and bary.max() <= 1

    def test_errors(self):
        with pytest.raises(ValidationError):
            gw_barycenter([], [], 2)
        with pytest.raises(ValidationError):
            gw_barycenter([np.zeros((1, 1))], [[1.0]], 0)
        with pytest.raises(ValidationError):
            gw_barycenter([np.zeros((1, 1))], [[1.0]], 1, weights=[0.5, 0.5])


def test_transport_plan_feasibility_flags():
    plan = TransportPlan(np.array([[0.5, 0.0], [0.0, 0.5]]), np.array([0.5, 0.5]), np.array([0.5, 0.5]))
    assert plan.is_feasible()
    bad = TransportPlan(np.array([[0.6, 0.0], [0.0, 0.5]]), np.array([0.5, 0.5]), np.array([0.5, 0.5]))
    assert not bad.is_feasible()


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 9), m=st.integers(1, 9), noise=st.floats(0, 0.5))
def test_round_to_marginals_is_exactly_feasible(seed, n, m, noise):
    from graphon_aug.ot import round_to_marginals

    rng = np.random.default_rng(seed)
    mu, nu = rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(m))
    t = np.outer(mu, nu) * (1 + noise * rng.uniform(-1, 1, size=(n, m)))
    r = round_to_marginals(t, mu, nu)
    assert r.min() >= 0
    assert np.abs(r.sum(axis=1) - mu).max() <= 1e-12
    assert np.abs(r.sum(axis=0) - nu).max() <= 1e-12
