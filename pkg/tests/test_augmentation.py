import numpy as np
import pytest
from hypothesis import given, strategies as st

import graphon_aug.augmentation as augmentation
from graphon_aug.augmentation import (
    SYNTH_PREFIX,
    AugmentationPlan,
    apportion,
    augment_dataset,
    derive_seed,
    round_half_up,
)
from graphon_aug.errors import ValidationError
from graphon_aug.estimators import EstimatorConfig
from graphon_aug.graph import GraphDataset, split_dataset
from graphon_aug.graphon import StepGraphon, sample_graph, sbm_graphon

FAST = EstimatorConfig(method="SAS", resolution=4)


def two_class_dataset(per_class=50, n_range=(8, 14), seed=0):
    rng = np.random.default_rng(seed)
    graphons = {0: StepGraphon([[0.2]]), 1: sbm_graphon([[0.7, 0.1], [0.1, 0.7]])}
    graphs = []
    for label, w in graphons.items():
        for j in range(per_class):
            n = int(rng.integers(*n_range))
            graphs.append(sample_graph(w, n, int(rng.integers(2**63)), graph_id=f"c{label}-{j}", label=label))
    return GraphDataset(tuple(graphs))


class TestApportion:
    @pytest.mark.parametrize(
        "total,counts,expected",
        [(10, [50, 50], [5, 5]), (1, [50, 50], [1, 0]), (7, [100] * 6, [2, 1, 1, 1, 1, 1]), (0, [3, 4], [0, 0]),
         (5, [0, 9], [0, 5]), (3, [1, 2], [1, 2])],
    )
    def test_examples(self, total, counts, expected):
        assert apportion(total, counts) == expected

    @pytest.mark.parametrize("total,counts", [(3, [0, 0]), (-1, [1]), (2, [1, -1]), (1, [])])
    def test_errors(self, total, counts):
        with pytest.raises(ValidationError):
            apportion(total, counts)

    @given(total=st.integers(0, 500), counts=st.lists(st.integers(0, 300), min_size=1, max_size=8).filter(any))
    def test_sum_and_quota_bounds(self, total, counts):
        out = apportion(total, counts)
        assert sum(out) == total
        quota = [total * c / sum(counts) for c in counts]
        assert all(q - 1 < o < q + 1 for o, q in zip(out, quota))


class TestSeeds:
    def test_splitmix_reference_value(self):
        # first output of the reference SplitMix64 generator seeded with 0
        assert derive_seed(0) == 0xE220A8397B1DCDAF

    def test_deterministic_and_distinct(self):
        seeds = {derive_seed(7, c, j) for c in range(5) for j in range(200)}
        assert len(seeds) == 1000
        assert derive_seed(7, 1, 2) == derive_seed(7, 1, 2)
        assert derive_seed(7, 1, 2) != derive_seed(7, 2, 1)

    def test_negative_seed_wraps(self):
        assert 0 <= derive_seed(-1, 0) < 2**64

    @pytest.mark.parametrize("x,expected", [(2.5, 3), (2.4999, 2), (0.5, 1), (10.0, 10)])
    def test_round_half_up(self, x, expected):
        assert round_half_up(x) == expected


class TestAugment:
    def test_rate_zero_identity(self):
        train = two_class_dataset(10)
        out, graphons = augment_dataset(train, AugmentationPlan(rate=0.0, method=FAST, seed=1))
        assert out == train
        assert sorted(graphons) == [0, 1]

    def test_hundred_graphs_ten_percent(self):
        train = two_class_dataset(50)
        out, _ = augment_dataset(train, AugmentationPlan(rate=0.10, method=FAST, seed=3))
        synth = [g for g in out if g.id.startswith(SYNTH_PREFIX)]
        assert len(synth) == 10
        assert sorted(g.label for g in synth) == [0] * 5 + [1] * 5
        assert out.graphs[: len(train)] == train.graphs

    def test_deterministic(self):
        train = two_class_dataset(20)
        plan = AugmentationPlan(rate=0.25, method=FAST, seed=11)
        assert augment_dataset(train, plan)[0] == augment_dataset(train, plan)[0]

    @pytest.mark.parametrize("rate", [0.01, 0.05, 0.1, 0.25, 0.37, 1.0])
    def test_size_and_class_distribution(self, rate):
        rng = np.random.default_rng(0)
        train = GraphDataset(tuple(g.with_label(0 if i < 31 else (1 if i < 52 else 2)) for i, g in
                                   enumerate(two_class_dataset(30).graphs)))
        out, _ = augment_dataset(train, AugmentationPlan(rate=rate, method=FAST, seed=2))
        total = round_half_up(rate * len(train))
        assert len(out) == len(train) + total
        synth = [g for g in out if g.id.startswith(SYNTH_PREFIX)]
        counts = [sum(g.label == c for g in synth) for c in (0, 1, 2)]
        assert counts == apportion(total, [31, 21, 8])

    def test_node_counts_come_from_class_sizes(self):
        train = two_class_dataset(20)
        out, _ = augment_dataset(train, AugmentationPlan(rate=1.0, method=FAST, seed=4))
        sizes = {c: {g.n for g in train if g.label == c} for c in (0, 1)}
        for g in out:
            if g.id.startswith(SYNTH_PREFIX):
                assert g.n in sizes[g.label]

    def test_synthetic_density_matches_graphon_mean(self):
        train = two_class_dataset(40, n_range=(30, 40))
        out, graphons = augment_dataset(train, AugmentationPlan(rate=2.0, method=FAST, seed=5))
        for c in (0, 1):
            dens = np.array([g.density() for g in out if g.id.startswith(SYNTH_PREFIX) and g.label == c])
            se = dens.std(ddof=1) / np.sqrt(dens.size)
            assert abs(dens.mean() - graphons[c].mean()) <= 4 * se

    def test_only_train_graphs_are_estimated(self, monkeypatch):
        data = two_class_dataset(20)
        train, test = split_dataset(data, 0.3, 0)
        seen = set()
        real = augmentation.estimate

        def spy(graphs, config):
            seen.update(g.id for g in graphs)
            return real(graphs, config)

        monkeypatch.setattr(augmentation, "estimate", spy)
        out, _ = augment_dataset(train, AugmentationPlan(rate=0.5, method=FAST, seed=0))
        assert seen <= train.ids and seen.isdisjoint(test.ids)
        assert out.ids.isdisjoint(test.ids)

    def test_reuses_supplied_graphons(self, monkeypatch):
        train = two_class_dataset(10)
        graphons = {0: StepGraphon([[1.0]]), 1: StepGraphon([[0.0]])}
        monkeypatch.setattr(augmentation, "estimate", lambda *a: pytest.fail("should not estimate"))
        out, used = augment_dataset(train, AugmentationPlan(rate=1.0, method=FAST), graphons=graphons)
        for g in out:
            if g.id.startswith(SYNTH_PREFIX):
                assert g.density() == (1.0 if g.label == 0 else 0.0) or g.n == 1

    def test_empty_class_rejected(self):
        with pytest.raises(ValidationError):
            augment_dataset(two_class_dataset(5), AugmentationPlan(rate=0.5, method=FAST), classes=[0, 1, 2])

    @pytest.mark.parametrize("kwargs", [{"rate": -0.1}, {"node_count_policy": "fixed"}])
    def test_plan_validation(self, kwargs):
        with pytest.raises(ValidationError):
            AugmentationPlan(**kwargs)
