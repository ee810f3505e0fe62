"""Instance-generator tests: bound compliance, adversarial structure, replay."""

import math
from itertools import combinations

import numpy as np
import pytest

from mnlbandit.choice import Assortment, expected_revenue
from mnlbandit.instances import (
    AdversarialSpec,
    MnlInstance,
    default_adversarial_epsilon,
    kappa_star,
    load_instance,
    lower_bound_instance,
    nonuniform_lower_bound_instance,
    save_instance,
    synth_instance,
)
from mnlbandit.policies import brute_force_best


class TestSynthInstance:
    def test_parameter_coordinate_range_and_norm(self):
        for seed in range(20):
            inst = synth_instance(4, 10, 3, 50, 1.0, "uniform", seed)
            assert np.all(np.abs(inst.w_star) <= 0.5)
            assert np.linalg.norm(inst.w_star) <= 1.0

    def test_feature_norms_bounded(self):
        inst = synth_instance(5, 30, 4, 20, 1.0, "random", 3)
        for t in range(1, 21):
            feats = inst.features_for_round(t)
            assert feats.shape == (30, 5)
            assert np.all(np.linalg.norm(feats, axis=1) <= 1.0 + 1e-12)
            assert np.all(np.abs(feats) <= 1 / math.sqrt(5) + 1e-12)

    def test_rewards_by_mode(self):
        uni = synth_instance(3, 8, 2, 5, 1.0, "uniform", 0)
        assert np.all(uni.rewards_for_round(1) == 1.0)
        rnd = synth_instance(3, 8, 2, 5, 1.0, "random", 0)
        r1, r2 = rnd.rewards_for_round(1), rnd.rewards_for_round(2)
        assert np.all((r1 >= 0) & (r1 <= 1))
        assert not np.array_equal(r1, r2)  # redrawn each round

    def test_same_seed_bitwise_identical_stream(self):
        a = synth_instance(4, 12, 3, 10, 1.0, "random", 11)
        b = synth_instance(4, 12, 3, 10, 1.0, "random", 11)
        np.testing.assert_array_equal(a.w_star, b.w_star)
        for t in (1, 5, 10):
            np.testing.assert_array_equal(a.features_for_round(t), b.features_for_round(t))
            np.testing.assert_array_equal(a.rewards_for_round(t), b.rewards_for_round(t))

    def test_round_access_is_order_free(self):
        inst = synth_instance(3, 6, 2, 10, 1.0, "random", 5)
        later = inst.features_for_round(7).copy()
        inst.features_for_round(1)
        np.testing.assert_array_equal(inst.features_for_round(7), later)

    def test_parameter_ball_enforced(self):
        with pytest.raises(ValueError):
            MnlInstance(
                d=2, n_items=3, k=2, t_rounds=5, v0=1.0,
                w_star=np.array([1.0, 1.0]), reward_mode="uniform", seed=0,
            )


class TestAdversarialSpec:
    def test_d_not_divisible_by_four(self):
        with pytest.raises(ValueError):
            AdversarialSpec(d=6, epsilon=0.01, v_set=(0,), k=2, v0=1.0)

    def test_epsilon_range(self):
        cap = 1.0 / (4 * 2.0)
        AdversarialSpec(d=4, epsilon=cap * 0.99, v_set=(0,), k=2, v0=1.0)
        with pytest.raises(ValueError):
            AdversarialSpec(d=4, epsilon=cap, v_set=(0,), k=2, v0=1.0)
        with pytest.raises(ValueError):
            AdversarialSpec(d=4, epsilon=0.0, v_set=(0,), k=2, v0=1.0)

    def test_default_epsilon_formula(self):
        eps = default_adversarial_epsilon(4, 3, 1.0, 3000)
        assert eps == pytest.approx(math.sqrt(4 * 16 / (144 * 3000 * 3)), rel=1e-12)


def enumerate_universe(d, k, epsilon=None, v_set=None, v0=1.0, t_rounds=100):
    if epsilon is None:
        epsilon = 0.5 / (d * math.sqrt(d))
    if v_set is None:
        v_set = tuple(range(d // 4))
    spec = AdversarialSpec(d=d, epsilon=epsilon, v_set=v_set, k=k, v0=v0)
    return spec, lower_bound_instance(spec, t_rounds)


class TestLowerBoundInstance:
    @pytest.mark.parametrize("d,k", [(4, 3), (8, 2)])
    def test_counts_and_norms(self, d, k):
        spec, inst = enumerate_universe(d, k)
        n_expected = k * math.comb(d, d // 4)
        assert inst.n_items == n_expected
        feats = inst.features_for_round(1)
        norms = np.linalg.norm(feats, axis=1)
        np.testing.assert_allclose(norms, math.sqrt((d // 4) / d), atol=1e-12)
        assert np.linalg.norm(inst.w_star) <= 1.0

    def test_d4_distinct_vectors(self):
        _, inst = enumerate_universe(4, 3)
        feats = inst.features_for_round(1)
        assert inst.n_items == 12
        distinct = np.unique(feats, axis=0)
        assert distinct.shape[0] == 4
        np.testing.assert_allclose(np.linalg.norm(distinct, axis=1), 0.5, atol=1e-14)

    def test_parameter_support(self):
        spec = AdversarialSpec(d=4, epsilon=0.1, v_set=(0,), k=2, v0=1.0)
        inst = lower_bound_instance(spec, 10)
        np.testing.assert_allclose(inst.w_star, [0.1, 0, 0, 0], atol=1e-15)

    def test_contexts_round_invariant(self):
        _, inst = enumerate_universe(4, 2)
        np.testing.assert_array_equal(
            inst.features_for_round(1), inst.features_for_round(99)
        )

    def test_inner_products_count_overlap(self):
        # x_U . w_V = epsilon * |U intersect V| / sqrt(d), all (U, V) at d=8
        d, k = 8, 2
        eps = 0.4 / (d * math.sqrt(d))
        subsets = list(combinations(range(d), d // 4))
        for v_set in subsets:
            spec = AdversarialSpec(d=d, epsilon=eps, v_set=v_set, k=k, v0=1.0)
            inst = lower_bound_instance(spec, 10)
            feats = inst.features_for_round(1)
            for block, u_set in enumerate(subsets):
                overlap = len(set(u_set) & set(v_set))
                got = feats[block * k] @ inst.w_star
                assert got == pytest.approx(eps * overlap / math.sqrt(d), abs=1e-15)


class TestNonuniformLowerBound:
    @pytest.mark.parametrize("v0,expected_gamma", [(1.0, 0.5), (3.0, 0.25)])
    def test_gamma(self, v0, expected_gamma):
        spec = AdversarialSpec(d=4, epsilon=0.05, v_set=(1,), k=2, v0=v0)
        inst = nonuniform_lower_bound_instance(spec, 10)
        rewards = inst.rewards_for_round(1)
        assert np.sum(rewards == 1.0) == 1
        others = rewards[rewards != 1.0]
        np.testing.assert_allclose(others, expected_gamma, atol=1e-15)

    def test_best_item_is_lowest_index_copy(self):
        spec = AdversarialSpec(d=4, epsilon=0.05, v_set=(1,), k=3, v0=1.0)
        inst = nonuniform_lower_bound_instance(spec, 10)
        feats = inst.features_for_round(1)
        utilities = feats @ inst.w_star
        maximal = np.flatnonzero(utilities == utilities.max())
        assert maximal.size == spec.k  # the K copies share the maximum
        best = int(np.flatnonzero(inst.rewards_for_round(1) == 1.0)[0])
        assert best == maximal.min()

    @pytest.mark.parametrize("d,k", [(4, 3), (8, 2)])
    def test_singleton_optimum(self, d, k):
        eps = 0.5 / (d * math.sqrt(d))
        spec = AdversarialSpec(d=d, epsilon=eps, v_set=tuple(range(d // 4)), k=k, v0=1.0)
        inst = nonuniform_lower_bound_instance(spec, 10)
        feats = inst.features_for_round(1)
        rewards = inst.rewards_for_round(1)
        best = brute_force_best(feats, inst.w_star, rewards, inst.v0, k)
        expected = int(np.flatnonzero(rewards == 1.0)[0])
        np.testing.assert_array_equal(best.items, [expected])

    def test_revenue_bounded_by_best_single_item_rate(self):
        # every assortment's revenue is at most m/(v0+m) with m the largest
        # attraction weight it contains; enumerated at d = 4
        d, k = 4, 2
        spec = AdversarialSpec(d=d, epsilon=0.05, v_set=(2,), k=k, v0=1.0)
        inst = nonuniform_lower_bound_instance(spec, 10)
        feats = inst.features_for_round(1)
        rewards = inst.rewards_for_round(1)
        weights = np.exp(feats @ inst.w_star)
        for size in (1, 2):
            for subset in combinations(range(inst.n_items), size):
                items = np.array(subset)
                a = Assortment(items=items, capacity=k)
                rev = expected_revenue(a, feats, inst.w_star, rewards, inst.v0)
                m = weights[items].max()
                assert rev <= m / (inst.v0 + m) + 1e-12


class TestKappaStar:
    def test_symmetric_logistic_point(self):
        inst = MnlInstance(
            d=2, n_items=1, k=1, t_rounds=5, v0=1.0,
            w_star=np.zeros(2), reward_mode="uniform", seed=0,
            fixed_features=np.zeros((1, 2)), fixed_rewards=np.ones(1),
        )
        a = Assortment(items=np.array([0]), capacity=1)
        assert kappa_star(inst, 1, a) == pytest.approx(0.25, abs=1e-15)

    @pytest.mark.parametrize("k", [2, 5, 9])
    def test_uniform_capacity_k(self, k):
        inst = MnlInstance(
            d=2, n_items=k, k=k, t_rounds=5, v0=1.0,
            w_star=np.zeros(2), reward_mode="uniform", seed=0,
            fixed_features=np.zeros((k, 2)), fixed_rewards=np.ones(k),
        )
        a = Assortment(items=np.arange(k), capacity=k)
        assert kappa_star(inst, 1, a) == pytest.approx(k / (k + 1) ** 2, abs=1e-14)

    def test_worst_case_rate_sweep(self):
        # kappa_star never exceeds sqrt(v0 K)/(v0 + K) on random instances
        rng = np.random.default_rng(14)
        for _ in range(100):
            d = int(rng.integers(2, 5))
            k = int(rng.integers(1, 7))
            n = int(rng.integers(k, 12))
            v0 = float(rng.uniform(0.3, 8.0))
            inst = synth_instance(d, n, k, 3, v0, "uniform", int(rng.integers(1e6)))
            feats = inst.features_for_round(1)
            best = brute_force_best(feats, inst.w_star, np.ones(n), v0, k)
            value = kappa_star(inst, 1, best)
            assert value <= math.sqrt(v0 * k) / (v0 + k) * (1 + 1e-9)


class TestSerialization:
    def test_round_trip_synth(self, tmp_path):
        inst = synth_instance(4, 9, 3, 25, 1.5, "random", 42)
        path = tmp_path / "inst.json"
        save_instance(inst, path)
        loaded = load_instance(path)
        np.testing.assert_array_equal(loaded.w_star, inst.w_star)
        assert (loaded.d, loaded.n_items, loaded.k) == (4, 9, 3)
        assert loaded.v0 == 1.5 and loaded.seed == 42
        for t in (1, 7):
            np.testing.assert_array_equal(
                loaded.features_for_round(t), inst.features_for_round(t)
            )
            np.testing.assert_array_equal(
                loaded.rewards_for_round(t), inst.rewards_for_round(t)
            )

    def test_round_trip_adversarial(self, tmp_path):
        spec = AdversarialSpec(d=4, epsilon=0.05, v_set=(0,), k=2, v0=2.0)
        inst = nonuniform_lower_bound_instance(spec, 10)
        path = tmp_path / "adv.json"
        save_instance(inst, path)
        loaded = load_instance(path)
        np.testing.assert_array_equal(
            loaded.features_for_round(3), inst.features_for_round(3)
        )
        np.testing.assert_array_equal(
            loaded.rewards_for_round(3), inst.rewards_for_round(3)
        )
