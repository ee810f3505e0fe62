"""Problem-instance generators: synthetic benchmark and adversarial families.

The synthetic family redraws item features every round (clipped Gaussians)
around a hidden parameter sampled once per instance.  The adversarial
families use a fixed item universe built from subset-indicator features, with
uniform or two-level rewards; those are the instances whose regret is
provably hard for any policy.
"""

import json
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .choice import choice_probabilities

REWARD_MODES = ("uniform", "random", "adversarial")

# Seed-stream tags so parameter and per-round draws never collide.
_PARAM_STREAM = 2**31
_REWARD_STREAM = 2**31 + 1


@dataclass(frozen=True)
class MnlInstance:
    """A complete bandit environment, deterministic given its seed."""

    d: int
    n_items: int
    k: int
    t_rounds: int
    v0: float
    w_star: np.ndarray
    reward_mode: str
    seed: int
    fixed_features: np.ndarray = None
    fixed_rewards: np.ndarray = None

    def __post_init__(self):
        if np.linalg.norm(self.w_star) > 1.0 + 1e-12:
            raise ValueError("hidden parameter must lie in the unit ball")
        if self.reward_mode not in REWARD_MODES:
            raise ValueError(f"unknown reward mode {self.reward_mode!r}")

    def _round_rng(self, round_idx, tag=0):
        return np.random.default_rng([self.seed, tag, round_idx])

    def features_for_round(self, round_idx):
        """Feature matrix of one round; rows always have norm at most 1."""
        if self.fixed_features is not None:
            return self.fixed_features
        bound = 1.0 / math.sqrt(self.d)
        rng = self._round_rng(round_idx)
        x = rng.standard_normal((self.n_items, self.d))
        return np.clip(x, -bound, bound)

    def rewards_for_round(self, round_idx):
        if self.fixed_rewards is not None:
            return self.fixed_rewards
        if self.reward_mode == "uniform":
            return np.ones(self.n_items)
        rng = self._round_rng(round_idx, tag=_REWARD_STREAM)
        return rng.uniform(0.0, 1.0, size=self.n_items)


def synth_instance(d, n_items, k, t_rounds, v0, reward_mode, seed):
    """Benchmark instance: coordinate-uniform parameter, clipped-Gaussian features.

    Each coordinate of the hidden parameter is uniform on [-1/sqrt(d), 1/sqrt(d)],
    features are drawn standard normal per coordinate and clipped to the same
    range fresh every round, and non-uniform rewards are Uniform(0, 1) redrawn
    per round.
    """
    if min(d, n_items, k, t_rounds) < 1:
        raise ValueError("sizes must be positive")
    if reward_mode not in ("uniform", "random"):
        raise ValueError("synthetic instances support uniform or random rewards")
    bound = 1.0 / math.sqrt(d)
    rng = np.random.default_rng([seed, _PARAM_STREAM])
    w_star = rng.uniform(-bound, bound, size=d)
    return MnlInstance(
        d=d,
        n_items=n_items,
        k=k,
        t_rounds=t_rounds,
        v0=v0,
        w_star=w_star,
        reward_mode=reward_mode,
        seed=seed,
    )


@dataclass(frozen=True)
class AdversarialSpec:
    """Parameters of the hard fixed-universe construction.

    ``v_set`` is the support of the hidden parameter (size d/4, 0-indexed);
    every size-d/4 subset U of coordinates contributes K identical items with
    indicator features scaled by 1/sqrt(d).
    """

    d: int
    epsilon: float
    v_set: tuple
    k: int
    v0: float

    def __post_init__(self):
        if self.d % 4 != 0:
            raise ValueError(f"d must be divisible by 4, got {self.d}")
        cap = 1.0 / (self.d * math.sqrt(self.d))
        if not 0.0 < self.epsilon < cap:
            raise ValueError(
                f"epsilon must lie in (0, {cap:.6g}) for d={self.d}, got {self.epsilon}"
            )
        v_set = tuple(sorted(self.v_set))
        object.__setattr__(self, "v_set", v_set)
        if len(v_set) != self.d // 4 or len(set(v_set)) != len(v_set):
            raise ValueError(f"v_set must contain d/4 = {self.d // 4} distinct coordinates")
        if any(j < 0 or j >= self.d for j in v_set):
            raise ValueError("v_set coordinates out of range")


def default_adversarial_epsilon(d, k, v0, t_rounds, c_kl=1.0):
    """Hard-instance gap scale sqrt(d (v0+K)^2 / (144 c T v0 K))."""
    return math.sqrt(d * (v0 + k) ** 2 / (144.0 * c_kl * t_rounds * v0 * k))


def _adversarial_universe(spec):
    subsets = list(combinations(range(spec.d), spec.d // 4))
    features = np.zeros((spec.k * len(subsets), spec.d))
    scale = 1.0 / math.sqrt(spec.d)
    for block, subset in enumerate(subsets):
        row = np.zeros(spec.d)
        row[list(subset)] = scale
        features[block * spec.k : (block + 1) * spec.k] = row
    w = np.zeros(spec.d)
    w[list(spec.v_set)] = spec.epsilon
    return features, w, subsets


def lower_bound_instance(spec, t_rounds, seed=0):
    """Uniform-reward hard instance: K copies of every subset-indicator item."""
    features, w, _ = _adversarial_universe(spec)
    return MnlInstance(
        d=spec.d,
        n_items=features.shape[0],
        k=spec.k,
        t_rounds=t_rounds,
        v0=spec.v0,
        w_star=w,
        reward_mode="adversarial",
        seed=seed,
        fixed_features=features,
        fixed_rewards=np.ones(features.shape[0]),
    )


def nonuniform_lower_bound_instance(spec, t_rounds, seed=0):
    """Two-level-reward hard instance.

    The lowest-index item of maximal utility earns reward 1; every other item
    earns 1/(v0+1).  The optimum is then that single item.
    """
    features, w, _ = _adversarial_universe(spec)
    utilities = features @ w
    best = int(np.argmax(utilities))  # argmax returns the lowest maximizing index
    rewards = np.full(features.shape[0], 1.0 / (spec.v0 + 1.0))
    rewards[best] = 1.0
    return MnlInstance(
        d=spec.d,
        n_items=features.shape[0],
        k=spec.k,
        t_rounds=t_rounds,
        v0=spec.v0,
        w_star=w,
        reward_mode="adversarial",
        seed=seed,
        fixed_features=features,
        fixed_rewards=rewards,
    )


def kappa_star(instance, round_idx, optimal_assortment):
    """Nonlinearity of the optimal assortment: sum_i p_i * p_outside at w_star."""
    features = instance.features_for_round(round_idx)
    dist = choice_probabilities(
        optimal_assortment, features, instance.w_star, instance.v0
    )
    return float(dist.p_items.sum() * dist.p_outside)


def save_instance(instance, path):
    """Serialize an instance for replay (structured text, JSON schema)."""
    payload = {
        "d": instance.d,
        "n_items": instance.n_items,
        "k": instance.k,
        "t_rounds": instance.t_rounds,
        "v0": instance.v0,
        "reward_mode": instance.reward_mode,
        "seed": instance.seed,
        "w_star": instance.w_star.tolist(),
    }
    if instance.fixed_features is not None:
        payload["fixed_features"] = instance.fixed_features.tolist()
    if instance.fixed_rewards is not None:
        payload["fixed_rewards"] = instance.fixed_rewards.tolist()
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)


def load_instance(path):
    with open(path) as fh:
        payload = json.load(fh)
    for key in ("w_star", "fixed_features", "fixed_rewards"):
        if payload.get(key) is not None:
            payload[key] = np.asarray(payload[key], dtype=np.float64)
    return MnlInstance(**payload)
