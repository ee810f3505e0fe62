"""Capacitated assortment optimizers for MNL revenue objectives.

Given per-item utilities u (so attraction weights are exp(u)) and rewards r,
these maximize sum_{i in S} exp(u_i) r_i / (v0 + sum_{j in S} exp(u_j)) over
nonempty sets of size at most K.  Uniform rewards reduce to a sort; the
general case uses a threshold characterization that is exact.
"""

import math
from itertools import combinations

import numpy as np

from .choice import UTILITY_CLIP

# Exhaustive search refuses instances with more candidate sets than this.
BRUTE_FORCE_LIMIT = 10**6


def top_k_by_utility(utilities, k):
    """Indices of the k largest utilities, lowest index first on ties."""
    utilities = np.asarray(utilities, dtype=np.float64)
    n = utilities.size
    if n < 1:
        raise ValueError("need at least one item")
    k_eff = min(k, n)
    order = np.lexsort((np.arange(n), -utilities))
    return np.sort(order[:k_eff])


def _select_at_threshold(weights, gains_base, theta, k):
    """Top-<=K items by positive part of exp(u_i) * (r_i - theta)."""
    gains = gains_base - theta * weights
    positive = np.flatnonzero(gains > 0.0)
    if positive.size == 0:
        return positive, 0.0
    if positive.size > k:
        sub = np.lexsort((positive, -gains[positive]))[:k]
        positive = positive[sub]
    return positive, float(gains[positive].sum())


def threshold_search(utilities, rewards, v0, k, tol=1e-10):
    """Exact revenue maximization over assortments of size 1..k.

    Bisects the candidate revenue theta on [0, 1]: theta is attainable iff
    the top-<=K positive parts of exp(u_i)(r_i - theta) sum to at least
    v0 * theta.  A short fixed-point polish afterwards pins the exact
    maximizing set rather than a 1e-10-close one.

    Returns ``(items, revenue)`` with items in canonical increasing order.
    """
    utilities = np.clip(np.asarray(utilities, dtype=np.float64), -UTILITY_CLIP, UTILITY_CLIP)
    rewards = np.asarray(rewards, dtype=np.float64)
    if utilities.size < 1:
        raise ValueError("need at least one item")
    weights = np.exp(utilities)
    gains_base = weights * rewards

    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        theta = 0.5 * (lo + hi)
        _, total = _select_at_threshold(weights, gains_base, theta, k)
        if total >= v0 * theta:
            lo = theta
        else:
            hi = theta

    def revenue_of(items):
        wsum = weights[items].sum()
        return float(gains_base[items].sum() / (v0 + wsum))

    items, _ = _select_at_threshold(weights, gains_base, lo, k)
    if items.size == 0:  # all rewards zero: any singleton earns the optimum 0
        return np.array([0], dtype=np.int64), 0.0
    best_rev = revenue_of(items)
    for _ in range(10):
        nxt, _ = _select_at_threshold(weights, gains_base, best_rev, k)
        if nxt.size == 0:
            break
        rev = revenue_of(nxt)
        if rev <= best_rev:
            break
        items, best_rev = nxt, rev
    return np.sort(items), best_rev


def brute_force_search(utilities, rewards, v0, k):
    """Exhaustive maximizer over all sets of size 1..k; lexicographic ties.

    Guarded: raises if the candidate family exceeds ``BRUTE_FORCE_LIMIT``.
    """
    utilities = np.clip(np.asarray(utilities, dtype=np.float64), -UTILITY_CLIP, UTILITY_CLIP)
    rewards = np.asarray(rewards, dtype=np.float64)
    n = utilities.size
    k_eff = min(k, n)
    total_sets = sum(math.comb(n, size) for size in range(1, k_eff + 1))
    if total_sets > BRUTE_FORCE_LIMIT:
        raise ValueError(
            f"instance too large for exhaustive search: {total_sets} candidate sets"
        )
    weights = np.exp(utilities)
    weighted_rewards = weights * rewards
    best_rev = -np.inf
    best = None
    for size in range(1, k_eff + 1):
        for subset in combinations(range(n), size):
            idx = list(subset)
            rev = weighted_rewards[idx].sum() / (v0 + weights[idx].sum())
            if rev > best_rev or (rev == best_rev and subset < best):
                best_rev = rev
                best = subset
    return np.array(best, dtype=np.int64), float(best_rev)
