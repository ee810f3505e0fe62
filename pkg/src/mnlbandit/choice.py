"""Multinomial-logit choice model: probabilities, revenue, sampling, loss.

Everything in this module is a pure function of its inputs.  The convention
throughout is that an assortment offers a subset of the rows of an (N, d)
feature matrix, the buyer picks one offered item or the outside option, and
the outside option carries a known attraction weight ``v0 > 0``.
"""

from dataclasses import dataclass

import numpy as np

# Sentinel for the outside ("buy nothing") outcome in choice feedback.
OUTSIDE = -1

# Utilities are clamped here before exponentiation.  Inputs within the model's
# norm bounds (feature and parameter norms <= 1) stay far inside this range;
# the clamp only guards against garbage inputs producing silent NaNs.
UTILITY_CLIP = 50.0


@dataclass(frozen=True)
class Assortment:
    """An ordered set of item indices of size at most ``capacity``.

    Indices are strictly increasing (canonical order) with no duplicates.
    """

    items: np.ndarray
    capacity: int

    def __post_init__(self):
        items = np.asarray(self.items, dtype=np.int64)
        object.__setattr__(self, "items", items)
        if items.ndim != 1 or items.size < 1:
            raise ValueError("assortment must contain at least one item")
        if items.size > self.capacity:
            raise ValueError(
                f"assortment size {items.size} exceeds capacity {self.capacity}"
            )
        if items.size > 1 and not np.all(np.diff(items) > 0):
            raise ValueError("assortment indices must be strictly increasing")
        if items[0] < 0:
            raise ValueError("assortment indices must be nonnegative")

    def __len__(self):
        return int(self.items.size)


@dataclass(frozen=True)
class ChoiceDistribution:
    """Choice probabilities over one assortment plus the outside option."""

    p_outside: float
    p_items: np.ndarray

    def __post_init__(self):
        p_items = np.asarray(self.p_items, dtype=np.float64)
        object.__setattr__(self, "p_items", p_items)
        total = self.p_outside + p_items.sum()
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {total}, not 1")
        if self.p_outside < 0.0 or np.any(p_items < 0.0) or np.any(p_items > 1.0):
            raise ValueError("probabilities must lie in [0, 1]")


def _validate_v0(v0):
    if not v0 > 0.0:
        raise ValueError(f"outside-option weight v0 must be positive, got {v0}")


def clipped_utilities(features, w):
    """Item utilities x_i . w, clamped to the safe exponentiation range."""
    u = features @ w
    # Norm-bounded inputs can never reach the clip; fail loudly in debug runs
    # rather than silently saturating.
    assert np.all(np.abs(u) <= UTILITY_CLIP) or np.any(
        np.linalg.norm(np.atleast_2d(features), axis=-1) > 1.0
    ) or np.linalg.norm(w) > 1.0, "utility clamp fired on norm-bounded inputs"
    return np.clip(u, -UTILITY_CLIP, UTILITY_CLIP)


def softmax_with_outside(utilities, v0):
    """Stable softmax over item utilities with an outside weight ``v0``.

    Returns ``(p_items, p_outside)``.  The outside option behaves like a
    virtual item of utility log(v0); the max-shift keeps every exponential
    in range so unnormalized weights are never materialized.
    """
    u0 = np.log(v0)
    shift = max(float(np.max(utilities, initial=-np.inf)), u0)
    e = np.exp(utilities - shift)
    e0 = np.exp(u0 - shift)
    denom = e0 + e.sum()
    return e / denom, e0 / denom


def choice_probabilities(assortment, features, w, v0):
    """Choice distribution of one round: exp(x_i.w) against v0 + sum exp."""
    _validate_v0(v0)
    feats = np.asarray(features)[assortment.items]  # raises IndexError if invalid
    u = clipped_utilities(feats, np.asarray(w))
    p_items, p_outside = softmax_with_outside(u, v0)
    return ChoiceDistribution(p_outside=float(p_outside), p_items=p_items)


def expected_revenue(assortment, features, w, rewards, v0):
    """Expected revenue sum_i p(i | S, w) * r_i of an offered assortment."""
    dist = choice_probabilities(assortment, features, w, v0)
    r = np.asarray(rewards)[assortment.items]
    return float(dist.p_items @ r)


def revenue_of_utilities(utilities, rewards, v0):
    """Expected revenue when item utilities are given directly."""
    p_items, _ = softmax_with_outside(
        np.clip(utilities, -UTILITY_CLIP, UTILITY_CLIP), v0
    )
    return float(p_items @ np.asarray(rewards))


def sample_choice(dist, rng):
    """Draw one outcome: a position into the assortment, or ``OUTSIDE``.

    Deterministic given the generator state.
    """
    u = rng.random()
    cum = np.cumsum(dist.p_items)
    if u < cum[-1]:
        return int(np.searchsorted(cum, u, side="right"))
    return OUTSIDE


def mnl_loss(w, assortment, features, feedback, v0):
    """Negative log-likelihood of the observed choice.

    Includes the outside-option term, so the loss always equals
    -log(probability of the realized outcome).
    """
    dist = choice_probabilities(assortment, features, w, v0)
    if feedback == OUTSIDE:
        return float(-np.log(dist.p_outside))
    return float(-np.log(dist.p_items[feedback]))


def loss_gradient(w, assortment, features, feedback, v0):
    """Gradient of the choice loss: sum_i (p_i - y_i) x_i over offered items."""
    dist = choice_probabilities(assortment, features, w, v0)
    feats = np.asarray(features)[assortment.items]
    residual = dist.p_items.copy()
    if feedback != OUTSIDE:
        residual[feedback] -= 1.0
    return residual @ feats


def loss_hessian(w, assortment, features, v0):
    """Hessian of the choice loss.

    Equals sum_i p_i x_i x_i^T - sum_ij p_i p_j x_i x_j^T, the covariance of
    the offered features under the choice distribution (outside option at the
    origin), hence symmetric positive semidefinite.
    """
    dist = choice_probabilities(assortment, features, w, v0)
    feats = np.asarray(features)[assortment.items]
    p = dist.p_items
    mean = p @ feats
    h = (feats * p[:, None]).T @ feats - np.outer(mean, mean)
    return 0.5 * (h + h.T)


def hessian_from_probs(p_items, feats):
    """Hessian given precomputed item probabilities (hot-path variant)."""
    mean = p_items @ feats
    h = (feats * p_items[:, None]).T @ feats - np.outer(mean, mean)
    return 0.5 * (h + h.T)
