"""Constant-per-round online estimator for the MNL choice parameter.

One observed round costs O(|S| d^2 + d^3) regardless of how many rounds came
before: the running matrix H absorbs each round's loss curvature, and the
parameter moves by a single projected Newton-flavored gradient step in the
transient metric H + eta * curvature.
"""

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .choice import choice_probabilities, hessian_from_probs, loss_gradient


@dataclass(frozen=True)
class EstimatorState:
    """Value-type state of the online learner.

    ``w`` stays inside the unit ball; ``H`` is symmetric positive definite
    with smallest eigenvalue at least ``lam``; ``t`` counts observed rounds
    starting at 1.
    """

    w: np.ndarray
    H: np.ndarray
    t: int
    eta: float
    lam: float
    delta: float
    k_max: int
    beta_scale: float = 1.0


def init_estimator(d, k_max, delta, beta_scale=1.0):
    """Fresh estimator: eta = log(K+1)/2 + 2, lam = 84*sqrt(2)*d*eta, H = lam*I."""
    if d < 1 or k_max < 1:
        raise ValueError(f"need d >= 1 and k_max >= 1, got d={d}, k_max={k_max}")
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"confidence level delta must be in (0, 1], got {delta}")
    eta = 0.5 * math.log(k_max + 1) + 2.0
    lam = 84.0 * math.sqrt(2.0) * d * eta
    return EstimatorState(
        w=np.zeros(d),
        H=lam * np.eye(d),
        t=1,
        eta=eta,
        lam=lam,
        delta=delta,
        k_max=k_max,
        beta_scale=beta_scale,
    )


def project_ball(w_prime, metric, return_multiplier=False):
    """Projection of ``w_prime`` onto the unit ball in the ``metric`` norm.

    Minimizes (w - w')^T M (w - w') subject to ||w||_2 <= 1.  Interior points
    are returned unchanged.  On the boundary the stationarity condition
    M (w - w') + mu w = 0 gives w(mu) = (M + mu I)^{-1} M w' with ||w(mu)||
    strictly decreasing in mu, so the multiplier is found by safeguarded
    Newton iteration on the norm, to 1e-10.
    """
    w_prime = np.asarray(w_prime, dtype=np.float64)
    norm = np.linalg.norm(w_prime)
    if norm <= 1.0:
        return (w_prime, 0.0) if return_multiplier else w_prime

    metric = np.asarray(metric, dtype=np.float64)
    evals, q = np.linalg.eigh(metric)
    b = evals * (q.T @ w_prime)  # coordinates of M w' in the eigenbasis

    def norm_sq(mu):
        return float(np.sum((b / (evals + mu)) ** 2))

    # Bracket the root of ||w(mu)|| = 1: mu = 0 gives ||w'|| > 1 and the norm
    # decays like ||M w'|| / mu for large mu.
    lo, hi = 0.0, float(np.linalg.norm(b))
    while norm_sq(hi) > 1.0:
        hi *= 2.0
    mu = hi
    for _ in range(200):
        val = norm_sq(mu)
        err = math.sqrt(val) - 1.0
        if abs(err) <= 1e-10:
            break
        if val > 1.0:
            lo = mu
        else:
            hi = mu
        # Newton step on f(mu) = sum b_i^2/(e_i+mu)^2 - 1, fall back to bisection.
        deriv = -2.0 * float(np.sum(b**2 / (evals + mu) ** 3))
        mu_new = mu - (val - 1.0) / deriv
        mu = mu_new if lo < mu_new < hi else 0.5 * (lo + hi)
    w = q @ (b / (evals + mu))
    return (w, float(mu)) if return_multiplier else w


def gradient_from_dist(dist, feats, feedback):
    """Loss gradient sum_i (p_i - y_i) x_i given precomputed probabilities."""
    g = dist.p_items @ feats
    if feedback >= 0:
        g = g - feats[feedback]
    return g


def step(state, assortment, features, feedback, v0):
    """Advance the estimator by one observed round.

    Computes the loss gradient at the current parameter, takes one gradient
    step preconditioned by the transient matrix H + eta * curvature(w_t),
    projects back onto the unit ball in that metric, then folds the curvature
    at the new parameter into H.
    """
    feats = np.asarray(features)[assortment.items]
    dist = choice_probabilities(assortment, features, state.w, v0)
    g = gradient_from_dist(dist, feats, feedback)
    curvature_now = hessian_from_probs(dist.p_items, feats)
    h_tilde = state.H + state.eta * curvature_now
    try:
        c, low = cho_factor(h_tilde, check_finite=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - invariant breach
        raise RuntimeError("transient metric lost positive definiteness") from exc
    w_prime = state.w - state.eta * cho_solve((c, low), g, check_finite=False)
    w_next = project_ball(w_prime, h_tilde)
    dist_next = choice_probabilities(assortment, features, w_next, v0)
    h_next = state.H + hessian_from_probs(dist_next.p_items, feats)
    return replace(state, w=w_next, H=h_next, t=state.t + 1)


def confidence_radius(state):
    """Radius beta_t of the parameter confidence ellipsoid in the H_t norm.

    Closed form with explicit constants; strictly increasing in t and scaled
    by the ``beta_scale`` knob (1.0 keeps the theoretical constants).
    """
    t = state.t
    eta, lam, d = state.eta, state.lam, state.H.shape[0]
    k = state.k_max
    c = 7.0 * eta / 6.0
    bracket = (
        11.0
        * (3.0 * math.log(1.0 + (k + 1) * t) + 3.0)
        * math.log(2.0 * math.sqrt(1.0 + 2.0 * t) / state.delta)
        + 2.0
        + math.sqrt(6.0) * c * d * math.log(1.0 + (t + 1) / (2.0 * lam))
    )
    beta_prime = math.sqrt(2.0 * eta * bracket + 4.0 * lam)
    return state.beta_scale * (2.0 * eta / lam + beta_prime)


def in_confidence_set(state, w_star):
    """Whether ||w_t - w_star||_{H_t} <= beta_t (boundary included)."""
    diff = state.w - np.asarray(w_star)
    dist = math.sqrt(float(diff @ state.H @ diff))
    return dist <= confidence_radius(state)


def bonus(state, x):
    """Exploration bonus beta_t * ||x||_{H_t^{-1}} for one feature vector."""
    x = np.asarray(x, dtype=np.float64)
    c, low = cho_factor(state.H, check_finite=False)
    quad = float(x @ cho_solve((c, low), x, check_finite=False))
    return confidence_radius(state) * math.sqrt(max(quad, 0.0))


def bonuses(state, features):
    """Vectorized bonus for every row of an (N, d) feature matrix."""
    feats = np.asarray(features, dtype=np.float64)
    c, low = cho_factor(state.H, check_finite=False)
    solved = cho_solve((c, low), feats.T, check_finite=False)
    quads = np.maximum(np.einsum("nd,dn->n", feats, solved), 0.0)
    return confidence_radius(state) * np.sqrt(quads)


def inv_metric_norms_sq(H, feats):
    """Squared H^{-1}-norms ||x||^2_{H^{-1}} for each row of ``feats``."""
    c, low = cho_factor(H, check_finite=False)
    solved = cho_solve((c, low), feats.T, check_finite=False)
    return np.maximum(np.einsum("nd,dn->n", feats, solved), 0.0)
