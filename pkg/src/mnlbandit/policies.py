"""Assortment-selection policies and the MLE machinery the baselines need.

The constant-per-round policy scores items by optimistic utility (estimate
plus ellipsoid bonus) and hands the scores to an assortment optimizer.  The
UCB and Thompson-sampling baselines refit a regularized MLE on the full
history every round, which is what makes their per-round cost grow with t.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from .assortment import brute_force_search, threshold_search, top_k_by_utility
from .choice import (
    OUTSIDE,
    Assortment,
    clipped_utilities,
    revenue_of_utilities,
)
from .estimator import bonuses, init_estimator, project_ball, step


@dataclass(frozen=True)
class PolicyDecision:
    """Chosen assortment plus the optimistic scores that justified it."""

    assortment: Assortment
    optimistic_utilities: np.ndarray
    optimistic_revenue: float


def _decision(items, alphas, rewards, v0, k):
    items = np.asarray(items, dtype=np.int64)
    rev = revenue_of_utilities(alphas[items], np.asarray(rewards)[items], v0)
    return PolicyDecision(
        assortment=Assortment(items=items, capacity=k),
        optimistic_utilities=alphas,
        optimistic_revenue=rev,
    )


def select_uniform(state, features, v0, k):
    """Top-k items by optimistic utility; exact when all rewards equal 1."""
    features = np.asarray(features)
    if features.shape[0] < 1:
        raise ValueError("need at least one item")
    alphas = features @ state.w + bonuses(state, features)
    items = top_k_by_utility(alphas, k)
    return _decision(items, alphas, np.ones(features.shape[0]), v0, k)


def select_nonuniform(state, features, rewards, v0, k):
    """Optimistic revenue maximization for general rewards in [0, 1]."""
    features = np.asarray(features)
    alphas = features @ state.w + bonuses(state, features)
    items, _ = threshold_search(alphas, rewards, v0, k)
    return _decision(items, alphas, rewards, v0, k)


def brute_force_best(features, w, rewards, v0, k):
    """Exhaustive true-revenue maximizer (guarded to small instances)."""
    utilities = clipped_utilities(np.asarray(features), np.asarray(w))
    items, _ = brute_force_search(utilities, rewards, v0, k)
    return Assortment(items=items, capacity=k)


# ---------------------------------------------------------------------------
# Full-history MLE and the baselines built on it
# ---------------------------------------------------------------------------


class ChoiceHistory:
    """Append-only store of observed rounds, padded for vectorized refits."""

    def __init__(self, d, k_max, capacity=64):
        self.d = d
        self.k_max = k_max
        self._feats = np.zeros((capacity, k_max, d))
        self._mask = np.zeros((capacity, k_max), dtype=bool)
        self._chosen = np.zeros(capacity, dtype=np.int64)
        self._len = 0

    def __len__(self):
        return self._len

    def _grow(self):
        cap = self._feats.shape[0] * 2
        self._feats = np.concatenate([self._feats, np.zeros_like(self._feats)])
        self._mask = np.concatenate([self._mask, np.zeros_like(self._mask)])
        self._chosen = np.concatenate([self._chosen, np.zeros_like(self._chosen)])
        assert self._feats.shape[0] == cap

    def append(self, offered_features, chosen):
        """Record one round: the offered feature rows and the chosen position."""
        if self._len == self._feats.shape[0]:
            self._grow()
        m = offered_features.shape[0]
        if m > self.k_max:
            raise ValueError(f"round offered {m} items, capacity is {self.k_max}")
        i = self._len
        self._feats[i, :m] = offered_features
        self._feats[i, m:] = 0.0
        self._mask[i, :m] = True
        self._mask[i, m:] = False
        self._chosen[i] = chosen
        self._len += 1

    @classmethod
    def from_rounds(cls, rounds, d, k_max):
        """Build from (offered_features, chosen) tuples, mainly for tests."""
        hist = cls(d, k_max, capacity=max(len(rounds), 1))
        for feats, chosen in rounds:
            hist.append(np.asarray(feats, dtype=np.float64), chosen)
        return hist

    def views(self):
        n = self._len
        return self._feats[:n], self._mask[:n], self._chosen[:n]


def _history_probs(w, feats, mask, v0):
    t, k_max, d = feats.shape
    z = (feats.reshape(t * k_max, d) @ w).reshape(t, k_max)
    z = np.where(mask, z, -np.inf)
    shift = np.maximum(z.max(axis=1), math.log(v0))
    e = np.exp(z - shift[:, None])
    denom0 = np.exp(math.log(v0) - shift)
    denom = denom0 + e.sum(axis=1)
    return z, e / denom[:, None], shift + np.log(denom)


def _history_nll(w, feats, mask, chosen, v0, lambda0):
    """Objective value at ``w``; also returns the choice probabilities."""
    t, k_max, _ = feats.shape
    z, p, log_denom = _history_probs(w, feats, mask, v0)
    picked = chosen >= 0
    z_choice = np.where(
        picked, z[np.arange(t), np.clip(chosen, 0, k_max - 1)], math.log(v0)
    )
    nll = float(np.sum(log_denom - z_choice)) + 0.5 * lambda0 * float(w @ w)
    return nll, p


def _history_grad(w, p, feats, chosen, lambda0):
    rows = np.flatnonzero(chosen >= 0)
    residual = p.copy()
    residual[rows, chosen[rows]] -= 1.0
    flat = feats.reshape(-1, feats.shape[2])
    return residual.reshape(-1) @ flat + lambda0 * w


def _history_hess(p, feats, lambda0):
    d = feats.shape[2]
    flat = feats.reshape(-1, d)
    hess = (flat * p.reshape(-1)[:, None]).T @ flat
    q = (p[:, None, :] @ feats).reshape(-1, d)
    hess -= q.T @ q
    return hess + lambda0 * np.eye(d)


def mle_fit(history, v0, lambda0, w0=None, grad_tol=1e-8, max_iter=50):
    """Regularized maximum-likelihood fit over the whole history.

    Damped Newton with Armijo backtracking on the objective
    lambda0 ||w||^2 / 2 + sum of per-round choice losses.  Stops when the
    gradient norm drops below ``grad_tol`` or after ``max_iter`` iterations;
    the final iterate is clipped onto the unit ball either way.

    Returns ``(w, converged)``.
    """
    feats, mask, chosen = history.views()
    if len(history) == 0:
        raise ValueError("history is empty")
    d = history.d
    w = np.zeros(d) if w0 is None else np.asarray(w0, dtype=np.float64).copy()
    converged = False
    nll, p = _history_nll(w, feats, mask, chosen, v0, lambda0)
    for _ in range(max_iter):
        grad = _history_grad(w, p, feats, chosen, lambda0)
        if np.linalg.norm(grad) < grad_tol:
            converged = True
            break
        hess = _history_hess(p, feats, lambda0)
        try:
            c, low = cho_factor(hess, check_finite=False)
            direction = -cho_solve((c, low), grad, check_finite=False)
        except np.linalg.LinAlgError:
            direction = -grad
        slope = float(grad @ direction)
        # Backtracking on the objective value only; near the optimum the
        # Armijo decrement can fall below float resolution, so a step that
        # does not measurably increase the objective is accepted too.
        step_size = 1.0
        float_slack = 1e-15 * max(abs(nll), 1.0)
        accepted = False
        for _ in range(20):
            cand = w + step_size * direction
            cand_nll, cand_p = _history_nll(cand, feats, mask, chosen, v0, lambda0)
            if cand_nll <= nll + 1e-4 * step_size * slope or cand_nll <= nll + float_slack:
                accepted = True
                break
            step_size *= 0.5
        if not accepted:
            break
        w, nll, p = cand, cand_nll, cand_p
    if not converged:
        grad = _history_grad(w, p, feats, chosen, lambda0)
        converged = bool(np.linalg.norm(grad) < grad_tol)
    return project_ball(w, np.eye(d)), converged


@dataclass
class BaselineState:
    """Shared state of the MLE-based baselines.

    ``V`` is the regularized design matrix lambda0*I + sum of x x^T over all
    offered items so far; ``history`` holds every observed round.
    """

    d: int
    k_max: int
    v0: float
    lambda0: float = 1.0
    w_hat: np.ndarray = None
    V: np.ndarray = None
    history: ChoiceHistory = None
    t: int = 1
    flagged_rounds: list = field(default_factory=list)

    def __post_init__(self):
        if self.w_hat is None:
            self.w_hat = np.zeros(self.d)
        if self.V is None:
            self.V = self.lambda0 * np.eye(self.d)
        if self.history is None:
            self.history = ChoiceHistory(self.d, self.k_max)

    def refit(self):
        """Refit the MLE on the full history, keeping the old estimate on failure."""
        if len(self.history) == 0:
            return
        w, converged = mle_fit(self.history, self.v0, self.lambda0, w0=self.w_hat)
        if converged:
            self.w_hat = w
        else:
            self.flagged_rounds.append(self.t)

    def observe(self, offered_features, chosen):
        self.history.append(offered_features, chosen)
        self.V = self.V + offered_features.T @ offered_features
        self.t += 1


def _design_bonus(V, features):
    c, low = cho_factor(V, check_finite=False)
    solved = cho_solve((c, low), features.T, check_finite=False)
    return np.sqrt(np.maximum(np.einsum("nd,dn->n", features, solved), 0.0))


def _optimize(alphas, rewards, v0, k):
    rewards = np.asarray(rewards, dtype=np.float64)
    if np.all(rewards == 1.0):
        return top_k_by_utility(alphas, k)
    items, _ = threshold_search(alphas, rewards, v0, k)
    return items


def ucb_mnl_select(baseline_state, features, rewards, v0, k, c_ucb=1.0):
    """UCB baseline: MLE utilities plus c_ucb * sqrt(log t) design bonuses."""
    features = np.asarray(features)
    width = c_ucb * math.sqrt(max(math.log(baseline_state.t), 0.0))
    alphas = features @ baseline_state.w_hat + width * _design_bonus(
        baseline_state.V, features
    )
    items = _optimize(alphas, rewards, v0, k)
    return _decision(items, alphas, rewards, v0, k)


def ts_mnl_select(baseline_state, features, rewards, v0, k, rng, a=1.0):
    """Thompson baseline: utilities at a Gaussian perturbation of the MLE."""
    features = np.asarray(features)
    chol = np.linalg.cholesky(baseline_state.V)
    noise = solve_triangular(chol.T, rng.standard_normal(baseline_state.d), lower=False)
    w_tilde = baseline_state.w_hat + a * noise
    alphas = features @ w_tilde
    items = _optimize(alphas, rewards, v0, k)
    return _decision(items, alphas, rewards, v0, k)


# ---------------------------------------------------------------------------
# Policy objects the simulation harness drives
# ---------------------------------------------------------------------------


class OmdUcbPolicy:
    """Optimistic policy on top of the constant-per-round online estimator."""

    name = "omd-ucb"

    def __init__(self, d, k_max, delta, beta_scale=1.0):
        self.state = init_estimator(d, k_max, delta, beta_scale)

    def decide(self, features, rewards, v0, k):
        if np.all(np.asarray(rewards) == 1.0):
            return select_uniform(self.state, features, v0, k)
        return select_nonuniform(self.state, features, rewards, v0, k)

    def observe(self, assortment, features, feedback, v0):
        self.state = step(self.state, assortment, features, feedback, v0)


class UcbMnlPolicy:
    """Full-history MLE with design-matrix confidence widths."""

    name = "ucb-mnl"

    def __init__(self, d, k_max, v0, c_ucb=1.0, lambda0=1.0):
        self.baseline = BaselineState(d=d, k_max=k_max, v0=v0, lambda0=lambda0)
        self.c_ucb = c_ucb

    def decide(self, features, rewards, v0, k):
        self.baseline.refit()
        return ucb_mnl_select(self.baseline, features, rewards, v0, k, self.c_ucb)

    def observe(self, assortment, features, feedback, v0):
        self.baseline.observe(np.asarray(features)[assortment.items], feedback)


class TsMnlPolicy:
    """Full-history MLE with posterior-style Gaussian sampling."""

    name = "ts-mnl"

    def __init__(self, d, k_max, v0, rng, a=1.0, lambda0=1.0):
        self.baseline = BaselineState(d=d, k_max=k_max, v0=v0, lambda0=lambda0)
        self.a = a
        self.rng = rng

    def decide(self, features, rewards, v0, k):
        self.baseline.refit()
        return ts_mnl_select(
            self.baseline, features, rewards, v0, k, self.rng, self.a
        )

    def observe(self, assortment, features, feedback, v0):
        self.baseline.observe(np.asarray(features)[assortment.items], feedback)


class OraclePolicy:
    """Plays the true-parameter optimum; zero regret by construction."""

    name = "oracle"

    def __init__(self, w_star):
        self.w_star = np.asarray(w_star)

    def decide(self, features, rewards, v0, k):
        utilities = clipped_utilities(np.asarray(features), self.w_star)
        items = _optimize(utilities, rewards, v0, k)
        return _decision(items, utilities, rewards, v0, k)

    def observe(self, assortment, features, feedback, v0):
        pass


class RandomPolicy:
    """Uniformly random size-k assortment; linear-regret sanity baseline."""

    name = "random"

    def __init__(self, rng):
        self.rng = rng

    def decide(self, features, rewards, v0, k):
        n = np.asarray(features).shape[0]
        items = np.sort(self.rng.choice(n, size=min(k, n), replace=False))
        alphas = np.zeros(n)
        return _decision(items, alphas, rewards, v0, k)

    def observe(self, assortment, features, feedback, v0):
        pass
