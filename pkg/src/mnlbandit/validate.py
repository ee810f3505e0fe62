"""Quick property and oracle spot checks behind the CLI ``validate`` command.

These are abbreviated versions of the test-suite checks, meant to verify an
installation in seconds.  Each check prints one PASS/FAIL line.
"""

import numpy as np

from .assortment import brute_force_search, threshold_search
from .choice import Assortment, choice_probabilities, loss_gradient, loss_hessian, mnl_loss
from .estimator import project_ball
from .harness import ExperimentConfig, run_diagnostic_cell


def _random_case(rng, n_max=8, d_max=6):
    n = int(rng.integers(2, n_max))
    d = int(rng.integers(2, d_max))
    size = int(rng.integers(1, n + 1))
    feats = rng.uniform(-1, 1, size=(n, d))
    feats /= np.maximum(np.linalg.norm(feats, axis=1, keepdims=True), 1.0)
    w = rng.uniform(-1, 1, size=d)
    w /= max(np.linalg.norm(w), 1.0)
    items = np.sort(rng.choice(n, size=size, replace=False))
    v0 = float(rng.uniform(0.3, 3.0))
    return Assortment(items=items, capacity=n), feats, w, v0


def check_normalization(rng, cases=2000):
    worst = 0.0
    for _ in range(cases):
        assortment, feats, w, v0 = _random_case(rng)
        dist = choice_probabilities(assortment, feats, w, v0)
        worst = max(worst, abs(dist.p_outside + dist.p_items.sum() - 1.0))
    return worst < 1e-12, f"normalization gap {worst:.2e}"


def check_gradient(rng, cases=25):
    worst = 0.0
    for _ in range(cases):
        assortment, feats, w, v0 = _random_case(rng)
        feedback = int(rng.integers(-1, len(assortment)))
        g = loss_gradient(w, assortment, feats, feedback, v0)
        fd = np.zeros_like(g)
        h = 1e-6
        for j in range(w.size):
            e = np.zeros_like(w)
            e[j] = h
            fd[j] = (
                mnl_loss(w + e, assortment, feats, feedback, v0)
                - mnl_loss(w - e, assortment, feats, feedback, v0)
            ) / (2 * h)
        worst = max(worst, np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-12))
    return worst < 1e-5, f"gradient rel err {worst:.2e}"


def check_hessian_psd(rng, cases=200):
    worst = np.inf
    for _ in range(cases):
        assortment, feats, w, v0 = _random_case(rng)
        eigs = np.linalg.eigvalsh(loss_hessian(w, assortment, feats, v0))
        worst = min(worst, eigs.min())
    return worst >= -1e-10, f"min Hessian eigenvalue {worst:.2e}"


def check_projection(rng, cases=200):
    worst = 0.0
    for _ in range(cases):
        d = int(rng.integers(2, 7))
        a = rng.uniform(-1, 1, size=(d, d))
        metric = a @ a.T + 0.1 * np.eye(d)
        w_prime = rng.uniform(-3, 3, size=d)
        w, mu = project_ball(w_prime, metric, return_multiplier=True)
        if np.linalg.norm(w) > 1 + 1e-9:
            return False, "projection left the ball"
        residual = np.linalg.norm(metric @ (w - w_prime) + mu * w)
        worst = max(worst, residual)
    return worst < 1e-6, f"max KKT residual {worst:.2e}"


def check_optimizer(rng, cases=50):
    worst = 0.0
    for _ in range(cases):
        n = int(rng.integers(2, 11))
        k = int(rng.integers(1, 5))
        utilities = rng.uniform(-1, 1, size=n)
        rewards = rng.uniform(0, 1, size=n)
        v0 = float(rng.uniform(0.5, 2.0))
        _, rev = threshold_search(utilities, rewards, v0, k)
        _, rev_bf = brute_force_search(utilities, rewards, v0, k)
        worst = max(worst, abs(rev - rev_bf))
    return worst < 1e-8, f"optimizer vs exhaustive gap {worst:.2e}"


def check_potentials(seed):
    config = ExperimentConfig(
        d=3,
        n_items=15,
        k=4,
        t_rounds=300,
        v0=1.0,
        reward_mode="uniform",
        policies=("omd-ucb",),
        num_instances=1,
        base_seed=seed,
        out_path="unused.csv",
    )
    _, report = run_diagnostic_cell(config, seed)
    return report.all_ok, (
        f"potentials {report.weighted_lhs:.3f}<={report.weighted_rhs:.3f}, "
        f"movement {report.max_step_movement:.4f}<={report.movement_bound:.4f}"
    )


def run_validation_suite(seed=0):
    rng = np.random.default_rng(seed)
    checks = [
        ("probability normalization", lambda: check_normalization(rng)),
        ("gradient finite differences", lambda: check_gradient(rng)),
        ("Hessian positive semidefinite", lambda: check_hessian_psd(rng)),
        ("ball projection KKT", lambda: check_projection(rng)),
        ("assortment optimizer exactness", lambda: check_optimizer(rng)),
        ("elliptical potentials / movement", lambda: check_potentials(seed)),
    ]
    failures = []
    for name, fn in checks:
        ok, detail = fn()
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        if not ok:
            failures.append(name)
    return failures
