"""Shared test utilities: random model draws and stencil-based derivative checks."""

import math

import numpy as np

from mnlbandit.choice import Assortment, mnl_loss


def random_case(rng, n_max=8, d_max=6):
    """Random norm-bounded (assortment, features, parameter, v0) tuple."""
    n = int(rng.integers(2, n_max))
    d = int(rng.integers(2, d_max))
    feats = rng.uniform(-1, 1, size=(n, d))
    feats /= np.maximum(np.linalg.norm(feats, axis=1, keepdims=True), 1.0)
    w = rng.uniform(-1, 1, size=d)
    w /= max(np.linalg.norm(w), 1.0)
    size = int(rng.integers(1, n + 1))
    items = np.sort(rng.choice(n, size=size, replace=False))
    v0 = float(rng.uniform(0.3, 3.0))
    return Assortment(items=items, capacity=n), feats, w, v0


def third_derivative_bound_holds(rng, slack=1e-6):
    """One random-line check of |phi'''| <= 3 sqrt(2) |b| phi'' + slack.

    phi is the choice loss along w = a + s*b, differentiated with 5-point
    stencils at spacing 1e-2.
    """
    n = int(rng.integers(1, 7))
    d = int(rng.integers(2, 6))
    feats = rng.uniform(-1, 1, size=(n, d))
    feats /= np.maximum(np.linalg.norm(feats, axis=1, keepdims=True), 1.0)
    a = rng.uniform(-1, 1, size=d)
    a /= max(np.linalg.norm(a), 1.0)
    b = rng.uniform(-1, 1, size=d)
    b /= max(np.linalg.norm(b) / rng.uniform(0.2, 1.0), 1.0)  # random norm <= 1
    v0 = float(rng.uniform(0.5, 2.0))
    assortment = Assortment(items=np.arange(n), capacity=n)
    feedback = int(rng.integers(-1, n))

    def phi(s):
        return mnl_loss(a + s * b, assortment, feats, feedback, v0)

    h = 1e-2
    vals = np.array([phi(s) for s in (-2 * h, -h, 0.0, h, 2 * h)])
    second = (-vals[0] + 16 * vals[1] - 30 * vals[2] + 16 * vals[3] - vals[4]) / (
        12 * h * h
    )
    third = (-vals[0] + 2 * vals[1] - 2 * vals[3] + vals[4]) / (2 * h**3)
    return abs(third) <= 3 * math.sqrt(2) * np.linalg.norm(b) * second + slack
