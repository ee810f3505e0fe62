"""Simulation loop, regret/runtime accounting, diagnostics, and CSV output.

A cell is one (policy, instance seed) pair run for T rounds.  Cells are
independent: each owns its instance streams, policy state, and generators,
so an experiment is an embarrassingly parallel grid whose merged output is
deterministic up to wall-clock timing columns.
"""

import hashlib
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .assortment import threshold_search, top_k_by_utility
from .choice import (
    Assortment,
    choice_probabilities,
    clipped_utilities,
    expected_revenue,
    sample_choice,
)
from .estimator import in_confidence_set, inv_metric_norms_sq
from .instances import (
    AdversarialSpec,
    default_adversarial_epsilon,
    kappa_star,
    nonuniform_lower_bound_instance,
    synth_instance,
)
from .policies import (
    OmdUcbPolicy,
    OraclePolicy,
    RandomPolicy,
    TsMnlPolicy,
    UcbMnlPolicy,
)

ROWS_HEADER = "policy,seed,t,inst_regret,cum_regret,round_runtime_ns,assortment_size,in_confidence"
SUMMARY_HEADER = (
    "policy,k,v0,reward_mode,final_regret_mean,final_regret_std,"
    "runtime_first_decile_ns,runtime_last_decile_ns"
)

POLICY_NAMES = ("omd-ucb", "ucb-mnl", "ts-mnl", "oracle", "random")


@dataclass(frozen=True)
class RunRecord:
    policy: str
    seed: int
    t: int
    inst_regret: float
    cum_regret: float
    round_runtime_ns: int
    assortment_size: int
    in_confidence: int  # 1/0 for the online policy, -1 when not applicable


@dataclass(frozen=True)
class ExperimentConfig:
    d: int
    n_items: int
    k: int
    t_rounds: int
    v0: float
    reward_mode: str
    policies: tuple
    num_instances: int
    base_seed: int
    out_path: str
    delta: float = 0.05
    beta_scale: float = 1.0
    c_ucb: float = 1.0
    ts_a: float = 1.0
    lambda0: float = 1.0

    def __post_init__(self):
        if self.num_instances < 1 or self.t_rounds < 1:
            raise ValueError("num_instances and t_rounds must be at least 1")
        for name in self.policies:
            if name not in POLICY_NAMES:
                raise ValueError(f"unknown policy {name!r}; known: {POLICY_NAMES}")


_CONFIG_PARSERS = {
    "d": int,
    "n_items": int,
    "k": int,
    "t_rounds": int,
    "v0": float,
    "reward_mode": str,
    "policies": lambda s: tuple(p.strip() for p in s.split(",") if p.strip()),
    "num_instances": int,
    "base_seed": int,
    "delta": float,
    "beta_scale": float,
    "c_ucb": float,
    "ts_a": float,
    "lambda0": float,
    "out_path": str,
}


def load_config(path):
    """Parse a key = value config file (``#`` starts a comment)."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, _, val = line.partition("=")
            key = key.strip()
            if key not in _CONFIG_PARSERS:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = _CONFIG_PARSERS[key](val.strip())
    return ExperimentConfig(**values)


def _policy_tag(policy_name):
    digest = hashlib.blake2b(policy_name.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") % (2**31)


def build_instance(config, seed):
    """Instance for one cell; the same seed gives every policy the same world."""
    if config.reward_mode in ("uniform", "random"):
        return synth_instance(
            config.d,
            config.n_items,
            config.k,
            config.t_rounds,
            config.v0,
            config.reward_mode,
            seed,
        )
    if config.reward_mode == "adversarial":
        spec = AdversarialSpec(
            d=config.d,
            epsilon=default_adversarial_epsilon(
                config.d, config.k, config.v0, config.t_rounds
            ),
            v_set=tuple(range(config.d // 4)),
            k=config.k,
            v0=config.v0,
        )
        return nonuniform_lower_bound_instance(spec, config.t_rounds, seed=seed)
    raise ValueError(f"unknown reward mode {config.reward_mode!r}")


def make_policy(policy_name, config, instance, rng):
    if policy_name == "omd-ucb":
        return OmdUcbPolicy(config.d, config.k, config.delta, config.beta_scale)
    if policy_name == "ucb-mnl":
        return UcbMnlPolicy(config.d, config.k, config.v0, config.c_ucb, config.lambda0)
    if policy_name == "ts-mnl":
        return TsMnlPolicy(config.d, config.k, config.v0, rng, config.ts_a, config.lambda0)
    if policy_name == "oracle":
        return OraclePolicy(instance.w_star)
    if policy_name == "random":
        return RandomPolicy(rng)
    raise ValueError(f"unknown policy {policy_name!r}")


def optimal_assortment(features, w_star, rewards, v0, k):
    """Per-round optimum via the exact optimizers at the true utilities."""
    utilities = clipped_utilities(np.asarray(features), np.asarray(w_star))
    if np.all(np.asarray(rewards) == 1.0):
        items = top_k_by_utility(utilities, k)
    else:
        items, _ = threshold_search(utilities, rewards, v0, k)
    return Assortment(items=items, capacity=k)


@dataclass
class DiagnosticTrace:
    """Streaming accumulators for the estimator's potential inequalities."""

    d: int
    lam: float
    t: int = 0
    weighted_norm_sum: float = 0.0  # sum over rounds of sum_i p_i p_0 |x_i|^2_{H^-1}
    max_norm_sum: float = 0.0  # sum over rounds of max_i |x_i|^2_{H^-1}
    centered_norm_sum: float = 0.0  # centralized-feature variant
    kappa_hat: float = float("inf")  # realized min of p_i * p_0 over visited items
    kappa_star_per_round: list = field(default_factory=list)
    coverage_flags: list = field(default_factory=list)
    max_step_movement: float = 0.0
    movement_bound: float = 0.0


def _accumulate_diagnostics(trace, policy_state_before_H, state_after, assortment, features, v0):
    feats = np.asarray(features)[assortment.items]
    dist = choice_probabilities(assortment, features, state_after.w, v0)
    p = dist.p_items
    norms_sq = inv_metric_norms_sq(policy_state_before_H, feats)
    trace.t += 1
    trace.weighted_norm_sum += float((p * dist.p_outside) @ norms_sq)
    trace.max_norm_sum += float(norms_sq.max())
    centered = feats - p @ feats
    centered_sq = inv_metric_norms_sq(policy_state_before_H, centered)
    trace.centered_norm_sum += float(p @ centered_sq)
    trace.kappa_hat = min(trace.kappa_hat, float((p * dist.p_outside).min()))


@dataclass(frozen=True)
class DiagnosticReport:
    rounds: int
    weighted_lhs: float
    weighted_rhs: float
    max_lhs: float
    max_rhs: float
    centered_lhs: float
    centered_rhs: float
    kappa_hat: float
    kappa_star_max: float
    coverage_all_rounds: bool
    max_step_movement: float
    movement_bound: float

    @property
    def weighted_ok(self):
        return self.weighted_lhs <= self.weighted_rhs

    @property
    def max_ok(self):
        return self.max_lhs <= self.max_rhs

    @property
    def centered_ok(self):
        return self.centered_lhs <= self.centered_rhs

    @property
    def movement_ok(self):
        return self.max_step_movement <= self.movement_bound + 1e-9

    @property
    def all_ok(self):
        return self.weighted_ok and self.max_ok and self.centered_ok and self.movement_ok


def diagnostics(trace):
    """Turn a completed trace into bound comparisons (all must hold)."""
    log_term = np.log(1.0 + trace.t / (trace.d * trace.lam))
    base = 2.0 * trace.d * log_term
    kappa_hat = trace.kappa_hat if np.isfinite(trace.kappa_hat) else 1.0
    return DiagnosticReport(
        rounds=trace.t,
        weighted_lhs=trace.weighted_norm_sum,
        weighted_rhs=base,
        max_lhs=trace.max_norm_sum,
        max_rhs=base / kappa_hat,
        centered_lhs=trace.centered_norm_sum,
        centered_rhs=base,
        kappa_hat=kappa_hat,
        kappa_star_max=max(trace.kappa_star_per_round, default=0.0),
        coverage_all_rounds=bool(trace.coverage_flags) and all(trace.coverage_flags),
        max_step_movement=trace.max_step_movement,
        movement_bound=trace.movement_bound,
    )


def run_cell(config, policy_name, seed, collect_diagnostics=False):
    """Simulate one (policy, seed) cell for T rounds.

    Timing covers decide + update only; drawing the round's context, the
    oracle computation, and diagnostics run outside the timed region.

    Returns ``records`` or ``(records, trace)`` with diagnostics enabled.
    """
    instance = build_instance(config, seed)
    tag = _policy_tag(policy_name)
    feedback_rng = np.random.default_rng([seed, tag, 1])
    policy_rng = np.random.default_rng([seed, tag, 2])
    policy = make_policy(policy_name, config, instance, policy_rng)

    is_online = policy_name == "omd-ucb"
    trace = None
    if collect_diagnostics:
        if not is_online:
            raise ValueError("diagnostics require the online-estimator policy")
        trace = DiagnosticTrace(d=config.d, lam=policy.state.lam)
        # Movement bound 2*eta*||grad||_{H^-1} <= 2*eta*2/sqrt(lam) per step,
        # using H >= lam*I and gradient norm <= 2.
        trace.movement_bound = 4.0 * policy.state.eta / np.sqrt(policy.state.lam)

    records = []
    cum_regret = 0.0
    v0 = config.v0
    k = config.k
    for t in range(1, config.t_rounds + 1):
        features = instance.features_for_round(t)
        rewards = instance.rewards_for_round(t)

        in_conf = -1
        if is_online:
            in_conf = int(in_confidence_set(policy.state, instance.w_star))
        if collect_diagnostics:
            h_before = policy.state.H
            w_before = policy.state.w

        try:
            start = time.perf_counter_ns()
            decision = policy.decide(features, rewards, v0, k)
            decide_ns = time.perf_counter_ns() - start
            chosen_assortment = decision.assortment
            # environment feedback is drawn off the clock
            dist = choice_probabilities(chosen_assortment, features, instance.w_star, v0)
            feedback = sample_choice(dist, feedback_rng)
            start = time.perf_counter_ns()
            policy.observe(chosen_assortment, features, feedback, v0)
            elapsed = decide_ns + (time.perf_counter_ns() - start)
        except Exception as exc:  # noqa: BLE001 - abort the cell, keep the grid alive
            warnings.warn(f"cell ({policy_name}, seed={seed}) failed at t={t}: {exc}")
            records.append(
                RunRecord(policy_name, seed, t, float("nan"), cum_regret, -1, 0, -1)
            )
            break

        best = optimal_assortment(features, instance.w_star, rewards, v0, k)
        rev_best = expected_revenue(best, features, instance.w_star, rewards, v0)
        rev_chosen = expected_revenue(
            chosen_assortment, features, instance.w_star, rewards, v0
        )
        inst_regret = rev_best - rev_chosen
        cum_regret += inst_regret

        if collect_diagnostics:
            _accumulate_diagnostics(
                trace, h_before, policy.state, chosen_assortment, features, v0
            )
            trace.kappa_star_per_round.append(kappa_star(instance, t, best))
            trace.coverage_flags.append(bool(in_conf))
            diff = policy.state.w - w_before
            movement = float(np.sqrt(diff @ h_before @ diff))
            trace.max_step_movement = max(trace.max_step_movement, movement)

        records.append(
            RunRecord(
                policy=policy_name,
                seed=seed,
                t=t,
                inst_regret=inst_regret,
                cum_regret=cum_regret,
                round_runtime_ns=int(elapsed),
                assortment_size=len(chosen_assortment),
                in_confidence=in_conf,
            )
        )
    if collect_diagnostics:
        return records, trace
    return records


def _run_cell_task(args):
    config, policy_name, seed = args
    return run_cell(config, policy_name, seed)


def _format_row(rec):
    return (
        f"{rec.policy},{rec.seed},{rec.t},{rec.inst_regret!r},{rec.cum_regret!r},"
        f"{rec.round_runtime_ns},{rec.assortment_size},{rec.in_confidence}"
    )


def summarize(config, records):
    """Per-policy summary rows: final-regret stats and runtime deciles."""
    by_policy = {}
    for rec in records:
        by_policy.setdefault(rec.policy, []).append(rec)
    t_rounds = config.t_rounds
    first_cut = max(t_rounds // 10, 1)
    last_cut = t_rounds - first_cut
    lines = []
    for policy in sorted(by_policy):
        recs = by_policy[policy]
        finals = [r.cum_regret for r in recs if r.t == t_rounds]
        first = [r.round_runtime_ns for r in recs if r.t <= first_cut]
        last = [r.round_runtime_ns for r in recs if r.t > last_cut]
        mean = float(np.mean(finals))
        std = float(np.std(finals))
        lines.append(
            f"{policy},{config.k},{config.v0!r},{config.reward_mode},"
            f"{mean!r},{std!r},{float(np.mean(first))!r},{float(np.mean(last))!r}"
        )
    return lines


def summary_path_for(rows_path):
    rows_path = str(rows_path)
    stem = rows_path[:-4] if rows_path.endswith(".csv") else rows_path
    return stem + "_summary.csv"


def run_experiment(config, threads=1):
    """Run the full (policy x seed) grid and emit the rows and summary CSVs.

    Rows are sorted by (policy, seed, t); parallel and serial execution give
    identical output apart from the wall-clock timing columns.
    """
    seeds = [config.base_seed + i for i in range(config.num_instances)]
    tasks = [(config, p, s) for p in config.policies for s in seeds]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            all_records = list(pool.map(_run_cell_task, tasks, chunksize=1))
    else:
        all_records = [_run_cell_task(t) for t in tasks]
    records = [rec for cell in all_records for rec in cell]
    records.sort(key=lambda r: (r.policy, r.seed, r.t))

    rows_path = config.out_path
    try:
        with open(rows_path, "w") as fh:
            fh.write(ROWS_HEADER + "\n")
            for rec in records:
                fh.write(_format_row(rec) + "\n")
        summary_path = summary_path_for(rows_path)
        with open(summary_path, "w") as fh:
            fh.write(SUMMARY_HEADER + "\n")
            for line in summarize(config, records):
                fh.write(line + "\n")
    except OSError as exc:
        raise OSError(f"cannot write experiment output to {exc.filename!r}: {exc}") from exc
    return rows_path, summary_path


def run_diagnostic_cell(config, seed):
    """One online-policy cell with the diagnostic trace attached."""
    records, trace = run_cell(config, "omd-ucb", seed, collect_diagnostics=True)
    return records, diagnostics(trace)
