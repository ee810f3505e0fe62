"""Figure rendering for benchmark CSVs: regret curves and runtime curves.

Input contract: the rows CSV written by the benchmark harness (exact header
below) plus its sibling ``*_summary.csv`` carrying the grouping metadata
(k, v0, reward_mode) and the reference statistics.  Rendering is
deterministic: fixed DPI, no timestamps, stable filenames.
"""

import csv
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

ROWS_HEADER = [
    "policy",
    "seed",
    "t",
    "inst_regret",
    "cum_regret",
    "round_runtime_ns",
    "assortment_size",
    "in_confidence",
]
SUMMARY_HEADER = [
    "policy",
    "k",
    "v0",
    "reward_mode",
    "final_regret_mean",
    "final_regret_std",
    "runtime_first_decile_ns",
    "runtime_last_decile_ns",
]

# Statistics recomputed here must match the harness summary to this tolerance.
STAT_TOLERANCE = 1e-9

DPI = 150

POLICY_COLORS = {
    "omd-ucb": "tab:blue",
    "ucb-mnl": "tab:orange",
    "ts-mnl": "tab:green",
    "oracle": "tab:gray",
    "random": "tab:red",
}


class SchemaError(ValueError):
    """Raised when a CSV does not carry the expected columns."""


@dataclass(frozen=True)
class FigureSpec:
    """What to render: input rows CSVs, output directory, options."""

    csv_paths: tuple
    out_dir: str
    window: int = 50
    band: bool = True
    policies: tuple = ()  # empty means every policy found


@dataclass
class CellData:
    """Parsed contents of one rows CSV plus its summary metadata."""

    k: int
    v0: float
    reward_mode: str
    t_rounds: int
    seeds: list = field(default_factory=list)
    cum_regret: dict = field(default_factory=dict)  # policy -> (seeds, T) array
    runtime_ns: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)  # policy -> summary row dict


def summary_path_for(rows_path):
    rows_path = str(rows_path)
    stem = rows_path[:-4] if rows_path.endswith(".csv") else rows_path
    return stem + "_summary.csv"


def _check_header(actual, expected, path):
    if list(actual) != expected:
        missing = sorted(set(expected) - set(actual or []))
        raise SchemaError(
            f"{path}: header mismatch; expected columns {expected}, got {actual}"
            + (f" (missing {missing})" if missing else "")
        )


def load_cell(rows_path):
    """Parse one rows CSV and its sibling summary into arrays."""
    summary_path = summary_path_for(rows_path)
    if not os.path.exists(rows_path):
        raise FileNotFoundError(rows_path)
    if not os.path.exists(summary_path):
        raise FileNotFoundError(
            f"{summary_path} (the harness writes it next to {rows_path})"
        )

    with open(summary_path) as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        _check_header(header, SUMMARY_HEADER, summary_path)
        summary = {}
        meta = None
        for row in reader:
            entry = dict(zip(SUMMARY_HEADER, row))
            summary[entry["policy"]] = entry
            meta = (int(entry["k"]), float(entry["v0"]), entry["reward_mode"])
    if not summary:
        raise SchemaError(f"{summary_path}: no policy rows")

    per_policy_seed = {}
    with open(rows_path) as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        _check_header(header, ROWS_HEADER, rows_path)
        for row in reader:
            policy, seed, t = row[0], int(row[1]), int(row[2])
            key = (policy, seed)
            per_policy_seed.setdefault(key, []).append(
                (t, float(row[4]), float(row[5]))
            )
    if not per_policy_seed:
        raise SchemaError(f"{rows_path}: no data rows")

    t_rounds = max(t for series in per_policy_seed.values() for t, _, _ in series)
    cell = CellData(
        k=meta[0], v0=meta[1], reward_mode=meta[2], t_rounds=t_rounds, summary=summary
    )
    policies = sorted({p for p, _ in per_policy_seed})
    cell.seeds = sorted({s for _, s in per_policy_seed})
    for policy in policies:
        cum = np.full((len(cell.seeds), t_rounds), np.nan)
        run = np.full((len(cell.seeds), t_rounds), np.nan)
        for si, seed in enumerate(cell.seeds):
            series = per_policy_seed.get((policy, seed))
            if series is None:
                continue
            for t, c, r in series:
                cum[si, t - 1] = c
                run[si, t - 1] = r
        cell.cum_regret[policy] = cum
        cell.runtime_ns[policy] = run
    return cell


def _crosscheck(cell, rows_path):
    """Recompute the summary statistics and insist they match the harness."""
    first_cut = max(cell.t_rounds // 10, 1)
    last_cut = cell.t_rounds - first_cut
    for policy, entry in cell.summary.items():
        if policy not in cell.cum_regret:
            raise SchemaError(f"{rows_path}: summary policy {policy!r} has no rows")
        finals = cell.cum_regret[policy][:, -1]
        run = cell.runtime_ns[policy]
        checks = [
            (float(entry["final_regret_mean"]), float(np.mean(finals))),
            (float(entry["final_regret_std"]), float(np.std(finals))),
            (
                float(entry["runtime_first_decile_ns"]),
                float(np.mean(run[:, :first_cut])),
            ),
            (
                float(entry["runtime_last_decile_ns"]),
                float(np.mean(run[:, last_cut:])),
            ),
        ]
        for reference, recomputed in checks:
            if abs(reference - recomputed) > STAT_TOLERANCE * max(1.0, abs(reference)):
                raise ValueError(
                    f"{rows_path}: recomputed statistic {recomputed!r} disagrees "
                    f"with harness summary {reference!r} for policy {policy!r}"
                )


def _format_v0(v0):
    return f"{v0:g}"


def _select_policies(cell, spec):
    policies = list(spec.policies) if spec.policies else sorted(cell.cum_regret)
    missing = [p for p in policies if p not in cell.cum_regret]
    if missing:
        raise ValueError(f"no data for policies {missing}")
    if not policies:
        raise ValueError("no data to plot")
    return policies


def _new_axes(title, ylabel):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.set_xlabel("round")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    return fig, ax


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=DPI, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_regret(spec):
    """One regret figure per input CSV; returns the written paths."""
    os.makedirs(spec.out_dir, exist_ok=True)
    written = []
    for rows_path in spec.csv_paths:
        cell = load_cell(rows_path)
        _crosscheck(cell, rows_path)
        policies = _select_policies(cell, spec)
        rounds = np.arange(1, cell.t_rounds + 1)
        fig, ax = _new_axes(
            f"K={cell.k}, v0={_format_v0(cell.v0)}, {cell.reward_mode} rewards",
            "cumulative regret",
        )
        for policy in policies:
            cum = cell.cum_regret[policy]
            mean = np.nanmean(cum, axis=0)
            std = np.nanstd(cum, axis=0)
            color = POLICY_COLORS.get(policy)
            ax.plot(rounds, mean, label=policy, color=color)
            if spec.band:
                ax.fill_between(
                    rounds, mean - std, mean + std, alpha=0.2, color=color, linewidth=0
                )
        ax.legend()
        name = f"regret_K{cell.k}_v0{_format_v0(cell.v0)}_{cell.reward_mode}.png"
        written.append(_save(fig, os.path.join(spec.out_dir, name)))
    return written


def _rolling_mean(values, window):
    if window <= 1:
        return values
    kernel = np.ones(window) / window
    smoothed = np.convolve(values, kernel, mode="valid")
    pad = np.full(window - 1, np.nan)
    return np.concatenate([pad, smoothed])


def plot_runtime(spec):
    """Per-round runtime curves (rolling mean over ``spec.window`` rounds)."""
    os.makedirs(spec.out_dir, exist_ok=True)
    written = []
    for rows_path in spec.csv_paths:
        cell = load_cell(rows_path)
        _crosscheck(cell, rows_path)
        policies = _select_policies(cell, spec)
        rounds = np.arange(1, cell.t_rounds + 1)
        fig, ax = _new_axes(
            f"K={cell.k}, v0={_format_v0(cell.v0)}, {cell.reward_mode} rewards",
            f"runtime per round (ns, rolling mean over {spec.window})",
        )
        for policy in policies:
            mean = np.nanmean(cell.runtime_ns[policy], axis=0)
            ax.plot(
                rounds,
                _rolling_mean(mean, spec.window),
                label=policy,
                color=POLICY_COLORS.get(policy),
            )
        ax.set_yscale("log")
        ax.legend()
        name = f"runtime_K{cell.k}_v0{_format_v0(cell.v0)}_{cell.reward_mode}.png"
        written.append(_save(fig, os.path.join(spec.out_dir, name)))
    return written
