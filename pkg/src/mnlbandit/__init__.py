"""Contextual MNL bandit algorithms and a regret/runtime benchmark harness."""

from .choice import (
    OUTSIDE,
    Assortment,
    ChoiceDistribution,
    choice_probabilities,
    expected_revenue,
    loss_gradient,
    loss_hessian,
    mnl_loss,
    sample_choice,
)
from .estimator import (
    EstimatorState,
    bonus,
    confidence_radius,
    in_confidence_set,
    init_estimator,
    project_ball,
    step,
)
from .harness import ExperimentConfig, RunRecord, load_config, run_cell, run_experiment
from .instances import (
    AdversarialSpec,
    MnlInstance,
    kappa_star,
    lower_bound_instance,
    nonuniform_lower_bound_instance,
    synth_instance,
)
from .policies import (
    PolicyDecision,
    brute_force_best,
    mle_fit,
    select_nonuniform,
    select_uniform,
    ts_mnl_select,
    ucb_mnl_select,
)

__all__ = [
    "OUTSIDE",
    "Assortment",
    "ChoiceDistribution",
    "choice_probabilities",
    "expected_revenue",
    "loss_gradient",
    "loss_hessian",
    "mnl_loss",
    "sample_choice",
    "EstimatorState",
    "bonus",
    "confidence_radius",
    "in_confidence_set",
    "init_estimator",
    "project_ball",
    "step",
    "ExperimentConfig",
    "RunRecord",
    "load_config",
    "run_cell",
    "run_experiment",
    "AdversarialSpec",
    "MnlInstance",
    "kappa_star",
    "lower_bound_instance",
    "nonuniform_lower_bound_instance",
    "synth_instance",
    "PolicyDecision",
    "brute_force_best",
    "mle_fit",
    "select_nonuniform",
    "select_uniform",
    "ts_mnl_select",
    "ucb_mnl_select",
]
