"""Tabular Q-, G- and continual G-Learning with prior policies, plus benchmarks and planners."""

from cgl.core import (
    EpisodeLog,
    Hyperparams,
    PriorPolicy,
    PriorViolation,
    Transition,
    ValueTable,
    learning_rate,
    validate_prior,
)
from cgl.learners import (
    ContinualG,
    GLearning,
    QLearning,
    RandomPolicy,
    cg_update,
    epsilon_greedy,
    info_cost_diagnostic,
    policy_cg,
    q_update,
    run_episode,
    sample_action,
    soft_backup,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "ContinualG",
    "EpisodeLog",
    "GLearning",
    "Hyperparams",
    "PriorPolicy",
    "PriorViolation",
    "QLearning",
    "RandomPolicy",
    "Transition",
    "ValueTable",
    "cg_update",
    "epsilon_greedy",
    "info_cost_diagnostic",
    "learning_rate",
    "policy_cg",
    "q_update",
    "run_episode",
    "sample_action",
    "soft_backup",
    "train",
    "validate_prior",
]
