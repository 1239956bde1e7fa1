from cgl.envs.am import AmProcess, AmProcessSpec, am_env_new, am_priors, lift_path
from cgl.envs.base import Environment, ExplicitModel, tabulate
from cgl.envs.gridworld import GridWorld, GridWorldSpec, gridworld_new, gridworld_priors
from cgl.envs.priors import arrow_row, extract_online_prior, prior_from_arrows

__all__ = [
    "AmProcess",
    "AmProcessSpec",
    "Environment",
    "ExplicitModel",
    "GridWorld",
    "GridWorldSpec",
    "am_env_new",
    "am_priors",
    "arrow_row",
    "extract_online_prior",
    "gridworld_new",
    "gridworld_priors",
    "lift_path",
    "prior_from_arrows",
    "tabulate",
]
