from __future__ import annotations

from typing import Iterable, Mapping

import numpy as np

from cgl.core import PriorPolicy, validate_prior
from cgl.envs.base import Environment

SINGLE_ARROW = 0.9
DOUBLE_ARROW = 0.4


def arrow_row(num_actions: int, arrows: Mapping[int, float]) -> np.ndarray:
    """Fixed mass on the arrow actions, the rest split equally over the others.

    With no arrows the row is uniform.
    """
    row = np.empty(num_actions)
    if not arrows:
        row[:] = 1.0 / num_actions
        return row
    rest = num_actions - len(arrows)
    fixed = sum(arrows.values())
    if rest < 1 or not 0.0 < fixed < 1.0:
        raise ValueError(f"arrow mass {fixed} over {len(arrows)} of {num_actions} actions leaves no valid remainder")
    row[:] = (1.0 - fixed) / rest
    for a, p in arrows.items():
        row[a] = p
    return row


def prior_from_arrows(
    num_states: int, num_actions: int, arrows: Mapping[int, Mapping[int, float]], name: str
) -> PriorPolicy:
    probs = np.full((num_states, num_actions), 1.0 / num_actions)
    for s, arr in arrows.items():
        if not 0 <= s < num_states or any(not 0 <= a < num_actions for a in arr):
            raise IndexError(f"arrow at state {s} actions {list(arr)} is outside {num_states} x {num_actions}")
        probs[s] = arrow_row(num_actions, arr)
    prior = PriorPolicy(probs, name=name)
    validate_prior(prior, (num_states, num_actions))
    return prior


def extract_online_prior(
    greedy_path: Iterable[tuple[int, int]],
    target_env: Environment,
    strength: float = SINGLE_ARROW,
    name: str = "online",
) -> PriorPolicy:
    """Turn a learned action-per-state record into a prior over ``target_env``.

    Path states get ``strength`` on the recorded action; everything else is uniform.
    """
    if not 0.5 < strength < 1.0:
        raise ValueError(f"strength must lie in (0.5, 1), got {strength}")
    arrows: dict[int, dict[int, float]] = {}
    for s, a in greedy_path:
        target_env.check_state(s)
        target_env.check_action(a)
        arrows[s] = {a: strength}
    return prior_from_arrows(target_env.num_states, target_env.num_actions, arrows, name)
