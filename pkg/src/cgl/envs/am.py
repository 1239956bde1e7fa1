"""Mock fused-filament process: discrete parameter levels and a target setting.

A state is a tuple of levels (1 or 2), one per parameter, in the order flow
rate multiplier, printing speed, cooling fan. An action sets one parameter
to one level. The surface-quality classifier is replaced by an exact check
against the target setting.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable

from cgl.core import PriorPolicy, Transition
from cgl.envs.base import Environment
from cgl.envs.priors import SINGLE_ARROW, extract_online_prior, prior_from_arrows

PARAMETERS = ("flow", "speed", "fan")
LEVELS = {
    "flow": (0.4, 1.0),
    "speed": (7500, 2500),
    "fan": ("Off", "On"),
}

_GEOMETRY = {
    # name: (parameters, initial levels, target levels)
    "G1": (("flow", "speed"), (1, 1), (2, 2)),
    "G2": (("flow", "speed", "fan"), (2, 2, 1), (2, 2, 2)),
}


@dataclass(frozen=True)
class AmProcessSpec:
    geometry: str = "G1"

    def __post_init__(self):
        g = self.geometry.upper()
        if g not in _GEOMETRY:
            raise ValueError(f"geometry must be G1 or G2, got {self.geometry!r}")
        object.__setattr__(self, "geometry", g)

    @property
    def parameters(self) -> tuple[str, ...]:
        return _GEOMETRY[self.geometry][0]

    @property
    def initial_levels(self) -> tuple[int, ...]:
        return _GEOMETRY[self.geometry][1]

    @property
    def target_levels(self) -> tuple[int, ...]:
        return _GEOMETRY[self.geometry][2]


class AmProcess(Environment):
    def __init__(self, spec: AmProcessSpec, reward_goal: float = 1.0, reward_other: float = 0.0):
        self.spec = spec
        self.reward_goal = float(reward_goal)
        self.reward_other = float(reward_other)
        self.parameters = spec.parameters
        self.levels = list(itertools.product((1, 2), repeat=len(self.parameters)))
        self.index = {lv: k for k, lv in enumerate(self.levels)}
        self.actions = [(p, v) for p in range(len(self.parameters)) for v in (1, 2)]
        self.action_names = tuple(f"{self.parameters[p]}->{v}" for p, v in self.actions)
        self.num_states = len(self.levels)
        self.num_actions = len(self.actions)
        self.start = self.index[spec.initial_levels]
        self.target = self.index[spec.target_levels]

    def initial_state(self) -> int:
        return self.start

    def is_terminal(self, state: int) -> bool:
        return state == self.target

    def state_of(self, *levels: int) -> int:
        return self.index[tuple(levels)]

    def action_of(self, parameter: str, level: int) -> int:
        return self.actions.index((self.parameters.index(parameter), level))

    def step(self, state: int, action: int) -> Transition:
        self.check_state(state)
        self.check_action(action)
        p, v = self.actions[action]
        lv = list(self.levels[state])
        lv[p] = v
        ns = self.index[tuple(lv)]
        done = ns == self.target
        return Transition(state, action, self.reward_goal if done else self.reward_other, ns, done)

    def describe_state(self, state: int) -> str:
        return "(" + ",".join(str(v) for v in self.levels[state]) + ")"

    def describe_setting(self, state: int) -> str:
        return ", ".join(
            f"{name}={LEVELS[name][lv - 1]}" for name, lv in zip(self.parameters, self.levels[state])
        )


def am_env_new(spec: AmProcessSpec, reward_goal: float = 1.0, reward_other: float = 0.0) -> AmProcess:
    return AmProcess(spec, reward_goal, reward_other)


def am_priors(geometry: str, knowledge: str) -> PriorPolicy:
    """Literature (offline) or learned-on-G1 (online) priors for a geometry."""
    env = AmProcess(AmProcessSpec(geometry))
    g = env.spec.geometry
    knowledge = knowledge.lower()
    flow_up = env.action_of("flow", 2)
    if knowledge == "offline":
        # push flow rate multiplier to 1.0 wherever it is low and the fan is off
        states = [lv for lv in env.levels if lv[0] == 1 and (g == "G1" or lv[2] == 1)]
        arrows = {env.index[lv]: {flow_up: SINGLE_ARROW} for lv in states}
        return prior_from_arrows(env.num_states, env.num_actions, arrows, f"{g}-offline")
    if knowledge == "online":
        if g == "G1":
            raise ValueError("no online prior exists for G1; it is the first geometry printed")
        path = [
            (env.state_of(1, 1, 1), flow_up),
            (env.state_of(2, 1, 1), env.action_of("speed", 2)),
        ]
        return extract_online_prior(path, env, SINGLE_ARROW, name=f"{g}-online")
    raise ValueError(f"knowledge must be 'offline' or 'online', got {knowledge!r}")


def lift_path(path: Iterable[tuple[int, int]], source: AmProcess, target: AmProcess) -> list[tuple[int, int]]:
    """Map a (state, action) path from G1 into G2 indices, with the fan held at level 1."""
    out = []
    for s, a in path:
        lv = source.levels[s] + (1,) * (len(target.parameters) - len(source.parameters))
        p, v = source.actions[a]
        out.append((target.index[lv], target.actions.index((p, v))))
    return out
