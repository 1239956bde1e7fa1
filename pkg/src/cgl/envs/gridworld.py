"""Obstacle gridworld with a start corner, a goal corner and two blocked rows.

Cells are (row, column), both 1-based. Row 2 is blocked except at the last
column and row 4 is blocked except at the first column, which forces a
serpentine route from (1, 1) to (n, n).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from cgl.core import PriorPolicy, Transition
from cgl.envs.base import Environment
from cgl.envs.priors import DOUBLE_ARROW, SINGLE_ARROW, prior_from_arrows

UP, DOWN, LEFT, RIGHT = range(4)
ACTION_NAMES = ("up", "down", "left", "right")
_DELTAS = {UP: (-1, 0), DOWN: (1, 0), LEFT: (0, -1), RIGHT: (0, 1)}
_GLYPHS = {UP: "^", DOWN: "v", LEFT: "<", RIGHT: ">"}


LAYOUTS = ("consistent", "literal")


@dataclass(frozen=True)
class GridWorldSpec:
    """Grid side ``n``, prior case ``a``/``b`` and the arrow layout.

    ``layout="consistent"`` puts the offline rightward arrows along row 1 and
    the case-b double arrow at (3, 4) on up+right, so that every case-a arrow
    lies on the optimal route and the case-b one points off it.
    ``layout="literal"`` puts the rightward arrows down column 1 and the
    case-b double arrow on up+left.
    """

    n: int = 6
    case: str = "a"
    layout: str = "consistent"

    def __post_init__(self):
        if self.layout not in LAYOUTS:
            raise ValueError(f"layout must be one of {LAYOUTS}, got {self.layout!r}")
        if self.n < 5:
            raise ValueError(f"grid side must be >= 5 so that both obstacle rows exist, got {self.n}")
        case = self.case.lower()
        if case not in ("a", "b"):
            raise ValueError(f"case must be 'a' or 'b', got {self.case!r}")
        object.__setattr__(self, "case", case)

    def blocked(self) -> frozenset[tuple[int, int]]:
        n = self.n
        return frozenset({(2, j) for j in range(1, n)} | {(4, j) for j in range(2, n + 1)})


class GridWorld(Environment):
    action_names = ACTION_NAMES

    def __init__(self, spec: GridWorldSpec, reward_goal: float = 1.0, reward_other: float = 0.0):
        self.spec = spec
        self.n = spec.n
        self.reward_goal = float(reward_goal)
        self.reward_other = float(reward_other)
        self.blocked = spec.blocked()
        self.cells = [(i, j) for i in range(1, self.n + 1) for j in range(1, self.n + 1)
                      if (i, j) not in self.blocked]
        self.index = {c: k for k, c in enumerate(self.cells)}
        self.num_states = len(self.cells)
        self.num_actions = 4
        self.start = self.index[(1, 1)]
        self.goal = self.index[(self.n, self.n)]

    def initial_state(self) -> int:
        return self.start

    def is_terminal(self, state: int) -> bool:
        return state == self.goal

    def cell(self, state: int) -> tuple[int, int]:
        return self.cells[state]

    def state_of(self, i: int, j: int) -> int:
        return self.index[(i, j)]

    def step(self, state: int, action: int) -> Transition:
        self.check_state(state)
        self.check_action(action)
        i, j = self.cells[state]
        di, dj = _DELTAS[action]
        target = (i + di, j + dj)
        # off-grid and blocked moves leave the agent in place
        ns = self.index.get(target, state)
        done = ns == self.goal
        r = self.reward_goal if done else self.reward_other
        return Transition(state, action, r, ns, done)

    def describe_state(self, state: int) -> str:
        i, j = self.cells[state]
        return f"({i},{j})"

    def render(self, prior: Optional[PriorPolicy] = None, policy: Optional[Sequence[int]] = None) -> str:
        """ASCII map: '#' blocked, 'S'/'G' start and goal, arrows from a policy or a prior's mode."""
        lines = []
        for i in range(1, self.n + 1):
            row = []
            for j in range(1, self.n + 1):
                if (i, j) in self.blocked:
                    row.append("#")
                    continue
                s = self.index[(i, j)]
                if s == self.goal:
                    row.append("G")
                elif policy is not None:
                    row.append(_GLYPHS[int(policy[s])])
                elif prior is not None:
                    p = prior.probs[s]
                    top = np.flatnonzero(p == p.max())
                    row.append("." if top.size == len(p) else "".join(_GLYPHS[a] for a in top)[:2])
                else:
                    row.append("S" if s == self.start else ".")
            lines.append(" ".join(f"{c:<2}" for c in row).rstrip())
        return "\n".join(lines)


def gridworld_new(spec: GridWorldSpec, reward_goal: float = 1.0, reward_other: float = 0.0) -> GridWorld:
    return GridWorld(spec, reward_goal, reward_other)


def gridworld_priors(spec: GridWorldSpec) -> tuple[PriorPolicy, PriorPolicy]:
    """(offline, online) priors from the arrow rule.

    Offline: rightward arrows for k < n at (1, k) (consistent layout) or
    (k, 1) (literal layout), plus a double arrow at (3, 4) in case b.
    Online: leftward along row 3 from column 2 on, downward at (3, 1).
    """
    env = GridWorld(spec)
    n = spec.n
    literal = spec.layout == "literal"
    offline: dict[int, dict[int, float]] = {}
    for k in range(1, n):
        cell = (k, 1) if literal else (1, k)
        if cell in env.index:
            offline[env.index[cell]] = {RIGHT: SINGLE_ARROW}
    if spec.case == "b":
        second = LEFT if literal else RIGHT
        offline[env.index[(3, 4)]] = {UP: DOUBLE_ARROW, second: DOUBLE_ARROW}
    online = {env.index[(3, j)]: {LEFT: SINGLE_ARROW} for j in range(2, n + 1)}
    online[env.index[(3, 1)]] = {DOWN: SINGLE_ARROW}
    return (
        prior_from_arrows(env.num_states, 4, offline, f"offline-{spec.case}"),
        prior_from_arrows(env.num_states, 4, online, f"online-{spec.case}"),
    )
