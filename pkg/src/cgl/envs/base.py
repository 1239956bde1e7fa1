from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from cgl.core import Transition


class Environment(ABC):
    """Finite, episodic MDP with integer states and actions."""

    num_states: int
    num_actions: int
    action_names: Sequence[str]

    @abstractmethod
    def initial_state(self) -> int: ...

    @abstractmethod
    def is_terminal(self, state: int) -> bool: ...

    @abstractmethod
    def step(self, state: int, action: int) -> Transition: ...

    @abstractmethod
    def describe_state(self, state: int) -> str: ...

    def model(self) -> "ExplicitModel":
        cached = getattr(self, "_model_cache", None)
        if cached is None:
            cached = tabulate(self)
            self._model_cache = cached
        return cached

    def check_state(self, state: int) -> None:
        if not 0 <= state < self.num_states:
            raise IndexError(f"state {state} outside 0..{self.num_states - 1}")

    def check_action(self, action: int) -> None:
        if not 0 <= action < self.num_actions:
            raise IndexError(f"action {action} outside 0..{self.num_actions - 1}")


@dataclass(frozen=True)
class ExplicitModel:
    """Exhaustive (state, action) -> (next state, reward) tables of a deterministic environment."""

    next_state: np.ndarray
    reward: np.ndarray
    terminal: np.ndarray
    initial: int

    @property
    def num_states(self) -> int:
        return self.next_state.shape[0]

    @property
    def num_actions(self) -> int:
        return self.next_state.shape[1]

    def step(self, state: int, action: int) -> Transition:
        ns = int(self.next_state[state, action])
        return Transition(state, action, float(self.reward[state, action]), ns, bool(self.terminal[ns]))


def tabulate(env: Environment) -> ExplicitModel:
    """Enumerate ``env.step`` over every pair. Only valid for deterministic environments."""
    S, A = env.num_states, env.num_actions
    next_state = np.empty((S, A), dtype=np.int64)
    reward = np.empty((S, A), dtype=np.float64)
    terminal = np.array([env.is_terminal(s) for s in range(S)], dtype=np.bool_)
    for s in range(S):
        for a in range(A):
            t = env.step(s, a)
            if t.terminal != terminal[t.next_state]:
                raise ValueError(f"step({s}, {a}) terminal flag disagrees with is_terminal")
            next_state[s, a] = t.next_state
            reward[s, a] = t.reward
    for arr in (next_state, reward, terminal):
        arr.setflags(write=False)
    return ExplicitModel(next_state, reward, terminal, env.initial_state())
