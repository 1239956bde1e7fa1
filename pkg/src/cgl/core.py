"""Shared tabular types: value tables, prior policies, hyperparameters, episode logs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

ROW_SUM_TOL = 1e-12


class ValueTable:
    """Dense |S| x |A| action values plus per-pair visit counts.

    Houses Q(s, a) for Q-Learning and CG(s, a) for the soft learners. Both
    arrays start at zero.
    """

    def __init__(self, num_states: int, num_actions: int):
        self.values = np.zeros((num_states, num_actions), dtype=np.float64)
        self.visits = np.zeros((num_states, num_actions), dtype=np.int64)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def copy(self) -> "ValueTable":
        out = ValueTable(*self.shape)
        out.values[:] = self.values
        out.visits[:] = self.visits
        return out

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.values).all())

    def __repr__(self) -> str:
        return f"ValueTable(states={self.shape[0]}, actions={self.shape[1]})"


class PriorViolation(ValueError):
    """Raised when a prior policy breaks the strict (0, 1) / row-sum contract."""

    def __init__(self, message: str, state: Optional[int] = None, action: Optional[int] = None):
        super().__init__(message)
        self.state = state
        self.action = action


@dataclass(frozen=True)
class PriorPolicy:
    """Per-state action distribution with every entry strictly inside (0, 1)."""

    probs: np.ndarray
    name: str = "prior"

    def __post_init__(self):
        probs = np.array(self.probs, dtype=np.float64)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def shape(self) -> tuple[int, int]:
        return self.probs.shape

    @classmethod
    def uniform(cls, num_states: int, num_actions: int, name: str = "uniform") -> "PriorPolicy":
        return cls(np.full((num_states, num_actions), 1.0 / num_actions), name=name)

    def log(self) -> np.ndarray:
        return np.log(self.probs)


def validate_prior(prior: PriorPolicy, shape: Optional[tuple[int, int]] = None) -> None:
    """Check a prior against the bounded-support contract.

    Raises ``PriorViolation`` naming the first offending (state, action), or
    ``ValueError`` if ``shape`` is given and does not match.
    """
    probs = np.asarray(prior.probs)
    if probs.ndim != 2:
        raise ValueError(f"prior must be 2-D, got shape {probs.shape}")
    if shape is not None and tuple(probs.shape) != tuple(shape):
        raise ValueError(f"prior shape {probs.shape} does not match environment {tuple(shape)}")
    for s in range(probs.shape[0]):
        row = probs[s]
        bad = np.flatnonzero(~((row > 0.0) & (row < 1.0)))
        if bad.size:
            a = int(bad[0])
            raise PriorViolation(
                f"prior[{s}, {a}] = {row[a]!r} is not strictly inside (0, 1)", state=s, action=a
            )
        total = float(np.sum(row))
        if abs(total - 1.0) > ROW_SUM_TOL:
            raise PriorViolation(f"prior row {s} sums to {total!r}", state=s)


def learning_rate(n: int, w: float) -> float:
    """Visit-count learning rate ``n ** -w``; ``n`` must already include the current visit."""
    if n < 1:
        raise ValueError(f"learning rate needs a visit count >= 1, got {n}")
    if not 0.5 < w <= 1.0:
        raise ValueError(f"w must lie in (0.5, 1], got {w}")
    return float(n) ** -w


@dataclass(frozen=True)
class Hyperparams:
    """Run settings. Defaults are the gridworld study values."""

    gamma: float = 0.9
    w: float = 0.6
    betas: tuple[float, ...] = (-2000.0, -2000.0)
    iter_max: int = 1000
    reward_goal: float = 1.0
    reward_other: float = 0.0
    epsilon: float = 0.1
    episodes: int = 100
    replications: int = 50
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if not 0.5 < self.w <= 1.0:
            raise ValueError(f"w must lie in (0.5, 1], got {self.w}")
        if not self.betas or any(not b < 0 for b in self.betas):
            raise ValueError(f"betas must be a non-empty list of negative numbers, got {self.betas}")
        if self.iter_max < 1:
            raise ValueError("iter_max must be >= 1")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if self.episodes < 0 or self.replications < 1:
            raise ValueError("episodes must be >= 0 and replications >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @classmethod
    def gridworld(cls, **overrides) -> "Hyperparams":
        return cls(**overrides)

    @classmethod
    def am_process(cls, **overrides) -> "Hyperparams":
        base = dict(betas=(-700.0, -700.0), iter_max=50, episodes=3, replications=200)
        base.update(overrides)
        return cls(**base)


class Transition(NamedTuple):
    state: int
    action: int
    reward: float
    next_state: int
    terminal: bool


@dataclass
class EpisodeLog:
    actions_taken: int
    reached_goal: bool
    trajectory: Optional[list[Transition]] = field(default=None, repr=False)


def as_rows(rows: Sequence[Sequence[float]] | np.ndarray) -> np.ndarray:
    """Coerce an M x |A| block (or a single row) to a 2-D float array."""
    arr = np.asarray(rows, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    return arr
