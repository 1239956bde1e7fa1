"""Random-policy, Q-Learning, G-Learning and Continual G-Learning agents.

G-Learning is the single-prior case of the multi-prior learner, so both go
through the same soft policy

    pi(a|s) ~ exp(h * (sum_i log(rho_i(a|s)) / beta_i - CG(s, a))),  h = 1 / sum_i (1 / beta_i)

and the same soft backup ``-(gamma / h) * log sum_a exp(...)`` of the next
state's row. All of it is evaluated in the log domain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from cgl import _kernels as K
from cgl.core import (
    EpisodeLog,
    Hyperparams,
    PriorPolicy,
    Transition,
    ValueTable,
    as_rows,
    learning_rate,
    validate_prior,
)
from cgl.envs.base import Environment, ExplicitModel

TIE_BREAKS = ("lowest", "split")


@dataclass(frozen=True)
class BetaCombination:
    harmonic_scale: float
    inverse_scale: float

    @classmethod
    def from_betas(cls, betas: Sequence[float]) -> "BetaCombination":
        betas = _check_betas(betas)
        inv = float(np.sum(1.0 / betas))
        return cls(1.0 / inv, inv)

    def prior_weights(self, betas: Sequence[float]) -> np.ndarray:
        """Exponent applied to each prior, ``h / beta_i``; they sum to one."""
        return self.harmonic_scale / np.asarray(betas, dtype=np.float64)


def _check_betas(betas: Sequence[float]) -> np.ndarray:
    betas = np.atleast_1d(np.asarray(betas, dtype=np.float64))
    if betas.size == 0:
        raise ValueError("at least one prior/beta is required; use Q-Learning for the prior-free case")
    if not np.all(np.isfinite(betas)) or np.any(betas >= 0):
        raise ValueError(f"betas must be finite and negative, got {betas.tolist()}")
    return betas


def combined_log_prior(prior_rows: np.ndarray, betas: Sequence[float]) -> tuple[np.ndarray, float]:
    """Weighted log-prior ``sum_i (h / beta_i) log rho_i`` and the positive scale ``|h|``.

    ``prior_rows`` is M x |A| for a single state or M x |S| x |A| for a table.
    """
    betas = _check_betas(betas)
    rows = np.asarray(prior_rows, dtype=np.float64)
    if rows.shape[0] != betas.size:
        raise ValueError(f"{rows.shape[0]} priors but {betas.size} betas")
    if not np.all(np.isfinite(rows)) or np.any(rows <= 0):
        raise ValueError("prior probabilities must be finite and strictly positive")
    comb = BetaCombination.from_betas(betas)
    weights = comb.prior_weights(betas)
    lp = np.tensordot(weights, np.log(rows), axes=1)
    return np.ascontiguousarray(lp), -comb.harmonic_scale


def _finite_row(row, name: str) -> np.ndarray:
    row = np.ascontiguousarray(row, dtype=np.float64)
    if row.ndim != 1 or not np.all(np.isfinite(row)):
        raise ValueError(f"{name} must be a finite 1-D array")
    return row


def policy_cg(cg_row, prior_rows, betas) -> np.ndarray:
    cg_row = _finite_row(cg_row, "cg_row")
    lp, scale = combined_log_prior(as_rows(prior_rows), betas)
    if lp.shape != cg_row.shape:
        raise ValueError("prior rows and cg_row disagree on the number of actions")
    out = np.empty_like(cg_row)
    K.policy_row(cg_row, lp, scale, out)
    return out


def soft_backup(cg_next_row, prior_next_rows, betas, gamma: float) -> float:
    """Discounted soft maximum of the next state's row."""
    cg_next_row = _finite_row(cg_next_row, "cg_next_row")
    lp, scale = combined_log_prior(as_rows(prior_next_rows), betas)
    if lp.shape != cg_next_row.shape:
        raise ValueError("prior rows and cg_next_row disagree on the number of actions")
    return gamma * K.soft_value_row(cg_next_row, lp, scale)


def sample_action(dist, rng: np.random.Generator) -> int:
    dist = np.ascontiguousarray(dist, dtype=np.float64)
    if np.any(dist < 0) or abs(dist.sum() - 1.0) > 1e-9:
        raise ValueError("not a probability distribution")
    return int(K.sample_index(dist, rng.random()))


def epsilon_greedy_distribution(q_row, epsilon: float, tie_break: str = "lowest") -> np.ndarray:
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    if tie_break not in TIE_BREAKS:
        raise ValueError(f"tie_break must be one of {TIE_BREAKS}")
    q_row = _finite_row(q_row, "q_row")
    out = np.empty_like(q_row)
    K.eps_greedy_row(q_row, epsilon, tie_break == "split", out)
    return out


def epsilon_greedy(q_row, epsilon: float, rng: np.random.Generator, tie_break: str = "lowest") -> int:
    return sample_action(epsilon_greedy_distribution(q_row, epsilon, tie_break), rng)


def q_update(table: ValueTable, t: Transition, hp: Hyperparams) -> float:
    """Tabular Q-Learning step for an already-counted visit; returns the new entry."""
    alpha = learning_rate(int(table.visits[t.state, t.action]), hp.w)
    target = t.reward if t.terminal else t.reward + hp.gamma * K.row_max(table.values[t.next_state])
    table.values[t.state, t.action] = K.blend(table.values[t.state, t.action], alpha, target)
    return float(table.values[t.state, t.action])


def cg_update(
    table: ValueTable,
    t: Transition,
    priors: Sequence[PriorPolicy],
    hp: Hyperparams,
    betas: Optional[Sequence[float]] = None,
) -> float:
    """Soft (multi-prior) step for an already-counted visit; returns the new entry.

    ``betas`` defaults to the first ``len(priors)`` entries of ``hp.betas``.
    """
    if betas is None:
        betas = hp.betas[: len(priors)]
    alpha = learning_rate(int(table.visits[t.state, t.action]), hp.w)
    if t.terminal:
        target = t.reward
    else:
        rows = np.stack([p.probs[t.next_state] for p in priors])
        target = t.reward + soft_backup(table.values[t.next_state], rows, betas, hp.gamma)
    table.values[t.state, t.action] = K.blend(table.values[t.state, t.action], alpha, target)
    return float(table.values[t.state, t.action])


def info_cost_diagnostic(pi, rho) -> float:
    """KL(pi || rho) in nats; zero-probability actions of ``pi`` contribute nothing."""
    pi = np.asarray(pi, dtype=np.float64)
    rho = np.asarray(rho, dtype=np.float64)
    mask = pi > 0
    return float(np.sum(pi[mask] * (np.log(pi[mask]) - np.log(rho[mask]))))


# --- learner kinds ----------------------------------------------------------


@dataclass(frozen=True)
class RandomPolicy:
    tag: str = field(default="rp", init=False)


@dataclass(frozen=True)
class QLearning:
    """Epsilon-greedy Q-Learning.

    Greedy ties share the greedy mass ("split") by default: on the all-zero
    starting table a lowest-index rule would always pick action 0.
    """

    epsilon: float = 0.1
    tie_break: str = "split"
    tag: str = field(default="ql", init=False)

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if self.tie_break not in TIE_BREAKS:
            raise ValueError(f"tie_break must be one of {TIE_BREAKS}")


@dataclass(frozen=True)
class ContinualG:
    priors: tuple[PriorPolicy, ...]
    betas: tuple[float, ...]
    tag: str = field(default="cgl", init=False)

    def __post_init__(self):
        object.__setattr__(self, "priors", tuple(self.priors))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        if len(self.priors) != len(self.betas) or not self.priors:
            raise ValueError("ContinualG needs M >= 1 priors and exactly as many betas")
        _check_betas(self.betas)
        for p in self.priors:
            validate_prior(p, self.priors[0].shape)

    @property
    def combination(self) -> BetaCombination:
        return BetaCombination.from_betas(self.betas)

    def log_prior(self) -> tuple[np.ndarray, float]:
        return combined_log_prior(np.stack([p.probs for p in self.priors]), self.betas)


@dataclass(frozen=True)
class GLearning:
    prior: PriorPolicy
    beta: float
    tag: str = field(default="gl", init=False)

    def __post_init__(self):
        validate_prior(self.prior)
        _check_betas([self.beta])

    def as_continual(self) -> ContinualG:
        return ContinualG((self.prior,), (self.beta,))


LearnerKind = Union[RandomPolicy, QLearning, GLearning, ContinualG]


@dataclass(frozen=True)
class _Prepared:
    kind: int
    lp: np.ndarray
    scale: float
    epsilon: float
    split_ties: bool


_NO_PRIOR = np.zeros((1, 1))


def _prepare(learner: LearnerKind, model: ExplicitModel) -> _Prepared:
    if isinstance(learner, RandomPolicy):
        return _Prepared(K.RANDOM, _NO_PRIOR, 1.0, 0.0, False)
    if isinstance(learner, QLearning):
        return _Prepared(K.QLEARN, _NO_PRIOR, 1.0, learner.epsilon, learner.tie_break == "split")
    if isinstance(learner, GLearning):
        learner = learner.as_continual()
    if isinstance(learner, ContinualG):
        shape = (model.num_states, model.num_actions)
        for p in learner.priors:
            if p.shape != shape:
                raise ValueError(f"prior {p.name!r} has shape {p.shape}, environment is {shape}")
        lp, scale = learner.log_prior()
        return _Prepared(K.SOFT, lp, scale, 0.0, False)
    raise TypeError(f"unknown learner {learner!r}")


def _as_model(env: Union[Environment, ExplicitModel]) -> ExplicitModel:
    return env if isinstance(env, ExplicitModel) else env.model()


def _episode(model: ExplicitModel, prep: _Prepared, table: ValueTable, hp: Hyperparams,
             rng: np.random.Generator, record: bool) -> EpisodeLog:
    uniforms = rng.random(hp.iter_max)
    n_rec = hp.iter_max if record else 0
    rec_s = np.empty(n_rec, dtype=np.int64)
    rec_a = np.empty(n_rec, dtype=np.int64)
    rec_r = np.empty(n_rec, dtype=np.float64)
    rec_ns = np.empty(n_rec, dtype=np.int64)
    steps, reached = K.run_episode(
        prep.kind, table.values, table.visits, model.next_state, model.reward, model.terminal,
        prep.lp, prep.scale, hp.gamma, hp.w, prep.epsilon, prep.split_ties,
        model.initial, hp.iter_max, uniforms, rec_s, rec_a, rec_r, rec_ns,
    )
    trajectory = None
    if record:
        trajectory = [
            Transition(int(rec_s[k]), int(rec_a[k]), float(rec_r[k]), int(rec_ns[k]),
                       bool(model.terminal[rec_ns[k]]))
            for k in range(steps)
        ]
    return EpisodeLog(int(steps), bool(reached), trajectory)


def run_episode(env, learner: LearnerKind, table: ValueTable, hp: Hyperparams,
                rng: np.random.Generator, record: bool = False) -> EpisodeLog:
    """Run one episode from the initial state, updating ``table`` in place.

    The loop stops on a terminal state or after ``hp.iter_max`` actions.
    """
    model = _as_model(env)
    return _episode(model, _prepare(learner, model), table, hp, rng, record)


@dataclass
class TrainResult:
    table: ValueTable
    logs: list[EpisodeLog]
    deltas: list[float]

    @property
    def actions(self) -> np.ndarray:
        return np.array([log.actions_taken for log in self.logs], dtype=np.int64)

    def __iter__(self):
        # allows ``table, logs = train(...)``
        return iter((self.table, self.logs))


def train(env, learner: LearnerKind, hp: Hyperparams, rng: np.random.Generator,
          table: Optional[ValueTable] = None, stop_tol: Optional[float] = None,
          record: bool = False) -> TrainResult:
    """Run ``hp.episodes`` episodes (fewer if ``stop_tol`` is set and the table settles).

    ``deltas[k]`` is the sup-norm change of the table during episode ``k``.
    """
    model = _as_model(env)
    if table is None:
        table = ValueTable(model.num_states, model.num_actions)
    elif table.shape != (model.num_states, model.num_actions):
        raise ValueError(f"table shape {table.shape} does not match the environment")
    prep = _prepare(learner, model)
    logs: list[EpisodeLog] = []
    deltas: list[float] = []
    for _ in range(hp.episodes):
        before = table.values.copy()
        logs.append(_episode(model, prep, table, hp, rng, record))
        delta = float(np.max(np.abs(table.values - before)))
        deltas.append(delta)
        if stop_tol is not None and delta < stop_tol and logs[-1].reached_goal:
            break
    return TrainResult(table, logs, deltas)
