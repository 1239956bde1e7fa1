"""Model-based checks: soft Bellman operators, the regularized fixed point, BFS.

Terminal states are absorbing with no actions of their own: their rows are
held at zero and transitions into them have no continuation value.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from cgl import _kernels as K
from cgl.core import PriorPolicy
from cgl.envs.base import Environment, ExplicitModel
from cgl.learners import combined_log_prior, policy_cg


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, report: "FixedPointReport"):
        super().__init__(message)
        self.report = report


@dataclass
class FixedPointReport:
    cg_star: np.ndarray
    iterations: int
    residual: float


def _model(env: Union[Environment, ExplicitModel]) -> ExplicitModel:
    return env if isinstance(env, ExplicitModel) else env.model()


def _stack(priors: Sequence[PriorPolicy]) -> np.ndarray:
    return np.stack([p.probs for p in priors])


def apply_b_pi(model, pi: np.ndarray, priors: Sequence[PriorPolicy], betas: Sequence[float],
               cg: np.ndarray, gamma: float) -> np.ndarray:
    """One synchronous sweep of the policy-evaluation operator with KL penalties.

    ``pi`` is |S| x |A|. The continuation from s' is
    sum_a' pi(a'|s') [cg(s', a') + sum_i log(pi(a'|s') / rho_i(a'|s')) / beta_i].
    """
    model = _model(model)
    pi = np.asarray(pi, dtype=np.float64)
    betas = np.asarray(betas, dtype=np.float64)
    rho = _stack(priors)
    with np.errstate(divide="ignore"):
        log_pi = np.log(pi)
    penalty = np.zeros_like(pi)
    for i, b in enumerate(betas):
        penalty += (log_pi - np.log(rho[i])) / b
    # 0 * log 0 counts as 0
    per_state = np.where(pi > 0, pi * (cg + penalty), 0.0).sum(axis=1)
    cont = np.where(model.terminal[model.next_state], 0.0, per_state[model.next_state])
    out = model.reward + gamma * cont
    out[model.terminal] = 0.0
    return out


def apply_b_star(model, priors: Sequence[PriorPolicy], betas: Sequence[float],
                 cg: np.ndarray, gamma: float) -> np.ndarray:
    """One synchronous sweep of the optimal soft operator (reward plus soft backup)."""
    model = _model(model)
    lp, scale = combined_log_prior(_stack(priors), betas)
    out = np.empty((model.num_states, model.num_actions))
    K.b_star_sweep(np.ascontiguousarray(cg, dtype=np.float64), model.next_state, model.reward,
                   model.terminal, lp, scale, gamma, out)
    return out


def apply_bellman_max(model, q: np.ndarray, gamma: float) -> np.ndarray:
    """Classical hard-max optimality backup; the infinite-|beta| limit of ``apply_b_star``."""
    model = _model(model)
    cont = np.where(model.terminal[model.next_state], 0.0, q.max(axis=1)[model.next_state])
    out = model.reward + gamma * cont
    out[model.terminal] = 0.0
    return out


def soft_policy_table(cg: np.ndarray, priors: Sequence[PriorPolicy], betas: Sequence[float]) -> np.ndarray:
    rho = _stack(priors)
    return np.stack([policy_cg(cg[s], rho[:, s, :], betas) for s in range(cg.shape[0])])


def solve_fixed_point(model, priors: Sequence[PriorPolicy], betas: Sequence[float], gamma: float,
                      tol: float = 1e-10, max_sweeps: int = 100_000) -> FixedPointReport:
    """Iterate ``apply_b_star`` from zero until the sup-norm change drops below ``tol``."""
    if not gamma < 1.0:
        raise ValueError("fixed-point iteration needs gamma < 1")
    model = _model(model)
    cg = np.zeros((model.num_states, model.num_actions))
    for sweep in range(1, max_sweeps + 1):
        nxt = apply_b_star(model, priors, betas, cg, gamma)
        change = float(np.max(np.abs(nxt - cg)))
        cg = nxt
        if change < tol:
            residual = float(np.max(np.abs(apply_b_star(model, priors, betas, cg, gamma) - cg)))
            return FixedPointReport(cg, sweep, residual)
    residual = float(np.max(np.abs(apply_b_star(model, priors, betas, cg, gamma) - cg)))
    raise ConvergenceError(
        f"no convergence in {max_sweeps} sweeps (residual {residual:.3e})",
        FixedPointReport(cg, max_sweeps, residual),
    )


def contraction_ratio(model, pi: np.ndarray, priors, betas, cg1: np.ndarray, cg2: np.ndarray,
                      gamma: float, operator: str = "pi") -> tuple[float, float]:
    """(||B cg1 - B cg2||_inf, ||cg1 - cg2||_inf) for B = B^pi or B*."""
    if operator == "pi":
        d_out = apply_b_pi(model, pi, priors, betas, cg1, gamma) - apply_b_pi(model, pi, priors, betas, cg2, gamma)
    else:
        d_out = apply_b_star(model, priors, betas, cg1, gamma) - apply_b_star(model, priors, betas, cg2, gamma)
    return float(np.max(np.abs(d_out))), float(np.max(np.abs(cg1 - cg2)))


def bfs_shortest(env) -> tuple[int, list[tuple[int, int]]]:
    """Fewest actions from the initial state to any terminal state, plus one such path.

    Works on the raw transition graph; self-loops are ignored.
    """
    model = _model(env)
    start = model.initial
    if model.terminal[start]:
        return 0, []
    parent: dict[int, tuple[int, int]] = {start: (-1, -1)}
    queue = deque([start])
    while queue:
        s = queue.popleft()
        for a in range(model.num_actions):
            ns = int(model.next_state[s, a])
            if ns == s or ns in parent:
                continue
            parent[ns] = (s, a)
            if model.terminal[ns]:
                path = []
                node = ns
                while node != start:
                    prev, act = parent[node]
                    path.append((prev, act))
                    node = prev
                path.reverse()
                return len(path), path
            queue.append(ns)
    raise ValueError("goal is unreachable from the initial state")


def greedy_policy(cg: np.ndarray) -> np.ndarray:
    """Row-wise argmax; ties go to the lowest action index."""
    return np.argmax(np.asarray(cg), axis=1)


def greedy_rollout(env, policy: Sequence[int], max_steps: Optional[int] = None
                   ) -> tuple[int, bool, list[tuple[int, int]]]:
    """Follow a deterministic policy from the initial state.

    Returns (steps, reached_goal, path). Stops at the goal, at ``max_steps``
    (default |S|), or as soon as a state repeats.
    """
    model = _model(env)
    if max_steps is None:
        max_steps = model.num_states
    s = model.initial
    seen = {s}
    path: list[tuple[int, int]] = []
    while not model.terminal[s] and len(path) < max_steps:
        a = int(policy[s])
        path.append((s, a))
        s = int(model.next_state[s, a])
        if s in seen:
            break
        seen.add(s)
    return len(path), bool(model.terminal[s]), path
