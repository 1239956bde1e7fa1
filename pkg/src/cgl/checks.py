"""Randomized property suite behind ``cgl check``.

Each property draws its trials from generators seeded by
``derive_seed(seed, property, trial)`` so that a failure can be replayed from
the reported trial seed alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from cgl.bench import derive_seed
from cgl.core import PriorPolicy
from cgl.envs import AmProcess, AmProcessSpec, GridWorldSpec, gridworld_new
from cgl.learners import policy_cg, soft_backup
from cgl.planner import apply_b_pi, apply_b_star


@dataclass
class CheckResult:
    name: str
    passed: bool
    trials: int
    worst: float
    failing_seed: Optional[int] = None
    detail: str = ""

    def line(self) -> str:
        if self.passed:
            return f"PASS {self.name}: {self.trials} trials, worst {self.worst:.3e}"
        return f"FAIL {self.name}: trial seed {self.failing_seed}: {self.detail}"


def random_prior_rows(rng: np.random.Generator, m: int, n_actions: int) -> np.ndarray:
    p = rng.uniform(0.05, 1.0, size=(m, n_actions))
    return p / p.sum(axis=-1, keepdims=True)


def random_prior_table(rng: np.random.Generator, n_states: int, n_actions: int) -> PriorPolicy:
    p = rng.uniform(0.05, 1.0, size=(n_states, n_actions))
    return PriorPolicy(p / p.sum(axis=1, keepdims=True))


def random_policy_table(rng: np.random.Generator, n_states: int, n_actions: int) -> np.ndarray:
    p = rng.dirichlet(np.ones(n_actions), size=n_states)
    # keep pi strictly positive so log(pi / rho) is finite
    p = 0.999 * p + 0.001 / n_actions
    return p / p.sum(axis=1, keepdims=True)


def literal_two_prior_policy(cg_row, rho1, rho2, b1: float, b2: float) -> np.ndarray:
    """Direct, unshifted evaluation of the two-prior soft policy."""
    num = rho1 ** (b2 / (b1 + b2)) * rho2 ** (b1 / (b1 + b2)) * np.exp(-cg_row * (b1 * b2 / (b1 + b2)))
    return num / num.sum()


def check_environments():
    return {
        "grid6a": gridworld_new(GridWorldSpec(6, "a")).model(),
        "amG1": AmProcess(AmProcessSpec("G1")).model(),
        "amG2": AmProcess(AmProcessSpec("G2")).model(),
    }


def _run(name: str, seed: int, trials: int, trial: Callable[[np.random.Generator], tuple[float, float, str]]
         ) -> CheckResult:
    worst = 0.0
    for k in range(trials):
        ts = derive_seed(seed, name, k)
        excess, value, detail = trial(np.random.default_rng(ts))
        worst = max(worst, value)
        if not excess <= 0.0:
            return CheckResult(name, False, k + 1, worst, ts, detail)
    return CheckResult(name, True, trials, worst)


def _contraction(operator: str, model, gamma: float = 0.9):
    def trial(rng):
        S, A = model.next_state.shape
        priors = [random_prior_table(rng, S, A) for _ in range(2)]
        betas = rng.uniform(-50.0, -0.5, size=2)
        pi = random_policy_table(rng, S, A)
        scale = rng.uniform(0.01, 10.0)
        cg1 = rng.normal(0, scale, (S, A))
        cg2 = rng.normal(0, scale, (S, A))
        if operator == "pi":
            d = apply_b_pi(model, pi, priors, betas, cg1, gamma) - apply_b_pi(model, pi, priors, betas, cg2, gamma)
        else:
            d = apply_b_star(model, priors, betas, cg1, gamma) - apply_b_star(model, priors, betas, cg2, gamma)
        lhs = float(np.max(np.abs(d)))
        dist = float(np.max(np.abs(cg1 - cg2)))
        rhs = gamma * dist + 1e-9
        return lhs - rhs, lhs / max(dist, 1e-300), f"||B cg1 - B cg2|| = {lhs:.6g} > {rhs:.6g}"
    return trial


def _normalization(rng):
    A = int(rng.integers(2, 8))
    m = int(rng.integers(1, 4))
    pi = policy_cg(rng.normal(0, rng.uniform(0.01, 100.0), A), random_prior_rows(rng, m, A),
                   rng.uniform(-1e4, -0.1, size=m))
    err = abs(pi.sum() - 1.0)
    bad = not np.all(pi >= 0) or not np.all(np.isfinite(pi))
    return (1.0 if bad else err - 1e-12), err, f"policy sums to {pi.sum()!r}, min {pi.min()!r}"


def _hard_limit(rng):
    A = int(rng.integers(2, 8))
    cg = rng.normal(0, 1.0, A)
    rho = random_prior_rows(rng, 2, A)
    gamma = rng.uniform(0.1, 0.99)
    err = abs(soft_backup(cg, rho, (-1e8, -1e8), gamma) - gamma * cg.max())
    return err - 1e-4, err, f"|soft - gamma*max| = {err:.3e}"


def _shift(rng):
    A = int(rng.integers(2, 8))
    cg = rng.normal(0, 1.0, A)
    rho = random_prior_rows(rng, 2, A)
    betas = rng.uniform(-1e3, -0.5, size=2)
    gamma = rng.uniform(0.1, 0.99)
    c = rng.uniform(-100, 100)
    err = abs(soft_backup(cg + c, rho, betas, gamma) - soft_backup(cg, rho, betas, gamma) - gamma * c)
    return err - 1e-10, err, f"shift by {c:.6g} off by {err:.3e}"


def _two_prior_formula(rng):
    A = int(rng.integers(2, 8))
    b1, b2 = rng.uniform(-20.0, -0.5, size=2)
    cg = rng.uniform(-1.0, 1.0, A)
    rho = random_prior_rows(rng, 2, A)
    err = float(np.max(np.abs(policy_cg(cg, rho, (b1, b2)) - literal_two_prior_policy(cg, rho[0], rho[1], b1, b2))))
    return err - 1e-12, err, f"multi-prior form differs from the two-prior formula by {err:.3e}"


def run_checks(seed: int = 0, trials: int = 1000) -> list[CheckResult]:
    results = []
    for env_name, model in check_environments().items():
        results.append(_run(f"contraction_b_pi[{env_name}]", seed, trials, _contraction("pi", model)))
        results.append(_run(f"contraction_b_star[{env_name}]", seed, trials, _contraction("star", model)))
    results.append(_run("policy_normalization", seed, trials, _normalization))
    results.append(_run("hard_max_limit", seed, trials, _hard_limit))
    results.append(_run("logsumexp_shift", seed, trials, _shift))
    results.append(_run("two_prior_formula", seed, trials, _two_prior_formula))
    return results
