"""Seeded multi-replication experiments on the gridworld and the mock AM process.

Every (method, size, case, replication) cell draws from its own generator,
seeded by a stable hash of the cell key, so adding a method or a size never
shifts another cell's stream. Methods that ignore priors (rp, ql) hash the
case as "-" and therefore give identical results in both cases.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

import numpy as np

from cgl.core import Hyperparams
from cgl.envs import (
    AmProcess,
    AmProcessSpec,
    GridWorldSpec,
    am_priors,
    extract_online_prior,
    gridworld_new,
    gridworld_priors,
    lift_path,
)
from cgl.envs.priors import SINGLE_ARROW
from cgl.learners import ContinualG, GLearning, QLearning, RandomPolicy, train
from cgl.planner import greedy_policy, greedy_rollout

METHODS = ("rp", "ql", "gl", "cgl")
PRIOR_FREE = ("rp", "ql")

# experiment id -> ((G1 method, G1 knowledge), (G2 method, G2 knowledge))
AM_EXPERIMENTS = {
    1: (("gl", ("offline",)), ("cgl", ("offline", "online"))),
    2: (("ql", ()), ("gl", ("offline",))),
    3: (("ql", ()), ("ql", ())),
}


def derive_seed(base_seed: int, *key) -> int:
    """Stable 64-bit seed from the base seed and a cell key."""
    text = "|".join(str(k) for k in (base_seed, *key))
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "little")


@dataclass(frozen=True)
class ExperimentConfig:
    env: str = "grid"
    methods: tuple[str, ...] = METHODS
    sizes: tuple[int, ...] = (6,)
    cases: tuple[str, ...] = ("a",)
    layout: str = "consistent"
    experiments: tuple[int, ...] = (1, 2, 3)
    am_episodes: tuple[int, int] = (3, 6)
    online_strength: float = SINGLE_ARROW
    hp: Hyperparams = field(default_factory=Hyperparams)

    def __post_init__(self):
        if self.env not in ("grid", "am"):
            raise ValueError(f"env must be 'grid' or 'am', got {self.env!r}")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ValueError(f"unknown methods {bad}; choose from {METHODS}")
        if self.env == "grid":
            # GridWorldSpec owns the size, case and layout rules
            for n in self.sizes:
                for case in self.cases:
                    GridWorldSpec(n, case, self.layout)
            if not self.sizes or not self.cases or not self.methods:
                raise ValueError("sizes, cases and methods must be non-empty")
        if len(self.am_episodes) != 2 or min(self.am_episodes) < 0:
            raise ValueError("am_episodes must be two non-negative counts (G1, G2)")
        if not 0.5 < self.online_strength < 1.0:
            raise ValueError("online_strength must lie in (0.5, 1)")
        for e in self.experiments:
            if e not in AM_EXPERIMENTS:
                raise ValueError(f"AM experiment must be 1, 2 or 3, got {e}")
        object.__setattr__(self, "methods", tuple(m for m in METHODS if m in self.methods))


@dataclass
class BenchResult:
    """Per-episode action counts keyed by (method, case, size_or_geometry).

    Each value is a replications x episodes integer array. For AM runs the
    case field carries the experiment ("exp1", ...).
    """

    cells: dict[tuple[str, str, str], np.ndarray] = field(default_factory=dict)

    def add(self, method: str, case: str, where: str, actions: np.ndarray) -> None:
        self.cells[(method, case, str(where))] = np.asarray(actions, dtype=np.int64)

    def totals(self, method: str, case: str, where) -> np.ndarray:
        return self.cells[(method, case, str(where))].sum(axis=1)

    def mean_total(self, method: str, case: str, where) -> float:
        return float(self.totals(method, case, where).mean())

    def rows(self) -> Iterable[tuple[str, str, str, int, int, int]]:
        for (method, case, where), arr in self.cells.items():
            for r in range(arr.shape[0]):
                for e in range(arr.shape[1]):
                    yield method, case, where, r, e, int(arr[r, e])


def grid_learner(method: str, spec: GridWorldSpec, hp: Hyperparams):
    if method == "rp":
        return RandomPolicy()
    if method == "ql":
        return QLearning(hp.epsilon)
    offline, online = gridworld_priors(spec)
    b1 = hp.betas[0]
    b2 = hp.betas[1] if len(hp.betas) > 1 else b1
    if method == "gl":
        return GLearning(offline, b1)
    return ContinualG((offline, online), (b1, b2))


def run_grid_benchmark(cfg: ExperimentConfig) -> BenchResult:
    hp = cfg.hp
    result = BenchResult()
    for n in cfg.sizes:
        for case in cfg.cases:
            spec = GridWorldSpec(n, case, cfg.layout)
            env = gridworld_new(spec, hp.reward_goal, hp.reward_other)
            for method in cfg.methods:
                learner = grid_learner(method, spec, hp)
                case_key = "-" if method in PRIOR_FREE else case
                runs = np.zeros((hp.replications, hp.episodes), dtype=np.int64)
                for r in range(hp.replications):
                    rng = np.random.default_rng(derive_seed(hp.seed, "grid", method, n, case_key, r))
                    runs[r] = train(env, learner, hp, rng).actions
                result.add(method, case, n, runs)
    return result


def _am_learner(method: str, knowledge, geometry: str, hp: Hyperparams, online=None):
    if method == "ql":
        return QLearning(hp.epsilon)
    priors = [online if k == "online" else am_priors(geometry, k) for k in knowledge]
    b1 = hp.betas[0]
    if method == "gl":
        return GLearning(priors[0], b1)
    b2 = hp.betas[1] if len(hp.betas) > 1 else b1
    return ContinualG(tuple(priors), (b1, b2))


@dataclass
class AmReplication:
    g1_actions: np.ndarray
    g2_actions: np.ndarray
    g1_path: list
    g2_final_state: Optional[int]


def run_am_replication(experiment: int, replication: int, cfg: ExperimentConfig) -> AmReplication:
    """Train on G1, hand its greedy route to G2 as online knowledge, train on G2.

    G1 and G2 streams are keyed by replication and geometry only, so the three
    experiments share random numbers replication by replication.
    """
    hp = cfg.hp
    (m1, k1), (m2, k2) = AM_EXPERIMENTS[experiment]
    g1 = AmProcess(AmProcessSpec("G1"), hp.reward_goal, hp.reward_other)
    g2 = AmProcess(AmProcessSpec("G2"), hp.reward_goal, hp.reward_other)

    hp1 = replace(hp, episodes=cfg.am_episodes[0])
    rng1 = np.random.default_rng(derive_seed(hp.seed, "am", "G1", replication))
    res1 = train(g1, _am_learner(m1, k1, "G1", hp), hp1, rng1)
    _, _, path1 = greedy_rollout(g1, greedy_policy(res1.table.values))

    online = None
    if "online" in k2:
        online = extract_online_prior(lift_path(path1, g1, g2), g2, cfg.online_strength, name="G2-online")
    hp2 = replace(hp, episodes=cfg.am_episodes[1])
    rng2 = np.random.default_rng(derive_seed(hp.seed, "am", "G2", replication))
    res2 = train(g2, _am_learner(m2, k2, "G2", hp, online), hp2, rng2)
    steps, reached, path2 = greedy_rollout(g2, greedy_policy(res2.table.values))
    final = int(g2.model().next_state[path2[-1]]) if path2 else g2.initial_state()
    return AmReplication(res1.actions, res2.actions, path1, final if reached else None)


def run_am_experiment(cfg: ExperimentConfig) -> BenchResult:
    result = BenchResult()
    hp = cfg.hp
    for e in cfg.experiments:
        (m1, _), (m2, _) = AM_EXPERIMENTS[e]
        reps = [run_am_replication(e, r, cfg) for r in range(hp.replications)]
        result.add(m1, f"exp{e}", "G1", np.stack([x.g1_actions for x in reps]))
        result.add(m2, f"exp{e}", "G2", np.stack([x.g2_actions for x in reps]))
    return result


def am_totals(result: BenchResult, experiment: int) -> np.ndarray:
    """Per-replication G1 + G2 action totals for one experiment."""
    case = f"exp{experiment}"
    parts = [arr.sum(axis=1) for (m, c, w), arr in result.cells.items() if c == case]
    return np.sum(parts, axis=0)


@dataclass(frozen=True)
class SummaryRow:
    method: str
    case: str
    where: str
    mean_total: float
    sd_total: float
    curve: tuple[float, ...]


def aggregate(result: BenchResult) -> list[SummaryRow]:
    """Mean and sample sd (n - 1 denominator; 0 for one replication) of totals, plus mean curves.

    Rows are ordered by case, then size/geometry, then method in rp, ql, gl, cgl order.
    """
    if not result.cells:
        return []
    order = {m: k for k, m in enumerate(METHODS)}

    def key(k):
        method, case, where = k
        w = (0, int(where), "") if where.isdigit() else (1, 0, where)
        return (case, w, order.get(method, len(order)), method)

    rows = []
    for k in sorted(result.cells, key=key):
        arr = result.cells[k]
        totals = arr.sum(axis=1).astype(np.float64)
        sd = float(np.std(totals, ddof=1)) if totals.size > 1 else 0.0
        rows.append(SummaryRow(k[0], k[1], k[2], float(totals.mean()), sd,
                               tuple(float(x) for x in arr.mean(axis=0))))
    return rows
