import itertools
from collections import deque

import numpy as np
import pytest

from cgl import _kernels, learners
from cgl.bench import derive_seed
from cgl.checks import check_environments, random_policy_table, random_prior_table
from cgl.core import PriorPolicy
from cgl.envs import AmProcess, AmProcessSpec, GridWorldSpec, am_priors, gridworld_new, gridworld_priors
from cgl.envs.base import ExplicitModel
from cgl.planner import (
    ConvergenceError,
    apply_b_pi,
    apply_b_star,
    apply_bellman_max,
    bfs_shortest,
    contraction_ratio,
    greedy_policy,
    greedy_rollout,
    soft_policy_table,
    solve_fixed_point,
)

ENVS = check_environments()


def random_model(rng, n_states=4, n_actions=3):
    next_state = rng.integers(0, n_states, size=(n_states, n_actions))
    terminal = np.zeros(n_states, dtype=bool)
    terminal[-1] = True
    reward = np.where(terminal[next_state], 1.0, rng.uniform(-0.2, 0.2, size=(n_states, n_actions)))
    next_state[0, 0] = n_states - 1  # goal reachable
    reward[0, 0] = 1.0
    return ExplicitModel(next_state, reward, terminal, 0)


def brute_force_q(model, gamma):
    """Best deterministic policy by enumeration, each evaluated with a linear solve."""
    S, A = model.next_state.shape
    live = [s for s in range(S) if not model.terminal[s]]
    best = None
    for choice in itertools.product(range(A), repeat=len(live)):
        pol = dict(zip(live, choice))
        P = np.zeros((S, S))
        r = np.zeros(S)
        for s in live:
            ns = model.next_state[s, pol[s]]
            r[s] = model.reward[s, pol[s]]
            if not model.terminal[ns]:
                P[s, ns] = 1.0
        v = np.linalg.solve(np.eye(S) - gamma * P, r)
        best = v if best is None else np.maximum(best, v)
    cont = np.where(model.terminal[model.next_state], 0.0, best[model.next_state])
    q = model.reward + gamma * cont
    q[model.terminal] = 0.0
    return q


def cell_bfs(n):
    blocked = {(2, j) for j in range(1, n)} | {(4, j) for j in range(2, n + 1)}
    dist = {(1, 1): 0}
    q = deque([(1, 1)])
    while q:
        c = q.popleft()
        for d in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nc = (c[0] + d[0], c[1] + d[1])
            if 1 <= nc[0] <= n and 1 <= nc[1] <= n and nc not in blocked and nc not in dist:
                dist[nc] = dist[c] + 1
                q.append(nc)
    return dist[(n, n)]


# ---- B^pi -------------------------------------------------------------------

@pytest.mark.parametrize("name", list(ENVS))
def test_b_pi_gamma_zero_is_reward(name):
    model = ENVS[name]
    rng = np.random.default_rng(1)
    S, A = model.next_state.shape
    pri = [random_prior_table(rng, S, A) for _ in range(2)]
    out = apply_b_pi(model, random_policy_table(rng, S, A), pri, (-5, -7), rng.normal(size=(S, A)), 0.0)
    expect = np.where(model.terminal[:, None], 0.0, model.reward)
    np.testing.assert_array_equal(out, expect)


def test_b_pi_with_pi_equal_priors_is_plain_evaluation():
    model = ENVS["grid6a"]
    rng = np.random.default_rng(2)
    S, A = model.next_state.shape
    rho = random_prior_table(rng, S, A)
    cg = rng.normal(size=(S, A))
    out = apply_b_pi(model, rho.probs, [rho, rho], (-3, -4), cg, 0.9)
    expect = np.zeros((S, A))
    for s in range(S):
        for a in range(A):
            if model.terminal[s]:
                continue
            ns = model.next_state[s, a]
            cont = 0.0 if model.terminal[ns] else float(rho.probs[ns] @ cg[ns])
            expect[s, a] = model.reward[s, a] + 0.9 * cont
    np.testing.assert_allclose(out, expect, atol=1e-14)


@pytest.mark.parametrize("name", list(ENVS))
@pytest.mark.parametrize("op", ["pi", "star"])
def test_contraction_thousand_trials(name, op):
    model = ENVS[name]
    rng = np.random.default_rng(derive_seed(0, name, op))
    S, A = model.next_state.shape
    for _ in range(1000):
        pri = [random_prior_table(rng, S, A) for _ in range(2)]
        betas = -rng.uniform(0.5, 3000, 2)
        scale = rng.uniform(0.01, 10)
        lhs, dist = contraction_ratio(model, random_policy_table(rng, S, A), pri, betas,
                                      rng.normal(0, scale, (S, A)), rng.normal(0, scale, (S, A)), 0.9, op)
        assert lhs <= 0.9 * dist + 1e-9


@pytest.mark.parametrize("name", list(ENVS))
def test_b_star_monotone(name):
    model = ENVS[name]
    rng = np.random.default_rng(3)
    S, A = model.next_state.shape
    for _ in range(300):
        pri = [random_prior_table(rng, S, A) for _ in range(2)]
        betas = -rng.uniform(0.5, 3000, 2)
        lo = rng.normal(size=(S, A))
        hi = lo + rng.uniform(0, 1, (S, A))
        assert np.all(apply_b_star(model, pri, betas, lo, 0.9) <= apply_b_star(model, pri, betas, hi, 0.9) + 1e-12)


@pytest.mark.parametrize("name", list(ENVS))
def test_b_star_equals_b_pi_at_soft_policy(name):
    model = ENVS[name]
    rng = np.random.default_rng(4)
    S, A = model.next_state.shape
    for _ in range(100):
        pri = [random_prior_table(rng, S, A) for _ in range(2)]
        betas = -rng.uniform(0.5, 50, 2)
        cg = rng.normal(size=(S, A))
        pi = soft_policy_table(cg, pri, betas)
        np.testing.assert_allclose(apply_b_star(model, pri, betas, cg, 0.9),
                                   apply_b_pi(model, pi, pri, betas, cg, 0.9), atol=1e-10, rtol=0)


@pytest.mark.parametrize("name", list(ENVS))
def test_b_star_hard_limit(name):
    model = ENVS[name]
    rng = np.random.default_rng(5)
    S, A = model.next_state.shape
    for _ in range(50):
        pri = [random_prior_table(rng, S, A) for _ in range(2)]
        cg = rng.uniform(0, 10, (S, A))
        soft = apply_b_star(model, pri, (-1e8, -1e8), cg, 0.9)
        assert np.max(np.abs(soft - apply_bellman_max(model, cg, 0.9))) <= 1e-4


def test_b_star_trivial_fixed_point():
    env = gridworld_new(GridWorldSpec(6, "a"), reward_goal=0.0)
    uni = PriorPolicy.uniform(26, 4)
    assert not apply_b_star(env, [uni, uni], (-2000, -2000), np.zeros((26, 4)), 0.9).any()


# ---- fixed point ------------------------------------------------------------

def test_fixed_point_grid_greedy_matches_bfs():
    spec = GridWorldSpec(6, "a")
    env = gridworld_new(spec)
    rep = solve_fixed_point(env, gridworld_priors(spec), (-2000, -2000), 0.9, tol=1e-10)
    assert rep.residual <= 1e-10
    steps, reached, _ = greedy_rollout(env, greedy_policy(rep.cg_star))
    assert reached and steps == bfs_shortest(env)[0] == 20


def test_fixed_point_two_state_chain():
    model = ExplicitModel(np.array([[1, 0], [1, 1]]), np.array([[1.0, 0.0], [0.0, 0.0]]),
                          np.array([False, True]), 0)
    uni = PriorPolicy.uniform(2, 2)
    rep = solve_fixed_point(model, [uni], (-50.0,), 0.9)
    assert rep.cg_star[0, 0] == 1.0
    assert not rep.cg_star[1].any()


@pytest.mark.parametrize("geometry", ["G1", "G2"])
def test_fixed_point_am(geometry):
    env = AmProcess(AmProcessSpec(geometry))
    priors = [am_priors(geometry, "offline")]
    rep = solve_fixed_point(env, priors, (-700.0,), 0.9)
    assert rep.residual <= 1e-10
    steps, reached, _ = greedy_rollout(env, greedy_policy(rep.cg_star))
    assert reached and steps == bfs_shortest(env)[0]


def test_fixed_point_sweeps_logarithmic():
    spec = GridWorldSpec(8, "b")
    env = gridworld_new(spec)
    rep = solve_fixed_point(env, gridworld_priors(spec), (-2000, -2000), 0.9, tol=1e-10)
    assert rep.iterations <= np.log(1e10 * 10) / np.log(1 / 0.9) + 5


def test_fixed_point_errors():
    spec = GridWorldSpec(6, "a")
    env = gridworld_new(spec)
    with pytest.raises(ConvergenceError) as err:
        solve_fixed_point(env, gridworld_priors(spec), (-2000, -2000), 0.9, max_sweeps=3)
    assert err.value.report.iterations == 3 and err.value.report.residual > 1e-10
    with pytest.raises(ValueError):
        solve_fixed_point(env, gridworld_priors(spec), (-2000, -2000), 1.0)


@pytest.mark.parametrize("seed", range(5))
def test_hard_backup_iteration_matches_brute_force(seed):
    model = random_model(np.random.default_rng(seed))
    q = np.zeros(model.next_state.shape)
    for _ in range(400):
        q = apply_bellman_max(model, q, 0.9)
    np.testing.assert_allclose(q, brute_force_q(model, 0.9), atol=1e-8)


def test_hard_backup_am_g1_brute_force():
    model = ENVS["amG1"]
    q = np.zeros(model.next_state.shape)
    for _ in range(400):
        q = apply_bellman_max(model, q, 0.9)
    np.testing.assert_allclose(q, brute_force_q(model, 0.9), atol=1e-8)


# ---- BFS and greedy ------------------------------------------------------------

@pytest.mark.parametrize("n", range(5, 13))
def test_bfs_matches_cell_flood_fill(n):
    env = gridworld_new(GridWorldSpec(n, "a"))
    length, path = bfs_shortest(env)
    assert length == cell_bfs(n) == len(path) >= 2 * (n - 1)
    s = env.initial_state()
    for ps, a in path:
        assert ps == s
        s = env.step(s, a).next_state
    assert env.is_terminal(s)


def test_bfs_values():
    assert bfs_shortest(gridworld_new(GridWorldSpec(6, "a")))[0] == 20
    assert [bfs_shortest(gridworld_new(GridWorldSpec(n, "b")))[0] for n in (7, 8, 9, 10)] == [24, 28, 32, 36]
    assert bfs_shortest(AmProcess(AmProcessSpec("G1")))[0] == 2
    g2 = AmProcess(AmProcessSpec("G2"))
    length, path = bfs_shortest(g2)
    assert length == 1 and path == [(g2.initial_state(), g2.action_of("fan", 2))]


def test_bfs_unreachable_and_trivial():
    stuck = ExplicitModel(np.array([[0, 0], [1, 1]]), np.zeros((2, 2)), np.array([False, True]), 0)
    with pytest.raises(ValueError):
        bfs_shortest(stuck)
    done = ExplicitModel(np.array([[0]]), np.zeros((1, 1)), np.array([True]), 0)
    assert bfs_shortest(done) == (0, [])


def test_bfs_never_touches_soft_code(monkeypatch):
    def boom(*a, **k):
        raise AssertionError("soft backup used by the BFS oracle")

    for mod, name in ((_kernels, "soft_value_row"), (_kernels, "b_star_sweep"), (learners, "soft_backup"),
                      (learners, "policy_cg")):
        monkeypatch.setattr(mod, name, boom)
    assert bfs_shortest(gridworld_new(GridWorldSpec(7, "b")))[0] == 24


def test_greedy_policy_rules():
    assert not greedy_policy(np.zeros((5, 4))).any()
    rng = np.random.default_rng(6)
    cg = rng.normal(size=(10, 4))
    np.testing.assert_array_equal(greedy_policy(cg), greedy_policy(cg * 3.7))
    assert greedy_policy(np.array([[0.1, 0.5, 0.5, 0.2]]))[0] == 1


def test_greedy_am_g1_on_optimal_path():
    env = AmProcess(AmProcessSpec("G1"))
    rep = solve_fixed_point(env, [am_priors("G1", "offline")], (-700.0,), 0.9)
    pol = greedy_policy(rep.cg_star)
    first = pol[env.initial_state()]
    assert env.action_names[first] in ("flow->2", "speed->2")
    steps, reached, _ = greedy_rollout(env, pol)
    assert reached and steps == 2


def test_greedy_rollout_stops_on_loop():
    env = gridworld_new(GridWorldSpec(6, "a"))
    steps, reached, path = greedy_rollout(env, np.zeros(26, dtype=int))
    assert not reached and steps == 1 and path == [(env.initial_state(), 0)]
