"""Randomized properties of the soft operators, priors and environments."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cgl import ContinualG, Hyperparams, PriorPolicy, PriorViolation, Transition, ValueTable, train
from cgl.learners import cg_update, epsilon_greedy_distribution, policy_cg, soft_backup
from cgl.core import validate_prior
from cgl.envs import GridWorldSpec, gridworld_new, gridworld_priors
from cgl.planner import greedy_policy

A = 4
finite = st.floats(-1e3, 1e3, allow_nan=False)
betas_st = st.lists(st.floats(-1e6, -1e-2), min_size=1, max_size=3)


@st.composite
def prior_rows(draw, m):
    w = draw(arrays(np.float64, (m, A), elements=st.floats(0.01, 1.0)))
    return w / w.sum(axis=1, keepdims=True)


@st.composite
def soft_case(draw):
    betas = draw(betas_st)
    rows = draw(prior_rows(len(betas)))
    cg = draw(arrays(np.float64, A, elements=finite))
    return cg, rows, betas


@settings(max_examples=300, deadline=None)
@given(soft_case())
def test_policy_is_a_distribution(case):
    cg, rows, betas = case
    pi = policy_cg(cg, rows, betas)
    assert np.all(np.isfinite(pi)) and np.all(pi >= 0)
    assert abs(pi.sum() - 1.0) <= 1e-12


@settings(max_examples=300, deadline=None)
@given(soft_case(), st.floats(-1e3, 1e3))
def test_policy_shift_invariant(case, c):
    cg, rows, betas = case
    np.testing.assert_allclose(policy_cg(cg + c, rows, betas), policy_cg(cg, rows, betas), atol=1e-9)


@settings(max_examples=300, deadline=None)
@given(soft_case(), st.floats(-1e3, 1e3), st.floats(0.0, 1.0))
def test_soft_backup_shift(case, c, gamma):
    cg, rows, betas = case
    lhs = soft_backup(cg + c, rows, betas, gamma)
    rhs = soft_backup(cg, rows, betas, gamma) + gamma * c
    assert lhs == pytest.approx(rhs, abs=1e-9 * (1 + abs(c) + np.abs(cg).max()))


@settings(max_examples=300, deadline=None)
@given(soft_case(), arrays(np.float64, A, elements=st.floats(0, 1e3)), st.floats(0.0, 1.0))
def test_soft_backup_monotone_and_bounded(case, bump, gamma):
    cg, rows, betas = case
    v = soft_backup(cg, rows, betas, gamma)
    slack = 1e-9 * (1 + np.abs(cg).max() + bump.max())
    assert np.isfinite(v)
    assert soft_backup(cg + bump, rows, betas, gamma) >= v - slack
    # the combined prior is a weighted geometric mean, so its mass is at most 1
    assert v <= gamma * cg.max() + slack


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 5), st.data())
def test_validate_prior_bounds(num_states, data):
    rows = data.draw(prior_rows(num_states))
    validate_prior(PriorPolicy(rows))
    s = data.draw(st.integers(0, num_states - 1))
    a = data.draw(st.integers(0, A - 1))
    bad = rows.copy()
    bad[s] = 0.0
    bad[s, a] = 1.0
    with pytest.raises(PriorViolation) as exc:
        validate_prior(PriorPolicy(bad))
    assert exc.value.state == s


@settings(max_examples=200, deadline=None)
@given(st.integers(5, 12), st.sampled_from("ab"), st.data())
def test_grid_step_deterministic(n, case, data):
    env = gridworld_new(GridWorldSpec(n, case))
    model = env.model()
    s = data.draw(st.integers(0, model.num_states - 1))
    a = data.draw(st.integers(0, A - 1))
    t1, t2 = env.step(s, a), env.step(s, a)
    assert t1 == t2
    if not model.terminal[s]:
        assert t1.next_state == model.next_state[s, a] and t1.reward == model.reward[s, a]


@settings(max_examples=200, deadline=None)
@given(arrays(np.int64, (6, A), elements=st.integers(-1000, 1000), unique=True),
       st.floats(1e-3, 1e3), st.floats(-1e3, 1e3))
def test_greedy_policy_affine_invariant(cg, scale, shift):
    cg = cg.astype(np.float64)
    np.testing.assert_array_equal(greedy_policy(scale * cg + shift), greedy_policy(cg))
    tied = np.zeros((2, A))
    tied[1, 1:] = 5.0
    np.testing.assert_array_equal(greedy_policy(scale * tied + shift), [0, 1])


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, A, elements=finite), st.floats(0.0, 1.0), st.sampled_from(["lowest", "split"]))
def test_epsilon_greedy_mass(q, eps, tie):
    d = epsilon_greedy_distribution(q, eps, tie)
    assert abs(d.sum() - 1.0) <= 1e-12
    assert np.all(d >= eps / A - 1e-15)
    best = np.flatnonzero(q == q.max())
    share = 1.0 / best.size if tie == "split" else float(best[0] == np.argmax(q))
    assert d[np.argmax(q)] >= (1 - eps) * share + eps / A - 1e-12


@settings(max_examples=200, deadline=None)
@given(soft_case(), st.floats(-1e3, 1e3), st.booleans())
def test_first_visit_update_equals_target(case, reward, terminal):
    cg, rows, betas = case
    priors = [PriorPolicy(np.tile(r, (2, 1))) for r in rows]
    table = ValueTable(2, A)
    table.values[1] = cg
    table.visits[0, 2] = 1
    hp = Hyperparams(betas=betas)
    new = cg_update(table, Transition(0, 2, reward, 1, terminal), priors, hp)
    expect = reward if terminal else reward + soft_backup(cg, rows, betas, hp.gamma)
    assert new == expect


def test_extreme_betas_and_rewards_stay_finite():
    spec = GridWorldSpec(6, "b")
    env = gridworld_new(spec, reward_goal=1e3, reward_other=-1e3)
    hp = Hyperparams(betas=(-1e6, -1e6), episodes=30)
    table, logs = train(env, ContinualG(gridworld_priors(spec), hp.betas), hp, np.random.default_rng(0))
    assert table.is_finite() and len(logs) == 30
    hp = Hyperparams(betas=(-1e-2, -1e-2), episodes=30)
    table, _ = train(env, ContinualG(gridworld_priors(spec), hp.betas), hp, np.random.default_rng(0))
    assert table.is_finite()
