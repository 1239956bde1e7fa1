"""Compiled row kernels and the episode loop.

Everything here works on plain arrays so that the learners and the planner
share one implementation of the soft backup. The combined log-prior row
``lp`` is ``sum_i (h / beta_i) * log(rho_i)`` and ``scale`` is ``|h|`` where
``h = 1 / sum_i (1 / beta_i)`` (negative when every beta is negative).
"""

import numpy as np
from numba import njit

RANDOM = 0
QLEARN = 1
SOFT = 2


@njit(cache=True)
def soft_value_row(cg_row, lp_row, scale):
    # (1/scale) * log sum_a exp(lp_a + scale * cg_a), shifted twice for range safety
    m = cg_row[0]
    for a in range(1, cg_row.shape[0]):
        if cg_row[a] > m:
            m = cg_row[a]
    zmax = -np.inf
    for a in range(cg_row.shape[0]):
        z = lp_row[a] + scale * (cg_row[a] - m)
        if z > zmax:
            zmax = z
    acc = 0.0
    for a in range(cg_row.shape[0]):
        acc += np.exp(lp_row[a] + scale * (cg_row[a] - m) - zmax)
    return m + (zmax + np.log(acc)) / scale


@njit(cache=True)
def policy_row(cg_row, lp_row, scale, out):
    m = cg_row[0]
    for a in range(1, cg_row.shape[0]):
        if cg_row[a] > m:
            m = cg_row[a]
    zmax = -np.inf
    for a in range(cg_row.shape[0]):
        z = lp_row[a] + scale * (cg_row[a] - m)
        out[a] = z
        if z > zmax:
            zmax = z
    acc = 0.0
    for a in range(cg_row.shape[0]):
        out[a] = np.exp(out[a] - zmax)
        acc += out[a]
    for a in range(cg_row.shape[0]):
        out[a] /= acc


@njit(cache=True)
def eps_greedy_row(q_row, epsilon, split_ties, out):
    n = q_row.shape[0]
    m = q_row[0]
    for a in range(1, n):
        if q_row[a] > m:
            m = q_row[a]
    n_best = 0
    for a in range(n):
        if q_row[a] == m:
            n_best += 1
    first = True
    for a in range(n):
        out[a] = epsilon / n
        if q_row[a] == m:
            if split_ties:
                out[a] += (1.0 - epsilon) / n_best
            elif first:
                out[a] += 1.0 - epsilon
            first = False


@njit(cache=True)
def sample_index(probs, u):
    # inverse CDF in ascending action order
    acc = 0.0
    last = 0
    for a in range(probs.shape[0]):
        if probs[a] > 0.0:
            last = a
        acc += probs[a]
        if u < acc:
            return a
    return last


@njit(cache=True)
def row_max(row):
    m = row[0]
    for a in range(1, row.shape[0]):
        if row[a] > m:
            m = row[a]
    return m


@njit(cache=True)
def blend(old, alpha, target):
    return (1.0 - alpha) * old + alpha * target


@njit(cache=True)
def run_episode(kind, values, visits, next_state, reward, terminal, lp, scale,
                gamma, w, epsilon, split_ties, s0, iter_max, uniforms,
                rec_s, rec_a, rec_r, rec_ns):
    """One episode; returns (actions_taken, reached_goal).

    ``rec_*`` arrays of length >= iter_max receive the trajectory when they
    are non-empty.
    """
    if terminal[s0]:
        return 0, True
    n_actions = values.shape[1]
    probs = np.empty(n_actions)
    record = rec_s.shape[0] > 0
    s = s0
    it = 0
    while it < iter_max:
        if kind == RANDOM:
            for a in range(n_actions):
                probs[a] = 1.0 / n_actions
        elif kind == QLEARN:
            eps_greedy_row(values[s], epsilon, split_ties, probs)
        else:
            policy_row(values[s], lp[s], scale, probs)
        a = sample_index(probs, uniforms[it])
        ns = next_state[s, a]
        r = reward[s, a]
        done = terminal[ns]
        if kind != RANDOM:
            visits[s, a] += 1
            alpha = float(visits[s, a]) ** (-w)
            if done:
                target = r
            elif kind == QLEARN:
                target = r + gamma * row_max(values[ns])
            else:
                target = r + gamma * soft_value_row(values[ns], lp[ns], scale)
            values[s, a] = blend(values[s, a], alpha, target)
        if record:
            rec_s[it] = s
            rec_a[it] = a
            rec_r[it] = r
            rec_ns[it] = ns
        it += 1
        s = ns
        if done:
            return it, True
    return it, False


@njit(cache=True)
def b_star_sweep(values, next_state, reward, terminal, lp, scale, gamma, out):
    n_states, n_actions = values.shape
    soft = np.empty(n_states)
    for s in range(n_states):
        soft[s] = soft_value_row(values[s], lp[s], scale)
    for s in range(n_states):
        for a in range(n_actions):
            ns = next_state[s, a]
            if terminal[s]:
                out[s, a] = 0.0
            elif terminal[ns]:
                out[s, a] = reward[s, a]
            else:
                out[s, a] = reward[s, a] + gamma * soft[ns]
