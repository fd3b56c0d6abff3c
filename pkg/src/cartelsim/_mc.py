"""Compiled Monte Carlo internals: PRNG and the elementary update rules.

Everything here operates on raw numpy arrays so the same jitted rule
functions serve both the Python-facing API in `core` and the fused
simulation loop in `engine`.

The generator is xoshiro256++ (4 x uint64 state), seeded through
numpy's SeedSequence so that seeds and seed mixing are well distributed.
Bounded integers are drawn as floor(u * n) from a 53-bit uniform; the
bias is O(n * 2**-53), irrelevant for any population size we support.
"""

from __future__ import annotations

import numpy as np
from numba import njit, uint64

# elementary-update outcome codes returned by step()
DONATOR_KEPT = 0
DONATOR_REWIRED = 1
REWARDER_KEPT = 2
REWARDER_COPIED = 3


def state_from_entropy(entropy) -> np.ndarray:
    """xoshiro256++ state from an int seed or a sequence of ints.

    SeedSequence is the documented mixing function: independent streams
    for sweep cells are derived from (base seed, K index, a index,
    replicate seed) tuples.
    """
    seq = np.random.SeedSequence(entropy)
    state = seq.generate_state(4, np.uint64)
    if not state.any():  # xoshiro must not start from the all-zero state
        state[0] = np.uint64(0x9E3779B97F4A7C15)
    return state


@njit(cache=True, inline="always")
def _rotl(x, k):
    return (x << k) | (x >> (uint64(64) - k))


@njit(cache=True, inline="always")
def next_u64(state):
    result = _rotl(state[0] + state[3], uint64(23)) + state[0]
    t = state[1] << uint64(17)
    state[2] ^= state[0]
    state[3] ^= state[1]
    state[1] ^= state[2]
    state[0] ^= state[3]
    state[2] ^= t
    state[3] = _rotl(state[3], uint64(45))
    return result


@njit(cache=True, inline="always")
def next_uniform(state):
    """Uniform float64 in [0, 1)."""
    return (next_u64(state) >> uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True, inline="always")
def next_below(state, n):
    """Uniform integer in [0, n)."""
    return int(next_uniform(state) * n)


@njit(cache=True)
def donator_payoff(w, out_edges, i):
    total = 0.0
    for s in range(out_edges.shape[1]):
        total += w[out_edges[i, s]]
    return total


@njit(cache=True, inline="always")
def donator_update(w, out_edges, in_degree, state, i):
    """Rewire one of i's edges to a random non-neighbour l if w_l >= w_j.

    Ties replace (the challenger wins). Candidates are rejection-sampled
    over the whole population, excluding i itself and all current
    targets; K <= N-2 guarantees termination.
    """
    N = w.shape[0]
    K = out_edges.shape[1]
    slot = 0 if K == 1 else next_below(state, K)
    j = out_edges[i, slot]
    while True:
        cand = next_below(state, N)
        if cand == i:
            continue
        taken = False
        for t in range(K):
            if out_edges[i, t] == cand:
                taken = True
                break
        if not taken:
            break
    if w[cand] >= w[j]:
        out_edges[i, slot] = cand
        in_degree[j] -= 1
        in_degree[cand] += 1
        return True
    return False


@njit(cache=True, inline="always")
def rewarder_update(w, in_degree, w_sum, state, i):
    """Copy w from a random other agent j when (1-w_j)k_j >= (1-w_i)k_i."""
    N = w.shape[0]
    j = next_below(state, N)
    while j == i:
        j = next_below(state, N)
    if (1.0 - w[j]) * in_degree[j] >= (1.0 - w[i]) * in_degree[i]:
        w_sum[0] += w[j] - w[i]
        w[i] = w[j]
        return True
    return False


@njit(cache=True, inline="always")
def apply_noise(w, w_sum, state):
    """Reset a uniformly chosen agent's w to a uniform draw in [0, 1)."""
    m = next_below(state, w.shape[0])
    new_w = next_uniform(state)
    w_sum[0] += new_w - w[m]
    w[m] = new_w


@njit(cache=True, inline="always")
def step(w, out_edges, in_degree, w_sum, state, a, r):
    """One elementary update; returns the outcome code."""
    if r > 0.0 and next_uniform(state) < r:
        apply_noise(w, w_sum, state)
    i = next_below(state, w.shape[0])
    if next_uniform(state) < a:
        if rewarder_update(w, in_degree, w_sum, state, i):
            return REWARDER_COPIED
        return REWARDER_KEPT
    if donator_update(w, out_edges, in_degree, state, i):
        return DONATOR_REWIRED
    return DONATOR_KEPT


@njit(cache=True)
def run_steps(w, out_edges, in_degree, w_sum, state, n_steps, a, r):
    """Fused hot loop: n_steps elementary updates."""
    for _ in range(n_steps):
        step(w, out_edges, in_degree, w_sum, state, a, r)


@njit(cache=True)
def init_edges(out_edges, state):
    """Fill each row with K distinct non-self targets, uniformly."""
    N, K = out_edges.shape
    for i in range(N):
        for s in range(K):
            while True:
                cand = next_below(state, N)
                if cand == i:
                    continue
                dup = False
                for t in range(s):
                    if out_edges[i, t] == cand:
                        dup = True
                        break
                if not dup:
                    break
            out_edges[i, s] = cand


@njit(cache=True)
def init_uniform_w(w, state):
    for i in range(w.shape[0]):
        w[i] = next_uniform(state)
