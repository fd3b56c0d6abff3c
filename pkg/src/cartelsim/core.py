"""Agent-population state and the microscopic rules of the game.

Each of the N agents plays two roles at once: as a donator it keeps
directed edges to exactly K rewarders, as a rewarder it carries a
value-for-money strategy w in [0, 1].  Payoffs: a donator earns the sum
of its targets' w; a rewarder with in-degree k earns (1 - w) * k.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _mc


@dataclass
class Population:
    """Mutable state of one simulation run.

    w          -- value for money per agent, float64 in [0, 1]
    out_edges  -- (N, K) int32, each row K distinct non-self rewarder indices
    in_degree  -- int32 count of donators currently choosing each agent
    _w_sum     -- running sum of w as a 1-element array (kernels update it
                  in place); refresh with `refresh_w_sum` to cap fp drift
    """

    w: np.ndarray
    out_edges: np.ndarray
    in_degree: np.ndarray
    _w_sum: np.ndarray = field(repr=False)

    @property
    def N(self) -> int:
        return self.w.shape[0]

    @property
    def K(self) -> int:
        return self.out_edges.shape[1]

    @property
    def w_sum(self) -> float:
        return float(self._w_sum[0])

    @property
    def mean_w(self) -> float:
        return float(self._w_sum[0]) / self.w.shape[0]

    def refresh_w_sum(self) -> None:
        self._w_sum[0] = self.w.sum()

    def recompute_in_degree(self) -> np.ndarray:
        """In-degree recounted from scratch (consistency checks)."""
        return np.bincount(self.out_edges.ravel(), minlength=self.N).astype(np.int32)

    def check_invariants(self) -> None:
        """Raise AssertionError if any structural invariant is violated."""
        N, K = self.N, self.K
        assert self.out_edges.shape == (N, K)
        for i in range(N):
            row = self.out_edges[i]
            assert len(set(row.tolist())) == K, f"duplicate targets for agent {i}"
            assert i not in row, f"self-edge at agent {i}"
        assert int(self.in_degree.sum()) == N * K
        assert np.array_equal(self.recompute_in_degree(), self.in_degree)
        assert np.all((self.w >= 0.0) & (self.w <= 1.0))
        assert abs(self.w_sum - self.w.sum()) <= 1e-9 * N

    def to_csv(self, path) -> None:
        """Debug snapshot: agent_id, w, in_degree."""
        with open(path, "w", newline="\n") as fh:
            fh.write("agent_id,w,in_degree\n")
            for i in range(self.N):
                fh.write(f"{i},{self.w[i]:.17g},{int(self.in_degree[i])}\n")


def donator_payoff(pop: Population, i: int) -> float:
    """Sum of w over i's current targets (in [0, K])."""
    return float(_mc.donator_payoff(pop.w, pop.out_edges, i))


def rewarder_payoff(pop: Population, i: int) -> float:
    """(1 - w_i) * k_i."""
    return (1.0 - float(pop.w[i])) * int(pop.in_degree[i])


def donator_update(pop: Population, state: np.ndarray, i: int) -> bool:
    """One rewiring attempt for agent i; True if an edge moved.

    Never touches any w.
    """
    return bool(_mc.donator_update(pop.w, pop.out_edges, pop.in_degree, state, i))


def rewarder_update(pop: Population, state: np.ndarray, i: int) -> bool:
    """One replication attempt for agent i; True if w_i was overwritten.

    Never touches edges or in-degrees.
    """
    return bool(_mc.rewarder_update(pop.w, pop.in_degree, pop._w_sum, state, i))


def apply_noise(pop: Population, state: np.ndarray) -> None:
    """Give one uniformly chosen agent a fresh uniform w (caller gates with r)."""
    _mc.apply_noise(pop.w, pop._w_sum, state)
