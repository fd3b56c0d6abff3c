"""Time-stepping, initialization, recording, and parallel parameter sweeps.

Time is measured in sweeps: 1 sweep = N elementary updates.  A run is
strictly sequential and bit-reproducible from (params, seed); sweeps
fan independent cells out over processes and reassemble rows in a
deterministic order regardless of worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import _mc
from .core import Population

# refresh the running w-sum from scratch this often to cap fp drift
_WSUM_REFRESH_SWEEPS = 1_000_000

W_INIT_CHOICES = ("uniform", "ones")


@dataclass(frozen=True)
class SimParams:
    """Parameters of one run; validated on construction."""

    N: int
    K: int
    a: float
    r: float
    seed: int
    burn_in_sweeps: int = 1000
    measure_sweeps: int = 10000
    record_every_sweeps: int = 1
    w_init: str = "uniform"

    def __post_init__(self):
        if self.N < 2:
            raise ValueError(f"N must be >= 2, got {self.N}")
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if self.K > self.N - 2:
            raise ValueError(f"K must be <= N-2 so a replacement candidate always exists, got K={self.K}, N={self.N}")
        if not 0.0 <= self.a <= 1.0:
            raise ValueError(f"a must be in [0, 1], got {self.a}")
        if not 0.0 <= self.r <= 1.0:
            raise ValueError(f"r must be in [0, 1], got {self.r}")
        if self.burn_in_sweeps < 0:
            raise ValueError(f"burn_in_sweeps must be >= 0, got {self.burn_in_sweeps}")
        if self.measure_sweeps < 0:
            raise ValueError(f"measure_sweeps must be >= 0, got {self.measure_sweeps}")
        if self.record_every_sweeps < 1:
            raise ValueError(f"record_every_sweeps must be >= 1, got {self.record_every_sweeps}")
        if self.w_init not in W_INIT_CHOICES:
            raise ValueError(f"w_init must be one of {W_INIT_CHOICES}, got {self.w_init!r}")


@dataclass
class TimeSeries:
    """Uniformly sampled <w> sequence; times are in sweeps since run start."""

    sample_period_sweeps: int
    values: np.ndarray
    start_sweep: int

    def sweeps(self) -> np.ndarray:
        return self.start_sweep + self.sample_period_sweeps * np.arange(len(self.values))


@dataclass
class DegreeHistogram:
    """In-degree counts accumulated over snapshots.

    counts[k] is the number of (agent, snapshot) pairs with in-degree k.
    """

    counts: np.ndarray
    n_snapshots: int

    def as_dict(self) -> dict[int, int]:
        return {int(k): int(c) for k, c in enumerate(self.counts) if c > 0}

    def total(self) -> int:
        return int(self.counts.sum())


@dataclass
class RunResult:
    timeseries: TimeSeries
    degree_histogram: DegreeHistogram
    mean_w_time_avg: float
    variance_of_mean_w: float
    params: SimParams
    seed: int
    final_in_degree: np.ndarray = field(repr=False, default=None)


@dataclass
class SweepRow:
    K: int
    a: float
    seed: int
    mean_w: float
    var_w: float
    error: str | None = None


def init_population(params: SimParams, state: np.ndarray) -> Population:
    """Fresh population: w per params.w_init, K distinct non-self targets each.

    The w draw happens before the edge draw on the same stream.
    """
    N, K = params.N, params.K
    w = np.empty(N, dtype=np.float64)
    if params.w_init == "ones":
        w[:] = 1.0
    else:
        _mc.init_uniform_w(w, state)
    out_edges = np.empty((N, K), dtype=np.int32)
    _mc.init_edges(out_edges, state)
    in_degree = np.bincount(out_edges.ravel(), minlength=N).astype(np.int32)
    return Population(w=w, out_edges=out_edges, in_degree=in_degree,
                      _w_sum=np.array([w.sum()]))


def step(pop: Population, params: SimParams, state: np.ndarray) -> int:
    """One elementary update; returns an outcome code from `_mc`.

    With probability r an agent is first hit by noise, then a uniformly
    chosen agent updates its rewarder strategy (probability a) or its
    donator strategy (otherwise).
    """
    return int(_mc.step(pop.w, pop.out_edges, pop.in_degree, pop._w_sum,
                        state, params.a, params.r))


def run(params: SimParams, entropy=None) -> RunResult:
    """Burn in, then measure, recording <w> and in-degree snapshots.

    `entropy` overrides params.seed as the stream seed (used by sweep to
    hand each cell an independently mixed stream); rows and results echo
    params.seed either way.
    """
    state = _mc.state_from_entropy(params.seed if entropy is None else entropy)
    pop = init_population(params, state)
    N = params.N

    sweeps_done = 0

    def advance(n_sweeps: int) -> None:
        nonlocal sweeps_done
        _mc.run_steps(pop.w, pop.out_edges, pop.in_degree, pop._w_sum,
                      state, n_sweeps * N, params.a, params.r)
        sweeps_done += n_sweeps
        if sweeps_done % _WSUM_REFRESH_SWEEPS < n_sweeps and sweeps_done >= _WSUM_REFRESH_SWEEPS:
            pop.refresh_w_sum()

    advance(params.burn_in_sweeps)

    period = params.record_every_sweeps
    n_samples = params.measure_sweeps // period
    values = np.empty(n_samples)
    counts = np.zeros(16, dtype=np.int64)
    for s in range(n_samples):
        advance(period)
        values[s] = pop.mean_w
        snap = np.bincount(pop.in_degree)
        if snap.shape[0] > counts.shape[0]:
            counts = np.concatenate([counts, np.zeros(snap.shape[0] - counts.shape[0], dtype=np.int64)])
        counts[: snap.shape[0]] += snap

    ts = TimeSeries(sample_period_sweeps=period, values=values,
                    start_sweep=params.burn_in_sweeps + period)
    hist = DegreeHistogram(counts=counts, n_snapshots=n_samples)
    mean = float(values.mean()) if n_samples else float("nan")
    var = float(values.var()) if n_samples else float("nan")
    return RunResult(timeseries=ts, degree_histogram=hist,
                     mean_w_time_avg=mean, variance_of_mean_w=var,
                     params=params, seed=params.seed,
                     final_in_degree=pop.in_degree.copy())


def cell_entropy(base_seed: int, k_index: int, a_index: int, replicate_seed: int) -> tuple:
    """Documented seed-mixing input for one sweep cell.

    The tuple goes through numpy's SeedSequence, so any two cells that
    differ in grid position or replicate get independent streams.
    """
    mask = (1 << 64) - 1
    return (base_seed & mask, k_index, a_index, replicate_seed & mask)


def _run_cell(args) -> tuple[int, float, int, float, float, str | None]:
    k_index, a_index, K, a, rep_seed, base = args
    try:
        params = replace(base, K=K, a=a, seed=rep_seed)
        res = run(params, entropy=cell_entropy(base.seed, k_index, a_index, rep_seed))
        return (K, a, rep_seed, res.mean_w_time_avg, res.variance_of_mean_w, None)
    except Exception as exc:  # noqa: BLE001 - cell failures must not kill the sweep
        return (K, a, rep_seed, float("nan"), float("nan"), f"{type(exc).__name__}: {exc}")


def sweep(base: SimParams, K_list: Sequence[int], a_list: Sequence[float],
          seeds: Sequence[int], workers: int | None = None,
          progress: Callable[[int, int], None] | None = None) -> list[SweepRow]:
    """Run every (K, a, seed) cell independently; rows sorted by (K, a, seed).

    Output is identical for any worker count; failed cells carry an
    error string and NaN observables instead of aborting the sweep.
    """
    if not K_list or not a_list or not seeds:
        raise ValueError("K_list, a_list and seeds must be nonempty")
    cells = [(ki, ai, int(K), float(a), int(s), base)
             for ki, K in enumerate(K_list)
             for ai, a in enumerate(a_list)
             for s in seeds]
    if workers is None:
        import os
        workers = os.cpu_count() or 1
    results = []
    if workers <= 1 or len(cells) == 1:
        for n, cell in enumerate(cells):
            results.append(_run_cell(cell))
            if progress:
                progress(n + 1, len(cells))
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(cells))) as pool:
            for n, row in enumerate(pool.map(_run_cell, cells)):
                results.append(row)
                if progress:
                    progress(n + 1, len(cells))
    rows = [SweepRow(K=r[0], a=r[1], seed=r[2], mean_w=r[3], var_w=r[4], error=r[5])
            for r in results]
    rows.sort(key=lambda row: (row.K, row.a, row.seed))
    return rows
