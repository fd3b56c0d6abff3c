"""Deterministic integration of the full mean-field evolution of P(k, w).

The density lives on a (k_max+1) x N_w grid: integer in-degree k and
N_w strategy values uniform on [0, 1].  The right-hand side is

    dP/dt = a * gamma(k, w) + (1 - a) * xi(k, w)

where gamma moves mass between strategy columns at fixed k (replication)
and xi moves mass along k at fixed w (donators rewiring).

Replication thresholds are evaluated in exact integer arithmetic:
with c_j = (N_w - 1) * (1 - w_j) an integer, an agent of class (k, w_src)
adopts strategy w_dst on meeting mass at (k'', w_dst) iff

    k'' * c_dst >= k * c_src,

i.e. the observed payoff is at least its own.  Meetings where both
payoffs are exactly zero are excluded: in the finite-N game these are
symmetric churn with no drift (and extinction-prone), and keeping them
in a deterministic mean field would spuriously destabilize every
single-strategy state at any a.  With that exclusion the growth or
decay of a small invading column reproduces the linear-stability
boundary of the `stability` module.

Truncation at k_max forbids rewiring events whose receiving class sits
at k_max (mass would leave the grid); per-column mass, total mass and
total mean degree are then conserved exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.stats import poisson

_MAX_DT_HALVINGS = 20


@dataclass
class DistributionGrid:
    """Discretized density P(k, w), row index k = 0..k_max, column index j."""

    K: int
    k_max: int
    N_w: int
    P: np.ndarray
    w_values: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.w_values is None:
            self.w_values = np.linspace(0.0, 1.0, self.N_w)
        if self.P.shape != (self.k_max + 1, self.N_w):
            raise ValueError(f"P must have shape {(self.k_max + 1, self.N_w)}, got {self.P.shape}")

    def total_mass(self) -> float:
        return float(self.P.sum())

    def mean_degree(self) -> float:
        ks = np.arange(self.k_max + 1)
        return float((ks[:, None] * self.P).sum())

    def validate(self) -> None:
        if not np.all(self.P >= 0.0):
            raise ValueError("grid has negative entries")
        if abs(self.total_mass() - 1.0) > 1e-8:
            raise ValueError(f"grid mass {self.total_mass()} differs from 1 beyond 1e-8")
        if abs(self.mean_degree() - self.K) > 1e-6:
            raise ValueError(f"grid mean degree {self.mean_degree()} differs from K={self.K} beyond 1e-6")

    def copy(self) -> "DistributionGrid":
        return DistributionGrid(K=self.K, k_max=self.k_max, N_w=self.N_w,
                                P=self.P.copy(), w_values=self.w_values.copy())


def default_k_max(K: int) -> int:
    return int(K + math.ceil(12 * math.sqrt(K)) + 40)


def _poisson_profile(K: int, k_max: int) -> np.ndarray:
    return poisson.pmf(np.arange(k_max + 1), K)


def uniform_grid(K: int, N_w: int = 64, k_max: int | None = None) -> DistributionGrid:
    """All strategy values equally probable, Poisson(K) in-degree everywhere."""
    if k_max is None:
        k_max = default_k_max(K)
    prof = _poisson_profile(K, k_max)
    P = np.tile((prof / N_w)[:, None], (1, N_w))
    P /= P.sum()
    return DistributionGrid(K=K, k_max=k_max, N_w=N_w, P=P)


def single_column_grid(K: int, w_index: int, N_w: int = 64,
                       k_max: int | None = None) -> DistributionGrid:
    """All mass on one strategy column, Poisson(K) profile in k."""
    if k_max is None:
        k_max = default_k_max(K)
    if not 0 <= w_index < N_w:
        raise ValueError(f"w_index must be in [0, {N_w}), got {w_index}")
    P = np.zeros((k_max + 1, N_w))
    P[:, w_index] = _poisson_profile(K, k_max)
    P /= P.sum()
    return DistributionGrid(K=K, k_max=k_max, N_w=N_w, P=P)


def perturbed_ones_grid(K: int, eps: float, pert_index: int, N_w: int = 64,
                        k_max: int | None = None) -> DistributionGrid:
    """All mass at w=1 plus eps Poisson-profile mass in one lower column."""
    if k_max is None:
        k_max = default_k_max(K)
    if not 0 <= pert_index < N_w - 1:
        raise ValueError(f"pert_index must name a column below w=1, got {pert_index}")
    prof = _poisson_profile(K, k_max)
    P = np.zeros((k_max + 1, N_w))
    P[:, N_w - 1] = prof
    P[:, pert_index] += eps * prof
    P /= P.sum()
    return DistributionGrid(K=K, k_max=k_max, N_w=N_w, P=P)


def threshold_table(k_max: int, N_w: int) -> np.ndarray:
    """thr[k, src, dst]: smallest adopting in-degree at column dst, clamped.

    k_max + 1 encodes "no in-degree qualifies" (suffix sum there is 0).
    """
    km1 = k_max + 1
    c = (N_w - 1) - np.arange(N_w)
    k = np.arange(km1)[:, None, None]
    num = k * c[None, :, None]
    cdst = c[None, None, :]
    thr = -(-num // np.maximum(cdst, 1))
    thr = np.where(num == 0, 1, thr)   # zero-payoff source: needs positive-payoff evidence
    thr = np.where(cdst == 0, km1, thr)  # w=1 offers zero payoff: never adopted
    return np.minimum(thr, km1).astype(np.int32)


@njit(cache=True)
def _gamma_kernel(P, thr, out):
    km1, Nw = P.shape
    S = np.zeros((km1 + 1, Nw))
    for j in range(Nw):
        acc = 0.0
        for k in range(km1 - 1, -1, -1):
            acc += P[k, j]
            S[k, j] = acc
    for k in range(km1):
        for j in range(Nw):
            out[k, j] = 0.0
    for k in range(km1):
        for src in range(Nw):
            p_src = P[k, src]
            if p_src == 0.0:
                continue
            for dst in range(Nw):
                if dst == src:
                    continue
                flow = p_src * S[thr[k, src, dst], dst]
                out[k, dst] += flow
                out[k, src] -= flow


@njit(cache=True)
def _xi_kernel(P, K, out):
    km1, Nw = P.shape
    col_mass = np.empty(Nw)
    col_deg = np.empty(Nw)
    for j in range(Nw):
        m = 0.0
        d = 0.0
        for k in range(km1):
            m += P[k, j]
            d += k * P[k, j]
        col_mass[j] = m
        col_deg[j] = d / K
    # tPw[j] = mass at strategies >= w_j (candidates that win a comparison)
    # tPs[j] = edge-weighted mass at strategies <= w_j (victims that lose one)
    # Rw[j]  = saturated-row mass at strategies >= w_j (skipped events)
    tPw = np.empty(Nw)
    tPs = np.empty(Nw)
    Rw = np.empty(Nw)
    acc = 0.0
    for j in range(Nw - 1, -1, -1):
        acc += col_mass[j]
        tPw[j] = acc
    acc = 0.0
    for j in range(Nw):
        acc += col_deg[j]
        tPs[j] = acc
    acc = 0.0
    for j in range(Nw - 1, -1, -1):
        acc += P[km1 - 1, j]
        Rw[j] = acc
    up = np.empty(km1)
    dn = np.empty(km1)
    for j in range(Nw):
        for k in range(km1):
            if k < km1 - 1:
                up[k] = P[k, j] * (tPs[j] - (k + 1) * P[k + 1, j] / K)
            else:
                up[k] = 0.0
            if k >= 1:
                dn[k] = k * P[k, j] * (tPw[j] - Rw[j] - P[k - 1, j]) / K
            else:
                dn[k] = 0.0
        for k in range(km1):
            val = -up[k] - dn[k]
            if k >= 1:
                val += up[k - 1]
            if k < km1 - 1:
                val += dn[k + 1]
            out[k, j] = val


@njit(cache=True)
def _rhs_kernel(P, thr, K, a, mutation_rate, gam, xi, out):
    km1, Nw = P.shape
    _gamma_kernel(P, thr, gam)
    _xi_kernel(P, K, xi)
    for k in range(km1):
        for j in range(Nw):
            out[k, j] = a * gam[k, j] + (1.0 - a) * xi[k, j]
    if mutation_rate > 0.0:
        for k in range(km1):
            row_mean = 0.0
            for j in range(Nw):
                row_mean += P[k, j]
            row_mean /= Nw
            for j in range(Nw):
                out[k, j] += mutation_rate * (row_mean - P[k, j])


@njit(cache=True)
def _rk4_advance(P, thr, K, a, mutation_rate, dt, n_steps, renormalize, clip_tol,
                 stage, k1, k2, k3, k4, gam, xi):
    """Advance n_steps; returns (steps_done, max_step_clip, max_mass_err).

    steps_done < n_steps means a step would have clipped more than
    clip_tol and was not committed.
    """
    km1, Nw = P.shape
    max_clip = 0.0
    max_err = 0.0
    for s in range(n_steps):
        _rhs_kernel(P, thr, K, a, mutation_rate, gam, xi, k1)
        for k in range(km1):
            for j in range(Nw):
                stage[k, j] = P[k, j] + 0.5 * dt * k1[k, j]
        _rhs_kernel(stage, thr, K, a, mutation_rate, gam, xi, k2)
        for k in range(km1):
            for j in range(Nw):
                stage[k, j] = P[k, j] + 0.5 * dt * k2[k, j]
        _rhs_kernel(stage, thr, K, a, mutation_rate, gam, xi, k3)
        for k in range(km1):
            for j in range(Nw):
                stage[k, j] = P[k, j] + dt * k3[k, j]
        _rhs_kernel(stage, thr, K, a, mutation_rate, gam, xi, k4)
        clipped = 0.0
        total = 0.0
        for k in range(km1):
            for j in range(Nw):
                v = P[k, j] + dt / 6.0 * (k1[k, j] + 2.0 * k2[k, j] + 2.0 * k3[k, j] + k4[k, j])
                if v < 0.0:
                    clipped -= v
                stage[k, j] = v
                total += v
        if not np.isfinite(total) or (renormalize and clipped > clip_tol):
            return s, max_clip, max_err
        err = abs(total - 1.0)
        if err > max_err:
            max_err = err
        if clipped > max_clip:
            max_clip = clipped
        if renormalize:
            mass = 0.0
            for k in range(km1):
                for j in range(Nw):
                    v = stage[k, j]
                    if v < 0.0:
                        v = 0.0
                    P[k, j] = v
                    mass += v
            inv = 1.0 / mass
            for k in range(km1):
                for j in range(Nw):
                    P[k, j] *= inv
        else:
            for k in range(km1):
                for j in range(Nw):
                    P[k, j] = stage[k, j]
    return n_steps, max_clip, max_err


def gamma_term(grid: DistributionGrid) -> np.ndarray:
    """Replication flow field; sums to zero over w for every k."""
    out = np.empty_like(grid.P)
    thr = threshold_table(grid.k_max, grid.N_w)
    _gamma_kernel(grid.P, thr, out)
    return out


def xi_term(grid: DistributionGrid) -> np.ndarray:
    """Rewiring flow field; per-w mass and total mean degree are conserved."""
    out = np.empty_like(grid.P)
    _xi_kernel(grid.P, grid.K, out)
    return out


def master_rhs(grid: DistributionGrid, a: float, mutation_rate: float = 0.0) -> np.ndarray:
    out = np.empty_like(grid.P)
    gam = np.empty_like(grid.P)
    xi = np.empty_like(grid.P)
    thr = threshold_table(grid.k_max, grid.N_w)
    _rhs_kernel(grid.P, thr, grid.K, a, mutation_rate, gam, xi, out)
    return out


def mean_w(grid: DistributionGrid) -> float:
    """Sum of w * P(k, w) over the grid."""
    return float((grid.w_values[None, :] * grid.P).sum())


@dataclass
class MasterTrajectory:
    times: np.ndarray
    mean_w: np.ndarray
    snapshots: list
    final_grid: DistributionGrid
    dt: float
    max_step_clip: float
    max_mass_drift: float


def integrate(grid0: DistributionGrid, a: float, dt: float = 0.1, t_end: float = 100.0,
              sample_every: float = 1.0, snapshot_times: tuple = (),
              renormalize: bool = True, clip_tol: float = 1e-6,
              on_clip: str = "halve", mutation_rate: float = 0.0) -> MasterTrajectory:
    """RK4 on the full field, sampling <w>(t) and optional grid snapshots.

    After each step negatives are clipped and the field renormalized to
    unit mass (skipped when renormalize=False, which is the mode used to
    measure raw conservation drift).  A step that would clip more than
    clip_tol aborts the attempt; with on_clip="halve" the integration
    restarts from grid0 with dt halved, with on_clip="abort" it raises.
    Samples land on multiples of sample_every; snapshot times are
    rounded to the nearest sample time.
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"a must be in [0, 1], got {a}")
    if sample_every <= 0:
        raise ValueError(f"sample_every must be > 0, got {sample_every}")
    if on_clip not in ("halve", "abort"):
        raise ValueError(f"on_clip must be 'halve' or 'abort', got {on_clip!r}")

    thr = threshold_table(grid0.k_max, grid0.N_w)
    n_samples = int(round(t_end / sample_every))
    snap_indices = sorted({min(max(int(round(t / sample_every)), 0), n_samples)
                           for t in snapshot_times})

    for attempt in range(_MAX_DT_HALVINGS + 1):
        grid = grid0.copy()
        P = grid.P
        shape = P.shape
        bufs = [np.empty(shape) for _ in range(7)]
        stride = max(1, int(round(sample_every / dt)))
        times = np.empty(n_samples + 1)
        means = np.empty(n_samples + 1)
        snapshots = []
        times[0] = 0.0
        means[0] = mean_w(grid)
        if 0 in snap_indices:
            snapshots.append((0.0, P.copy()))
        max_clip = 0.0
        max_drift = 0.0
        failed = False
        for s in range(1, n_samples + 1):
            done, clip, drift = _rk4_advance(P, thr, grid.K, a, mutation_rate,
                                             dt, stride, renormalize, clip_tol, *bufs)
            max_clip = max(max_clip, clip)
            max_drift = max(max_drift, drift)
            if done < stride:
                if on_clip == "abort":
                    raise RuntimeError(
                        f"step went non-finite or clipped more than {clip_tol:g} "
                        f"at t~{(s - 1) * sample_every:g}; dt={dt:g} too large")
                failed = True
                break
            t = s * stride * dt
            times[s] = t
            means[s] = mean_w(grid)
            if s in snap_indices:
                snapshots.append((t, P.copy()))
        if not failed:
            return MasterTrajectory(times=times, mean_w=means, snapshots=snapshots,
                                    final_grid=grid, dt=dt, max_step_clip=max_clip,
                                    max_mass_drift=max_drift)
        dt *= 0.5
    raise RuntimeError(f"clip monitor kept tripping after {_MAX_DT_HALVINGS} dt halvings")
