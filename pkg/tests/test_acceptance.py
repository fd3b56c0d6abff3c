"""Acceptance suite: one test per criterion, one PASS/FAIL line printed each.

Desk-scale protocol: N = 1e5 populations, fixed seeds, tolerances stated
inline.  Heavy cells run minutes; run with `pytest -rA` to see the lines.
"""

from fractions import Fraction

import numpy as np
import pytest
from numba import njit
from scipy import signal, stats

import cartelsim as cs
from cartelsim import _mc
from cartelsim.cli import main

N_DESK = 100_000
R_NOISE = 1e-6

# fixed seeds; near-critical cells fluctuate slowly at desk scale, so a
# seed is pinned per criterion for reproducibility
SEED_C1 = 2
SEED_C2 = 2
SEED_C3 = 1301
SEED_C4 = 1404
SEED_C8 = 5


def report(num: int, name: str, ok: bool, detail: str = "") -> bool:
    line = f"[ACCEPTANCE {num}] {name}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f" ({detail})"
    print(line, flush=True)
    return ok


@pytest.fixture(scope="module")
def a_c_table():
    return {K: cs.find_critical_a(K, tol=1e-6).a_c for K in (1, 3, 5, 10)}


def test_criterion_1_critical_point_consistency(a_c_table):
    """0.8*a_c keeps <w> >= 0.98; 1.2*a_c drags it to <= 0.90 (all-ones start)."""
    details = []
    ok = True
    for K in (1, 3, 5, 10):
        for factor, bound, side in ((0.8, 0.98, "above"), (1.2, 0.90, "below")):
            params = cs.SimParams(N=N_DESK, K=K, a=factor * a_c_table[K], r=R_NOISE,
                                  seed=SEED_C1, burn_in_sweeps=1000,
                                  measure_sweeps=5000, w_init="ones")
            mean = cs.run(params).mean_w_time_avg
            cell_ok = mean >= bound if side == "above" else mean <= bound
            ok &= cell_ok
            details.append(f"K={K} {factor}a_c: {mean:.4f}")
    assert report(1, "critical-point consistency", ok, "; ".join(details))


def test_criterion_2_subcritical_poisson(a_c_table):
    """K=3, a=0.1: Poisson(3) in-degree snapshot (chi^2 p>0.01), <w> > 0.95."""
    params = cs.SimParams(N=N_DESK, K=3, a=0.1, r=R_NOISE, seed=SEED_C2,
                          burn_in_sweeps=1000, measure_sweeps=5000)
    res = cs.run(params)
    obs = np.bincount(res.final_in_degree)
    pmf = stats.poisson.pmf(np.arange(len(obs)), 3.0)
    # pool the tail so every expected count is >= 5
    kcap = int(np.searchsorted(pmf.cumsum(), 1 - 5 / N_DESK))
    obs_pooled = np.append(obs[:kcap], obs[kcap:].sum())
    exp_pooled = np.append(pmf[:kcap], 1.0 - pmf[:kcap].sum()) * N_DESK
    pvalue = stats.chisquare(obs_pooled, exp_pooled).pvalue
    ok = pvalue > 0.01 and res.mean_w_time_avg > 0.95
    assert report(2, "subcritical Poisson fixed point", ok,
                  f"chi2 p={pvalue:.3f}, mean={res.mean_w_time_avg:.4f}")


def test_criterion_3_degree_tail_at_max_fluctuation(a_c_table):
    """K=1: at the variance-peak a the accumulated tail goes like k^-3.

    Protocol: locate a* on a 10-point grid above a_c with short windows,
    then accumulate the in-degree histogram over an entire-history rerun
    at a* (no burn-in discarded) and fit the tail at the documented
    k_min policy.
    """
    factors = (1.02, 1.05, 1.1, 1.15, 1.2, 1.3, 1.4, 1.5, 1.6, 1.75)
    best = None
    for fac in factors:
        params = cs.SimParams(N=N_DESK, K=1, a=fac * a_c_table[1], r=R_NOISE,
                              seed=SEED_C3, burn_in_sweeps=500, measure_sweeps=2500)
        res = cs.run(params)
        if best is None or res.variance_of_mean_w > best[1].variance_of_mean_w:
            best = (fac, res)
    fac, scan_res = best
    params = cs.SimParams(N=N_DESK, K=1, a=fac * a_c_table[1], r=R_NOISE,
                          seed=SEED_C3, burn_in_sweeps=0, measure_sweeps=20000)
    hist = cs.run(params).degree_histogram
    k_min = cs.choose_tail_kmin(hist, K=1)
    k_hi = int(np.nonzero(hist.counts)[0].max())
    decades = np.log10(k_hi / k_min)
    alpha = cs.powerlaw_tail_exponent(hist, k_min)
    ok = decades >= 1.5 and 2.5 <= alpha <= 3.5
    assert report(3, "k^-3 tail at maximal fluctuation", ok,
                  f"a*={fac}a_c, scan var={scan_res.variance_of_mean_w:.2e}, "
                  f"k_min={k_min}, span={decades:.2f} decades, exponent={alpha:.2f}")


def test_criterion_4_spectral_exponent():
    """K=1, a=0.9, 2^16 sweep samples: fitted alpha in [1.2, 1.8].

    At desk scale (N=1e5) the finite correlation time puts a knee in the
    spectrum near 1e-3 cycles/sweep; the 3/2 law lives in the documented
    high-frequency band, so that is the band fitted here.
    """
    params = cs.SimParams(N=N_DESK, K=1, a=0.9, r=R_NOISE, seed=SEED_C4,
                          burn_in_sweeps=1000, measure_sweeps=1 << 16)
    res = cs.run(params)
    spec = cs.psd(res.timeseries, segment_length=4096)
    _, high_band = cs.default_fit_bands(len(res.timeseries.values))
    alpha = cs.loglog_slope(spec, *high_band)
    ok = 1.2 <= alpha <= 1.8
    assert report(4, "1/f^alpha spectral exponent", ok,
                  f"alpha={alpha:.3f} in band [{high_band[0]:.2g}, {high_band[1]:.2g}]")


def test_criterion_5_master_conservation_and_fixed_point():
    """1e4 raw RK4 steps conserve mass/degree; Poisson column is stationary."""
    grid = cs.uniform_grid(3, N_w=64)
    traj = cs.integrate(grid, a=0.3, dt=0.1, t_end=1000.0, sample_every=100.0,
                        renormalize=False)
    mass_err = traj.max_mass_drift
    degree_err = abs(traj.final_grid.mean_degree() - 3.0)
    fp = cs.single_column_grid(3, w_index=40, N_w=64)
    rhs_sup = np.abs(cs.master_rhs(fp, a=0.37)).max()
    ok = mass_err < 1e-8 and degree_err < 1e-6 and rhs_sup < 1e-12
    assert report(5, "master-equation conservation and fixed point", ok,
                  f"|mass-1|={mass_err:.2e}, |deg-K|={degree_err:.2e}, "
                  f"fixed-point sup={rhs_sup:.2e}")


def test_criterion_6_linearization_agreement(a_c_table):
    """Eps-perturbations of all-w=1 grow at 1.1*a_c and decay at 0.9*a_c."""
    details = []
    ok = True
    for K in (1, 3):
        for factor, grows in ((0.9, False), (1.1, True)):
            grid = cs.perturbed_ones_grid(K, eps=1e-6, pert_index=16, N_w=32,
                                          k_max=41 if K == 1 else 64)
            traj = cs.integrate(grid, a=factor * a_c_table[K], dt=0.05,
                                t_end=150.0, sample_every=75.0,
                                snapshot_times=(75.0, 150.0))
            (_, P1), (_, P2) = traj.snapshots
            m1 = P1[1:, 16].sum()
            m2 = P2[1:, 16].sum()
            cell_ok = (m2 > 2 * m1) if grows else (m2 < 0.5 * m1)
            ok &= cell_ok
            details.append(f"K={K} {factor}a_c: x{m2 / m1:.2g}")
    assert report(6, "linearization vs master equation", ok, "; ".join(details))


def test_criterion_7_supercritical_fronts():
    """Uniform start above a_c: repeated prominent <w> maxima, no settling."""
    grid = cs.uniform_grid(1, N_w=32, k_max=41)
    traj = cs.integrate(grid, a=0.7, dt=0.1, t_end=1000.0, sample_every=1.0)
    peaks, _ = signal.find_peaks(traj.mean_w, prominence=0.05)
    last_quarter = traj.mean_w[3 * len(traj.mean_w) // 4:]
    span = float(last_quarter.max() - last_quarter.min())
    ok = len(peaks) >= 3 and span > 0.02
    assert report(7, "supercritical front dynamics", ok,
                  f"{len(peaks)} prominent maxima, final-quarter span={span:.3f}")


# ---------------------------------------------------------------------------
# criterion 8: exact Markov enumeration for N=3, K=1, w in {0,1}, r=0


def _others(i):
    return tuple(x for x in range(3) if x != i)


def _encode(w_bits, targets):
    code = 0
    for i in range(3):
        code |= int(w_bits[i]) << i
    for i in range(3):
        if targets[i] == _others(i)[1]:
            code |= 1 << (3 + i)
    return code


def _exact_step_distribution(w_bits, targets, a: Fraction):
    """One-elementary-step law derived by hand from the update rules."""
    in_deg = [0, 0, 0]
    for i in range(3):
        in_deg[targets[i]] += 1
    payoff = [(1 - w_bits[x]) * in_deg[x] for x in range(3)]
    dist = {}

    def add(code, p):
        dist[code] = dist.get(code, Fraction(0)) + p

    third = Fraction(1, 3)
    for i in range(3):
        # rewarder update: j uniform among the other two, copy on >=
        for j in _others(i):
            w_new = list(w_bits)
            if payoff[j] >= payoff[i]:
                w_new[i] = w_bits[j]
            add(_encode(w_new, targets), third * a * Fraction(1, 2))
        # donator update: j is i's only target, l the unique candidate
        j = targets[i]
        l = next(x for x in range(3) if x != i and x != j)
        t_new = list(targets)
        if w_bits[l] >= w_bits[j]:
            t_new[i] = l
        add(_encode(w_bits, t_new), third * (1 - a))
    return dist


@njit(cache=True)
def _one_step_trials(w0, oe0, indeg0, a, n_trials, state, counts):
    w = w0.copy()
    oe = oe0.copy()
    indeg = indeg0.copy()
    ws = np.zeros(1)
    for _ in range(n_trials):
        for i in range(3):
            w[i] = w0[i]
            indeg[i] = indeg0[i]
            oe[i, 0] = oe0[i, 0]
        _mc.step(w, oe, indeg, ws, state, a, 0.0)
        code = 0
        for i in range(3):
            if w[i] == 1.0:
                code |= 1 << i
        for i in range(3):
            hi = 2 if i != 2 else 1
            if oe[i, 0] == hi:
                code |= 1 << (3 + i)
        counts[code] += 1


def test_criterion_8_micro_oracle():
    """Empirical one-step frequencies match the exact chain within 3 sigma."""
    a = Fraction(1, 2)
    n_trials = 1_000_000
    state = cs.state_from_entropy(SEED_C8)
    worst = 0.0
    checks = 0
    ok = True
    for code in range(64):
        w_bits = [(code >> i) & 1 for i in range(3)]
        targets = [_others(i)[(code >> (3 + i)) & 1] for i in range(3)]
        exact = _exact_step_distribution(w_bits, targets, a)
        w0 = np.array(w_bits, dtype=np.float64)
        oe0 = np.array([[t] for t in targets], dtype=np.int32)
        indeg0 = np.bincount(oe0.ravel(), minlength=3).astype(np.int32)
        counts = np.zeros(64, dtype=np.int64)
        _one_step_trials(w0, oe0, indeg0, float(a), n_trials, state, counts)
        for nxt in range(64):
            p = exact.get(nxt, Fraction(0))
            c = int(counts[nxt])
            if p == 0:
                ok &= c == 0
                continue
            checks += 1
            mu = float(p) * n_trials
            sigma = (n_trials * float(p) * (1.0 - float(p))) ** 0.5
            z = abs(c - mu) / sigma
            worst = max(worst, z)
            ok &= z <= 3.0
    assert report(8, "micro-oracle one-step transitions", ok,
                  f"{checks} transition probabilities, worst |z|={worst:.2f}")


def test_criterion_9_determinism(tmp_path):
    """Byte-identical CSVs across reruns and worker counts."""
    sim = ["simulate", "--N", "20000", "--K", "2", "--a", "0.3", "--r", "1e-6",
           "--seed", "11", "--sweeps", "300", "--burn-in", "50"]
    swp = ["sweep", "--N", "10000", "--K", "1,3", "--a", "0.1,0.5", "--seeds", "0,1",
           "--seed", "4", "--r", "1e-6", "--sweeps", "100", "--burn-in", "20"]
    outs = {}
    for tag, args in (("s1", sim), ("s2", sim),
                      ("w1", swp + ["--workers", "1"]),
                      ("w2", swp + ["--workers", "2"]),
                      ("w1b", swp + ["--workers", "1"])):
        d = tmp_path / tag
        assert main([*args, "--out-dir", str(d)]) == 0
        outs[tag] = d
    sim_same = ((outs["s1"] / "timeseries.csv").read_bytes()
                == (outs["s2"] / "timeseries.csv").read_bytes())
    hist_same = ((outs["s1"] / "degree_hist.csv").read_bytes()
                 == (outs["s2"] / "degree_hist.csv").read_bytes())
    sweep_bytes = [(outs[t] / "sweep.csv").read_bytes() for t in ("w1", "w2", "w1b")]
    sweep_same = sweep_bytes[0] == sweep_bytes[1] == sweep_bytes[2]
    ok = sim_same and hist_same and sweep_same
    assert report(9, "byte-identical determinism", ok,
                  f"simulate rerun={sim_same}, sweep workers/rerun={sweep_same}")
