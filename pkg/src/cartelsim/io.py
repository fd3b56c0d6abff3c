"""CSV interchange: exact headers, 17 significant digits, LF endings."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .analysis import Spectrum
from .engine import DegreeHistogram, RunResult, SweepRow, TimeSeries
from .master import MasterTrajectory
from .stability import CriticalPoint

TIMESERIES_HEADER = "sweep,mean_w"
DEGREE_HIST_HEADER = "k,count,n_snapshots"
SWEEP_HEADER = "K,a,seed,mean_w,var_w"
CRITICAL_A_HEADER = "K,a_c,k_max,tol"
MASTER_TRAJ_HEADER = "t,mean_w"
SNAPSHOT_HEADER = "k,w,P"
SPECTRUM_HEADER = "f,power"
FIT_HEADER = "quantity,value"


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def write_timeseries_csv(path, ts: TimeSeries) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(TIMESERIES_HEADER + "\n")
        sweep = ts.start_sweep
        for v in ts.values:
            fh.write(f"{sweep},{_fmt(v)}\n")
            sweep += ts.sample_period_sweeps


def read_timeseries_csv(path) -> TimeSeries:
    sweeps, values = [], []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != TIMESERIES_HEADER:
            raise ValueError(f"{path}: expected header {TIMESERIES_HEADER!r}, got {header!r}")
        for line in fh:
            s, v = line.split(",")
            sweeps.append(int(s))
            values.append(float(v))
    if not values:
        raise ValueError(f"{path}: no samples")
    period = sweeps[1] - sweeps[0] if len(sweeps) > 1 else 1
    return TimeSeries(sample_period_sweeps=period, values=np.array(values),
                      start_sweep=sweeps[0])


def write_degree_hist_csv(path, hist: DegreeHistogram) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(DEGREE_HIST_HEADER + "\n")
        for k, c in enumerate(hist.counts):
            if c > 0:
                fh.write(f"{k},{int(c)},{hist.n_snapshots}\n")


def read_degree_hist_csv(path) -> DegreeHistogram:
    ks, cs, n_snap = [], [], 0
    with open(path) as fh:
        header = fh.readline().strip()
        if header != DEGREE_HIST_HEADER:
            raise ValueError(f"{path}: expected header {DEGREE_HIST_HEADER!r}, got {header!r}")
        for line in fh:
            k, c, n = line.split(",")
            ks.append(int(k))
            cs.append(int(c))
            n_snap = int(n)
    if not ks:
        raise ValueError(f"{path}: empty histogram")
    counts = np.zeros(max(ks) + 1, dtype=np.int64)
    counts[ks] = cs
    return DegreeHistogram(counts=counts, n_snapshots=n_snap)


def write_sweep_csv(path, rows: list[SweepRow]) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(SWEEP_HEADER + "\n")
        for r in rows:
            fh.write(f"{r.K},{_fmt(r.a)},{r.seed},{_fmt(r.mean_w)},{_fmt(r.var_w)}\n")


def write_critical_a_csv(path, points: list[CriticalPoint]) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(CRITICAL_A_HEADER + "\n")
        for p in points:
            fh.write(f"{p.K},{_fmt(p.a_c)},{p.k_max},{_fmt(p.tol)}\n")


def write_master_traj_csv(path, traj: MasterTrajectory) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(MASTER_TRAJ_HEADER + "\n")
        for t, m in zip(traj.times, traj.mean_w):
            fh.write(f"{_fmt(t)},{_fmt(m)}\n")


def write_snapshot_csv(path, t: float, P: np.ndarray, w_values: np.ndarray) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(SNAPSHOT_HEADER + "\n")
        for k in range(P.shape[0]):
            for j in range(P.shape[1]):
                fh.write(f"{k},{_fmt(w_values[j])},{_fmt(P[k, j])}\n")


def write_spectrum_csv(path, spec: Spectrum) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(SPECTRUM_HEADER + "\n")
        for f, p in zip(spec.frequencies, spec.power):
            fh.write(f"{_fmt(f)},{_fmt(p)}\n")


def write_fit_csv(path, quantities: dict[str, float]) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(FIT_HEADER + "\n")
        for name, value in quantities.items():
            fh.write(f"{name},{_fmt(value)}\n")


def snapshot_filename(t: float) -> str:
    text = f"{t:g}".replace(".", "p").replace("-", "m")
    return f"P_t{text}.csv"


def ensure_out_dir(out_dir) -> Path:
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path
