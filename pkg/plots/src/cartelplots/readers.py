"""CSV readers for the simulator's output files.

Errors always carry the file and the 1-based line number; rendering must
fail loudly on missing or malformed inputs.
"""

from __future__ import annotations

from pathlib import Path


class CsvError(Exception):
    pass


def _read_rows(path, header: str, types):
    path = Path(path)
    if not path.exists():
        raise CsvError(f"{path}: file not found")
    rows = []
    with open(path) as fh:
        first = fh.readline().rstrip("\n")
        if first != header:
            raise CsvError(f"{path}:1: expected header {header!r}, got {first!r}")
        for lineno, raw in enumerate(fh, start=2):
            line = raw.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(types):
                raise CsvError(f"{path}:{lineno}: expected {len(types)} columns, got {len(parts)}")
            try:
                rows.append(tuple(t(p) for t, p in zip(types, parts)))
            except ValueError as exc:
                raise CsvError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise CsvError(f"{path}: no data rows")
    return rows


def read_timeseries(path):
    return _read_rows(path, "sweep,mean_w", (int, float))


def read_degree_hist(path):
    return _read_rows(path, "k,count,n_snapshots", (int, int, int))


def read_sweep(path):
    return _read_rows(path, "K,a,seed,mean_w,var_w", (int, float, int, float, float))


def read_critical_a(path):
    return _read_rows(path, "K,a_c,k_max,tol", (int, float, int, float))


def read_master_traj(path):
    return _read_rows(path, "t,mean_w", (float, float))


def read_spectrum(path):
    return _read_rows(path, "f,power", (float, float))


def read_snapshot(path):
    return _read_rows(path, "k,w,P", (int, float, float))


def snapshot_time_from_name(path) -> float:
    """P_t<t>.csv encodes the time with '.' as 'p' and '-' as 'm'."""
    stem = Path(path).stem
    if not stem.startswith("P_t"):
        raise CsvError(f"{path}: snapshot files must be named P_t<t>.csv")
    text = stem[3:].replace("p", ".").replace("m", "-")
    try:
        return float(text)
    except ValueError as exc:
        raise CsvError(f"{path}: cannot parse snapshot time from name") from exc
