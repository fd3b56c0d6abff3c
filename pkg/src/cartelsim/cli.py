"""Command-line entry point.

Subcommands: simulate, sweep, critical-a, master-eq, analyze.  A flat
``key = value`` config file can seed any subcommand's flags; explicit
flags override it.  Exit codes: 0 success, 1 validation error, 2
runtime failure; errors go to stderr as one ``error: <message>`` line.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import analysis, io, master, stability
from .engine import SimParams, run, sweep


class _ValidationError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1, single line, no usage dump
        raise _ValidationError(message)


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip() != ""]


def _float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip() != ""]


def _band(text: str) -> tuple[float, float]:
    parts = _float_list(text)
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'fmin,fmax', got {text!r}")
    return parts[0], parts[1]


def _add_sim_flags(p: _Parser) -> None:
    p.add_argument("--N", type=int, default=100000, help="population size")
    p.add_argument("--r", type=float, default=1e-6, help="noise probability per elementary update")
    p.add_argument("--sweeps", type=int, default=10000, help="measurement window in sweeps (N updates each)")
    p.add_argument("--burn-in", type=int, default=1000, help="discarded initial sweeps")
    p.add_argument("--record-every", type=int, default=1, help="sweeps between recorded samples")
    p.add_argument("--w-init", choices=("uniform", "ones"), default="uniform",
                   help="initial strategy values")


def build_parser() -> _Parser:
    parser = _Parser(prog="cartelsim", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = subs.add_parser("simulate", help="one run -> timeseries.csv, degree_hist.csv")
    p.add_argument("--K", type=int, default=1, help="rewarders per donator")
    p.add_argument("--a", type=float, default=0.1, help="rewarder-update probability")
    p.add_argument("--seed", type=int, default=0)
    _add_sim_flags(p)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--config", default=None, help="flat key = value file; flags override")
    p.set_defaults(func=_cmd_simulate)

    p = subs.add_parser("sweep", help="(K, a, seed) grid -> sweep.csv")
    p.add_argument("--K", type=_int_list, default=[1], help="comma list of K values")
    p.add_argument("--a", type=_float_list, default=[0.1], help="comma list of a values")
    p.add_argument("--seeds", type=_int_list, default=[0], help="comma list of replicate seeds")
    p.add_argument("--seed", type=int, default=0, help="base seed mixed into every cell stream")
    _add_sim_flags(p)
    p.add_argument("--workers", type=int, default=None, help="max parallel cells (default: all cores)")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--config", default=None)
    p.set_defaults(func=_cmd_sweep)

    p = subs.add_parser("critical-a", help="critical update rate -> critical_a.csv")
    p.add_argument("--K", type=_int_list, default=[1], help="comma list of K values")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--k-max", type=int, default=None, help="initial truncation (default: K + 12*sqrt(K) + 20)")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--config", default=None)
    p.set_defaults(func=_cmd_critical_a)

    p = subs.add_parser("master-eq", help="integrate P(k,w) -> master_traj.csv, snapshots")
    p.add_argument("--K", type=int, default=1)
    p.add_argument("--a", type=float, default=0.7)
    p.add_argument("--N-w", type=int, default=64, help="number of strategy values")
    p.add_argument("--k-max", type=int, default=None, help="in-degree truncation (default: K + 12*sqrt(K) + 40)")
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--T", type=float, default=1000.0, help="integration horizon")
    p.add_argument("--sample-every", type=float, default=1.0)
    p.add_argument("--snapshot-times", type=_float_list, default=[],
                   help="comma list of times to dump P_t<t>.csv")
    p.add_argument("--init", choices=("uniform", "single-column", "perturbed-ones"), default="uniform")
    p.add_argument("--w-index", type=int, default=None,
                   help="strategy column for single-column / perturbed-ones inits")
    p.add_argument("--eps", type=float, default=1e-6, help="perturbation mass for perturbed-ones init")
    p.add_argument("--mutation-rate", type=float, default=0.0,
                   help="optional uniform strategy-redistribution rate (off by default)")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--config", default=None)
    p.set_defaults(func=_cmd_master_eq)

    p = subs.add_parser("analyze", help="timeseries.csv -> spectrum.csv, fit.csv")
    p.add_argument("--timeseries", required=True, help="input timeseries.csv")
    p.add_argument("--segment-length", type=int, default=4096)
    p.add_argument("--low-band", type=_band, default=None, help="fmin,fmax for alpha_low (cycles/sweep)")
    p.add_argument("--high-band", type=_band, default=None, help="fmin,fmax for alpha_high")
    p.add_argument("--degree-hist", default=None, help="optional degree_hist.csv for the tail fit")
    p.add_argument("--K", type=int, default=None, help="K of the run (needed for the tail k_min policy)")
    p.add_argument("--k-min", type=int, default=None, help="override the tail k_min policy")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--config", default=None)
    p.set_defaults(func=_cmd_analyze)

    return parser


def _load_config(path: str) -> dict[str, str]:
    values = {}
    try:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise _ValidationError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
                key, _, value = line.partition("=")
                values[key.strip()] = value.strip()
    except OSError as exc:
        raise _ValidationError(f"cannot read config {path}: {exc}") from exc
    return values


def _inject_config(argv: list[str], parser: _Parser) -> list[str]:
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        raise _ValidationError("--config requires a file path")
    cfg_path = argv[idx + 1]
    rest = argv[:idx] + argv[idx + 2:]
    if not rest or rest[0].startswith("-"):
        raise _ValidationError("--config requires a subcommand")
    sub_name = rest[0]
    sub_actions = {}
    for action in parser._subparsers._group_actions[0].choices.items():  # noqa: SLF001
        sub_actions[action[0]] = action[1]
    if sub_name not in sub_actions:
        raise _ValidationError(f"unknown subcommand {sub_name!r}")
    valid_flags = {s for act in sub_actions[sub_name]._actions for s in act.option_strings}  # noqa: SLF001
    injected = []
    for key, value in _load_config(cfg_path).items():
        flag = "--" + key.replace("_", "-").lstrip("-")
        if flag not in valid_flags:
            raise _ValidationError(f"unknown config key {key!r} for {sub_name}")
        injected += [flag, value]
    return [rest[0]] + injected + rest[1:]


def _progress(done: int, total: int) -> None:
    print(f"cell {done}/{total} done", file=sys.stderr, flush=True)


def _cmd_simulate(args) -> int:
    params = SimParams(N=args.N, K=args.K, a=args.a, r=args.r, seed=args.seed,
                       burn_in_sweeps=args.burn_in, measure_sweeps=args.sweeps,
                       record_every_sweeps=args.record_every, w_init=args.w_init)
    result = run(params)
    out = io.ensure_out_dir(args.out_dir)
    io.write_timeseries_csv(out / "timeseries.csv", result.timeseries)
    io.write_degree_hist_csv(out / "degree_hist.csv", result.degree_histogram)
    return 0


def _cmd_sweep(args) -> int:
    if not args.K or not args.a or not args.seeds:
        raise ValueError("sweep needs nonempty --K, --a and --seeds lists")
    base = SimParams(N=args.N, K=args.K[0], a=args.a[0], r=args.r, seed=args.seed,
                     burn_in_sweeps=args.burn_in, measure_sweeps=args.sweeps,
                     record_every_sweeps=args.record_every, w_init=args.w_init)
    rows = sweep(base, args.K, args.a, args.seeds, workers=args.workers,
                 progress=_progress)
    for row in rows:
        if row.error is not None:
            print(f"cell K={row.K} a={row.a:g} seed={row.seed} failed: {row.error}",
                  file=sys.stderr)
    out = io.ensure_out_dir(args.out_dir)
    io.write_sweep_csv(out / "sweep.csv", rows)
    return 0


def _cmd_critical_a(args) -> int:
    points = [stability.find_critical_a(K, tol=args.tol, k_max=args.k_max)
              for K in args.K]
    out = io.ensure_out_dir(args.out_dir)
    io.write_critical_a_csv(out / "critical_a.csv", points)
    return 0


def _cmd_master_eq(args) -> int:
    if args.init == "uniform":
        grid = master.uniform_grid(args.K, N_w=args.N_w, k_max=args.k_max)
    elif args.init == "single-column":
        w_index = args.N_w - 1 if args.w_index is None else args.w_index
        grid = master.single_column_grid(args.K, w_index, N_w=args.N_w, k_max=args.k_max)
    else:
        w_index = args.N_w // 2 if args.w_index is None else args.w_index
        grid = master.perturbed_ones_grid(args.K, args.eps, w_index,
                                          N_w=args.N_w, k_max=args.k_max)
    traj = master.integrate(grid, args.a, dt=args.dt, t_end=args.T,
                            sample_every=args.sample_every,
                            snapshot_times=tuple(args.snapshot_times),
                            mutation_rate=args.mutation_rate)
    out = io.ensure_out_dir(args.out_dir)
    io.write_master_traj_csv(out / "master_traj.csv", traj)
    for t, P in traj.snapshots:
        io.write_snapshot_csv(out / io.snapshot_filename(t), t, P, grid.w_values)
    return 0


def _cmd_analyze(args) -> int:
    ts = io.read_timeseries_csv(args.timeseries)
    spec = analysis.psd(ts, segment_length=args.segment_length)
    low_band, high_band = analysis.default_fit_bands(len(ts.values))
    if args.low_band is not None:
        low_band = args.low_band
    if args.high_band is not None:
        high_band = args.high_band
    fits = {
        "alpha_low": analysis.loglog_slope(spec, *low_band),
        "alpha_high": analysis.loglog_slope(spec, *high_band),
    }
    if args.degree_hist is not None:
        hist = io.read_degree_hist_csv(args.degree_hist)
        if args.k_min is not None:
            k_min = args.k_min
        else:
            if args.K is None:
                raise ValueError("tail fit needs --K (for the k_min policy) or an explicit --k-min")
            k_min = analysis.choose_tail_kmin(hist, args.K)
        fits["tail_exponent"] = analysis.powerlaw_tail_exponent(hist, k_min)
        fits["k_min"] = float(k_min)
    out = io.ensure_out_dir(args.out_dir)
    io.write_spectrum_csv(out / "spectrum.csv", spec)
    io.write_fit_csv(out / "fit.csv", fits)
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _inject_config(argv, parser)
        args = parser.parse_args(argv)
    except _ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except (_ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    raise SystemExit(main())
