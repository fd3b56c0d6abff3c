"""Figure analogs of the simulator's headline plots.

Six kinds: timeseries panels, the phase diagram with variance bars (with
an optional a/a_c rescaling), variance vs a, the in-degree distribution
with a k^-3 guide, spectra with f^-3/2 and f^-1/2 guides, and P(k, w)
heatmap sequences.  Everything shown is read from the CSVs; rendering
adds axis transforms and reference slopes only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import readers

KINDS = ("timeseries", "phase", "variance", "degree", "spectrum", "heatmap")


@dataclass
class FigureSpec:
    kind: str
    inputs: list
    output: str
    x_scale: str | None = None
    y_scale: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not self.inputs:
            raise ValueError("at least one input CSV is required")


@dataclass
class RenderResult:
    output: Path
    guide_slopes: list = field(default_factory=list)


def _slope_guide(ax, x, y_anchor, slope, label):
    """Reference power law through (x[0], y_anchor)."""
    x = np.asarray(x, dtype=float)
    y = y_anchor * (x / x[0]) ** slope
    ax.plot(x, y, "--", color="0.4", linewidth=1.0, label=label)


def _render_timeseries(spec, fig):
    n = len(spec.inputs)
    axes = fig.subplots(n, 1, squeeze=False)[:, 0]
    for ax, path in zip(axes, spec.inputs):
        rows = readers.read_timeseries(path)
        sweeps = [r[0] for r in rows]
        vals = [r[1] for r in rows]
        ax.plot(sweeps, vals, linewidth=0.8)
        ax.set_ylabel(r"$\langle w\rangle$")
        ax.set_title(Path(path).parent.name or Path(path).stem, fontsize=9)
        ax.set_ylim(0, 1.05)
    axes[-1].set_xlabel("t (sweeps)")
    return []


def _grouped_sweep(path):
    rows = readers.read_sweep(path)
    groups = {}
    for K, a, seed, mean_w, var_w in rows:
        groups.setdefault(K, []).append((a, seed, mean_w, var_w))
    for K in groups:
        groups[K].sort()
    return groups


def _render_phase(spec, fig):
    groups = _grouped_sweep(spec.inputs[0])
    ac = {}
    if len(spec.inputs) > 1:
        ac = {K: a_c for K, a_c, _, _ in readers.read_critical_a(spec.inputs[1])}
    ax = fig.subplots()
    for K, cells in sorted(groups.items()):
        a = np.array([c[0] for c in cells])
        x = a / ac[K] if K in ac else a
        y = np.array([c[2] for c in cells])
        yerr = np.array([c[3] for c in cells])
        ax.errorbar(x, y, yerr=yerr, marker="o", markersize=3, capsize=2,
                    linewidth=1.0, label=f"K={K}")
    ax.set_xlabel(r"$a/a_c$" if ac else "a")
    ax.set_ylabel(r"$\langle w\rangle$")
    ax.set_ylim(0, 1.05)
    if ac:
        ax.axvline(1.0, color="0.6", linestyle=":", linewidth=1.0)
    ax.legend(fontsize=8)
    return []


def _render_variance(spec, fig):
    groups = _grouped_sweep(spec.inputs[0])
    ax = fig.subplots()
    for K, cells in sorted(groups.items()):
        a = [c[0] for c in cells]
        v = [c[3] for c in cells]
        ax.plot(a, v, marker="o", markersize=3, linewidth=1.0, label=f"K={K}")
    ax.set_yscale("log")
    ax.set_xlabel("a")
    ax.set_ylabel(r"$\sigma_{\langle w\rangle}$")
    ax.legend(fontsize=8)
    return []


def _render_degree(spec, fig):
    ax = fig.subplots()
    anchor = None
    for path in spec.inputs:
        rows = readers.read_degree_hist(path)
        k = np.array([r[0] for r in rows], dtype=float)
        counts = np.array([r[1] for r in rows], dtype=float)
        total = counts.sum()
        mask = k > 0
        pk = counts[mask] / total
        kk = k[mask]
        ax.plot(kk, pk, marker=".", markersize=3, linestyle="none",
                label=Path(path).parent.name or Path(path).stem)
        if anchor is None and len(kk) > 3:
            anchor = (kk[2], pk[2])
    if anchor is not None:
        mx = max(readers.read_degree_hist(p)[-1][0] for p in spec.inputs)
        xs = np.geomspace(anchor[0], mx, 50)
        _slope_guide(ax, xs, anchor[1], -3.0, r"$k^{-3}$")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("k")
    ax.set_ylabel("P(k)")
    ax.legend(fontsize=8)
    return [-3.0]


def _render_spectrum(spec, fig):
    ax = fig.subplots()
    f0 = None
    for path in spec.inputs:
        rows = readers.read_spectrum(path)
        f = np.array([r[0] for r in rows])
        p = np.array([r[1] for r in rows])
        mask = (f > 0) & (p > 0)
        ax.plot(f[mask], p[mask], linewidth=0.8,
                label=Path(path).parent.name or Path(path).stem)
        if f0 is None:
            f0 = (f[mask], p[mask])
    fs, ps = f0
    _slope_guide(ax, fs, ps[0], -1.5, r"$1/f^{3/2}$")
    ax.plot(fs, ps[0] * 0.1 * (fs / fs[0]) ** -0.5, ":", color="0.4",
            linewidth=1.0, label=r"$1/f^{1/2}$")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("f (cycles/sweep)")
    ax.set_ylabel("power density")
    ax.legend(fontsize=8)
    return [-1.5, -0.5]


def _render_heatmap(spec, fig):
    inputs = sorted(spec.inputs, key=readers.snapshot_time_from_name)
    ncol = min(3, len(inputs))
    nrow = (len(inputs) + ncol - 1) // ncol
    axes = fig.subplots(nrow, ncol, squeeze=False)
    vmax = 0.0
    grids = []
    for path in inputs:
        rows = readers.read_snapshot(path)
        ks = sorted({r[0] for r in rows})
        ws = sorted({r[1] for r in rows})
        P = np.zeros((len(ks), len(ws)))
        k_idx = {k: n for n, k in enumerate(ks)}
        w_idx = {w: n for n, w in enumerate(ws)}
        for k, w, p in rows:
            P[k_idx[k], w_idx[w]] = p
        grids.append((readers.snapshot_time_from_name(path), np.array(ws), np.array(ks), P))
        vmax = max(vmax, P.max())
    floor = vmax * 1e-8 if vmax > 0 else 1e-12
    for ax, (t, ws, ks, P) in zip(axes.ravel(), grids):
        mesh = ax.pcolormesh(ws, ks, np.maximum(P, floor),
                             norm=matplotlib.colors.LogNorm(vmin=floor, vmax=vmax),
                             cmap="viridis")
        ax.set_title(f"t={t:g}", fontsize=9)
        ax.set_xlabel("w")
        ax.set_ylabel("k")
    for ax in axes.ravel()[len(grids):]:
        ax.set_visible(False)
    fig.colorbar(mesh, ax=axes.ravel().tolist(), shrink=0.8, label="P(k,w)")
    return []


_RENDERERS = {
    "timeseries": _render_timeseries,
    "phase": _render_phase,
    "variance": _render_variance,
    "degree": _render_degree,
    "spectrum": _render_spectrum,
    "heatmap": _render_heatmap,
}


def render(spec: FigureSpec) -> RenderResult:
    """Render one figure; returns the output path and any guide slopes drawn."""
    size = (7.0, 2.2 * len(spec.inputs)) if spec.kind == "timeseries" else (6.0, 4.5)
    fig = plt.figure(figsize=size)
    try:
        guides = _RENDERERS[spec.kind](spec, fig)
        for ax in fig.get_axes():
            if spec.x_scale:
                ax.set_xscale(spec.x_scale)
            if spec.y_scale:
                ax.set_yscale(spec.y_scale)
        out = Path(spec.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, dpi=150, bbox_inches="tight")
    finally:
        plt.close(fig)
    return RenderResult(output=Path(spec.output), guide_slopes=guides)
