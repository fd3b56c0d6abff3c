"""Observables: variance, Welch spectra, log-log slopes, power-law tails."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal
from scipy.optimize import brentq
from scipy.special import zeta
from scipy.stats import poisson

from .engine import DegreeHistogram, TimeSeries


@dataclass
class Spectrum:
    """One-sided Welch power spectral density, frequencies in cycles/sweep."""

    frequencies: np.ndarray
    power: np.ndarray
    segment_length: int
    n_segments: int


def variance_of_series(ts: TimeSeries) -> float:
    """Population variance of the recorded samples."""
    if len(ts.values) < 2:
        raise ValueError(f"need at least 2 samples, got {len(ts.values)}")
    return float(np.var(ts.values))


def psd(ts: TimeSeries, segment_length: int = 4096) -> Spectrum:
    """Welch estimate: mean-removed, Hann window, 50% overlap, one-sided.

    Density normalization: sum(power) * df matches the series variance
    up to window edge effects (within 5% for broadband signals).
    """
    n = len(ts.values)
    if segment_length < 2 or segment_length & (segment_length - 1):
        raise ValueError(f"segment_length must be a power of two >= 2, got {segment_length}")
    if n < 2 * segment_length:
        raise ValueError(f"series length {n} shorter than 2*segment_length={2 * segment_length}")
    fs = 1.0 / ts.sample_period_sweeps
    freqs, power = signal.welch(ts.values, fs=fs, window="hann",
                                nperseg=segment_length, noverlap=segment_length // 2,
                                detrend="constant", scaling="density",
                                return_onesided=True)
    step = segment_length - segment_length // 2
    n_segments = (n - segment_length) // step + 1
    return Spectrum(frequencies=freqs, power=power,
                    segment_length=segment_length, n_segments=n_segments)


def loglog_slope(spec: Spectrum, f_min: float, f_max: float) -> float:
    """alpha such that power ~ f^-alpha over [f_min, f_max], least squares."""
    if f_min <= 0 or f_max <= f_min:
        raise ValueError(f"need 0 < f_min < f_max, got [{f_min}, {f_max}]")
    mask = (spec.frequencies >= f_min) & (spec.frequencies <= f_max) & (spec.power > 0)
    if mask.sum() < 10:
        raise ValueError(f"only {int(mask.sum())} usable bins in [{f_min}, {f_max}]; need >= 10")
    slope = np.polyfit(np.log(spec.frequencies[mask]), np.log(spec.power[mask]), 1)[0]
    return float(-slope)


def default_fit_bands(series_length: int) -> tuple[tuple[float, float], tuple[float, float]]:
    """(low, high) frequency bands in cycles/sweep for slope fits."""
    return ((4.0 / series_length, 0.01), (0.05, 0.5))


def powerlaw_tail_exponent(hist: DegreeHistogram, k_min: int) -> float:
    """Discrete maximum-likelihood exponent of the tail k >= k_min.

    Solves zeta'(alpha, k_min)/zeta(alpha, k_min) = -mean(log k) for the
    Hurwitz zeta (derivative by central difference), the exact discrete
    power-law MLE.
    """
    if k_min < 1:
        raise ValueError(f"k_min must be >= 1, got {k_min}")
    ks = np.nonzero(hist.counts)[0]
    ks = ks[ks >= k_min]
    if len(ks) < 10:
        raise ValueError(f"insufficient tail support: {len(ks)} distinct k >= {k_min}, need >= 10")
    counts = hist.counts[ks].astype(np.float64)
    n = counts.sum()
    mean_log = float((counts * np.log(ks)).sum() / n)

    h = 1e-5

    def log_zeta_deriv(alpha):
        return (math.log(zeta(alpha + h, k_min)) - math.log(zeta(alpha - h, k_min))) / (2 * h)

    def objective(alpha):
        return log_zeta_deriv(alpha) + mean_log

    lo, hi = 1.0 + 1e-4, 64.0
    if objective(hi) <= 0.0:
        raise ValueError("tail too close to degenerate (all mass at k_min); no MLE root")
    return float(brentq(objective, lo, hi, xtol=1e-12))


def choose_tail_kmin(hist: DegreeHistogram, K: int, factor: float = 10.0) -> int:
    """Smallest k where the empirical CCDF exceeds `factor` times Poisson(K)'s.

    Targets the emergent tail rather than the Poisson bulk.
    """
    total = hist.total()
    if total == 0:
        raise ValueError("empty histogram")
    ks = np.arange(len(hist.counts))
    emp_ccdf = hist.counts[::-1].cumsum()[::-1] / total
    poi_ccdf = poisson.sf(ks - 1, K)
    candidates = np.nonzero((emp_ccdf > factor * poi_ccdf) & (hist.counts > 0))[0]
    if len(candidates) == 0:
        raise ValueError(f"no k where the empirical tail exceeds {factor}x the Poisson({K}) tail")
    return int(candidates[0])
