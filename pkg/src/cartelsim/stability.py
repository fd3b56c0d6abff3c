"""Linear stability of the all-w=1 fixed point and the critical rate a_c.

The linearized evolution of the density rho(k) of invaders with one
fixed strategy value is ẋ = M x with

    M[k, k'] = a P0(k) 1{k>0} 1{k'>0}
             + (1-a) ( (k+1)/K 1{k'=k+1} - k/K 1{k'=k} ),

P0 Poisson(K).  Column k'=0 is identically zero, so mass parked at
in-degree 0 is a structural neutral direction; the bisection for a_c
therefore tracks the leading eigenvalue over eigenvectors that are not
concentrated on k=0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import poisson

# eigenvectors with less relative mass on k>0 than this belong to the
# structural k=0 direction and are excluded from the indicator
_ZERO_MODE_MASS = 1e-6

_MAX_KMAX = 1 << 15


@dataclass
class LinearOperator:
    K: int
    a: float
    k_max: int
    M: np.ndarray


@dataclass
class CriticalPoint:
    K: int
    a_c: float
    k_max: int
    tol: float

    def __float__(self) -> float:
        return self.a_c


def default_k_max(K: int) -> int:
    return int(K + math.ceil(12 * math.sqrt(K)) + 20)


def build_linearized_matrix(K: int, a: float, k_max: int) -> LinearOperator:
    """Dense (k_max+1)^2 operator; rejects truncations with visible tail mass."""
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"a must be in [0, 1], got {a}")
    if k_max < K + 10 * math.sqrt(K):
        raise ValueError(f"k_max={k_max} too small for K={K}; Poisson tail not negligible")
    ks = np.arange(k_max + 1)
    p0 = poisson.pmf(ks, K)
    M = np.zeros((k_max + 1, k_max + 1))
    M[1:, 1:] += a * p0[1:, None]
    M[ks, ks] -= (1.0 - a) * ks / K
    M[ks[:-1], ks[:-1] + 1] += (1.0 - a) * (ks[:-1] + 1) / K
    return LinearOperator(K=K, a=a, k_max=k_max, M=M)


def leading_eigenvalue(op: LinearOperator) -> float:
    """max Re lambda over the full spectrum."""
    try:
        lam = np.linalg.eigvals(op.M)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigenvalue iteration failed to converge: {exc}") from exc
    return float(lam.real.max())


def stability_indicator(op: LinearOperator) -> float:
    """max Re lambda excluding the mode concentrated on k=0.

    This is the quantity bisected for a_c: the structural zero mode
    (inert invaders with no donators) carries eigenvalue 0 at every a
    and must not mask the sign change of the growing modes.  Column
    k'=0 of M is identically zero, so that mode is exactly the k=0
    unit vector and the remaining spectrum is the spectrum of the
    k >= 1 sub-block; using the sub-block avoids the eigenvector
    degeneracy that a mass filter hits right at the crossing.
    """
    try:
        lam = np.linalg.eigvals(op.M[1:, 1:])
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigenvalue iteration failed to converge: {exc}") from exc
    return float(lam.real.max())


def zero_mode_filtered_indicator(op: LinearOperator) -> float:
    """Mass-filter variant of `stability_indicator` (cross-check only).

    Drops eigenvectors whose relative magnitude on k>0 is below
    `_ZERO_MODE_MASS`; agrees with the sub-block spectrum away from the
    critical point but is ill-conditioned at the crossing itself, where
    the structural mode and the crossing mode are nearly degenerate.
    """
    try:
        lam, vec = np.linalg.eig(op.M)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigenvalue iteration failed to converge: {exc}") from exc
    mag = np.abs(vec)
    frac_positive_k = mag[1:, :].sum(axis=0) / mag.sum(axis=0)
    keep = frac_positive_k > _ZERO_MODE_MASS
    if not keep.any():
        raise RuntimeError("all eigenvectors concentrated on k=0; operator malformed")
    return float(lam.real[keep].max())


def _critical_a_at(K: int, tol: float, k_max: int) -> float:
    lo, hi = 0.0, 1.0
    ind_lo = stability_indicator(build_linearized_matrix(K, lo, k_max))
    ind_hi = stability_indicator(build_linearized_matrix(K, hi, k_max))
    if not (ind_lo < 0.0 < ind_hi):
        raise RuntimeError(
            f"no sign change of the stability indicator in (0,1) for K={K}: "
            f"ind(0)={ind_lo:g}, ind(1)={ind_hi:g}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        ind_mid = stability_indicator(build_linearized_matrix(K, mid, k_max))
        # the indicator must stay monotone over the bracket
        if not (ind_lo - 1e-9 <= ind_mid <= ind_hi + 1e-9):
            raise RuntimeError(
                f"stability indicator not monotone on bracket for K={K}: "
                f"ind({lo:g})={ind_lo:g}, ind({mid:g})={ind_mid:g}, ind({hi:g})={ind_hi:g}")
        if ind_mid > 0.0:
            hi, ind_hi = mid, ind_mid
        else:
            lo, ind_lo = mid, ind_mid
    return 0.5 * (lo + hi)


def find_critical_a(K: int, tol: float = 1e-6, k_max: int | None = None) -> CriticalPoint:
    """Bisect the indicator's sign change; k_max is doubled until a_c settles."""
    if tol <= 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    if k_max is None:
        k_max = default_k_max(K)
    a_c = _critical_a_at(K, tol, k_max)
    while k_max <= _MAX_KMAX:
        a_c_next = _critical_a_at(K, tol, 2 * k_max)
        if abs(a_c_next - a_c) < tol:
            return CriticalPoint(K=K, a_c=a_c_next, k_max=2 * k_max, tol=tol)
        k_max *= 2
        a_c = a_c_next
    raise RuntimeError(f"a_c did not settle under truncation refinement for K={K}")
