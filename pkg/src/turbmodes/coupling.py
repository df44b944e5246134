"""Acceptance spectra B_ab(theta): mode-pair spectral filters.

B_ab tells which fraction of the phase-fluctuation power carried by a
phase wave of reduced frequency theta = K^2 w^2 / 8 converts into power
coupling between modes a and b.  Diagonal entries are the (negative)
depletion filters of a single mode, off-diagonal entries the (positive)
transfer filters; |B| <= 1 everywhere, B(0) = 0 and the family-specific
closed forms decay like exp(-2 theta).

HG filters depend on the direction xi of the phase wave; isotropic
turbulence needs the directional average, which has no general closed
form and is done with a trapezoid rule exploiting the cos^2/sin^2
symmetry of the integrand (exact for the polynomial orders handled
here).

All evaluators accept scalar or array theta and work in the log domain,
so large-order index gaps neither overflow nor lose the tiny tails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .mathcore import laguerre, log_factorial
from .modes import HG, LG, ModeId

__all__ = [
    "b_lg",
    "b_hg_fixed",
    "b_hg_avg",
    "b_group_00",
    "b_pair",
    "small_theta_order",
    "xi_average_rule",
    "AcceptanceSpectrum",
    "XI_INTERVALS",
]

#: Default directional-average resolution.  The trapezoid rule on
#: [0, pi/2] with M intervals integrates the (period-pi, doubly even)
#: integrand exactly for trigonometric degree < 2M, i.e. all HG pairs
#: with m + n + k + t < 2M; doubling M must not change results.
XI_INTERVALS = 64


def _check_theta(th):
    arr = np.asarray(th, dtype=float)
    if np.any(arr < 0.0):
        raise ValueError("theta must be non-negative")
    return arr


def _check_index(value: int, name: str):
    if not isinstance(value, (int, np.integer)):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    return int(value)


def _check_radial(value: int, name: str) -> int:
    value = _check_index(value, name)
    if value < 0:
        raise ValueError(f"{name} must be non-negative, got {value}")
    return value


def _log_abs(values):
    with np.errstate(divide="ignore"):
        return np.log(np.abs(values))


def _log_l0(n: int, x):
    """log |L_n(x)| staying accurate as x -> 0.

    The polynomial rounds to 1.0 once n*x drops below machine epsilon,
    which silently halves the diagonal filter slope; below the crossover
    the two-term series through log1p keeps full relative precision
    (third-order truncation < 1e-10 for every n used here).
    """
    direct = _log_abs(laguerre(n, 0, x))
    # the series lane is discarded for x >= 1e-6 but still evaluated
    # there, where the quadratic can reach or cross -1
    with np.errstate(invalid="ignore", divide="ignore"):
        series = np.log1p(x * (-n + 0.25 * n * (n - 1) * x))
    return np.where(x < 1e-6, series, direct)


def _diagonal(log_overlap2, scalar: bool):
    """B_aa from the log of the squared self-overlap |chi|^2 <= 1.

    expm1 keeps full relative precision near theta = 0 where
    B_aa ~ -2(N+1) theta; rounding can push log marginally above 0, so
    the mathematically guaranteed B_aa <= 0 is enforced.
    """
    out = np.minimum(np.expm1(log_overlap2), 0.0)
    return float(out) if scalar else out


def b_lg(p: int, l: int, q: int, s: int, th):
    """Acceptance spectrum between LG(p, l) and LG(q, s).

    Off-diagonal pairs branch on the sign of l*s; both branches coincide
    for l*s = 0.  The expression is symmetric under exchanging the two
    modes even though it does not look it.
    """
    p = _check_radial(p, "p")
    q = _check_radial(q, "q")
    l = _check_index(l, "l")
    s = _check_index(s, "s")
    arr = _check_theta(th)
    scalar = arr.ndim == 0
    if p == q and l == s:
        log_overlap2 = (
            2.0 * (_log_l0(p + abs(l), arr) + _log_l0(p, arr)) - 2.0 * arr
        )
        return _diagonal(log_overlap2, scalar)
    if l * s >= 0:
        log_pref = float(
            log_factorial(q) - log_factorial(q + abs(s))
            + log_factorial(p + abs(l)) - log_factorial(p)
        )
        power = abs(s) - abs(l)
        lag1 = laguerre(p + abs(l), q - p + abs(s) - abs(l), arr)
        lag2 = laguerre(q, p - q, arr)
    else:
        log_pref = float(
            log_factorial(q) - log_factorial(q + abs(s))
            + log_factorial(p) - log_factorial(p + abs(l))
        )
        power = abs(s) + abs(l)
        lag1 = laguerre(p, q - p + abs(s), arr)
        lag2 = laguerre(q, p - q + abs(l), arr)
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = (
            log_pref
            + power * np.log(arr)
            - 2.0 * arr
            + 2.0 * (_log_abs(lag1) + _log_abs(lag2))
        )
        out = np.exp(logs)
    # power * log(0) and the Laguerre zeros can collide into nan at
    # theta = 0; every off-diagonal filter vanishes there exactly
    out = np.where(arr == 0.0, 0.0, out)
    return float(out) if scalar else out


def b_hg_fixed(m: int, n: int, k: int, t: int, th, xi):
    """Acceptance spectrum between HG(m, n) and HG(k, t) for phase-wave
    direction xi (radians, measured from the x axis).

    The closed form assumes m <= k and n <= t; it is symmetric under
    swapping within either axis, so indices are reordered internally.
    theta and xi broadcast against each other.
    """
    m = _check_radial(m, "m")
    n = _check_radial(n, "n")
    k = _check_radial(k, "k")
    t = _check_radial(t, "t")
    m, k = sorted((m, k))
    n, t = sorted((n, t))
    arr = _check_theta(th)
    xi = np.asarray(xi, dtype=float)
    scalar = arr.ndim == 0 and xi.ndim == 0
    along = 2.0 * arr * np.cos(xi) ** 2
    across = 2.0 * arr * np.sin(xi) ** 2
    if m == k and n == t:
        log_overlap2 = (
            2.0 * (_log_l0(m, along) + _log_l0(n, across)) - 2.0 * arr
        )
        return _diagonal(log_overlap2, scalar)
    log_pref = float(
        log_factorial(m) + log_factorial(n) - log_factorial(k) - log_factorial(t)
    )
    with np.errstate(divide="ignore"):
        logs = log_pref - 2.0 * arr + 2.0 * (
            _log_abs(laguerre(m, k - m, along)) + _log_abs(laguerre(n, t - n, across))
        )
        if k > m:
            logs = logs + (k - m) * np.log(along)
        if t > n:
            logs = logs + (t - n) * np.log(across)
        out = np.exp(logs)
    return float(out) if scalar else out


@lru_cache(maxsize=8)
def xi_average_rule(intervals: int = XI_INTERVALS):
    """Nodes and mean-weights of the directional average over [0, pi/2].

    The integrand is a trigonometric polynomial in xi with period pi and
    even symmetry about both 0 and pi/2, so its average over the full
    circle equals the average over [0, pi/2], and the composite
    trapezoid rule there is the uniform rule on the period: exact up to
    trig degree 2 * intervals - 1.
    """
    if intervals < 1:
        raise ValueError("need at least one interval")
    nodes = np.linspace(0.0, math.pi / 2.0, intervals + 1)
    weights = np.full(intervals + 1, 1.0 / intervals)
    weights[0] *= 0.5
    weights[-1] *= 0.5
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def b_hg_avg(m: int, n: int, k: int, t: int, th, intervals: int = XI_INTERVALS):
    """Direction-averaged HG acceptance spectrum (isotropic turbulence)."""
    arr = _check_theta(th)
    nodes, weights = xi_average_rule(intervals)
    vals = b_hg_fixed(m, n, k, t, arr[..., np.newaxis], nodes)
    out = np.dot(vals, weights)
    return float(out) if arr.ndim == 0 else out


def b_group_00(N: int, th):
    """Combined transfer filter from the fundamental into the whole
    order-N group, (2 theta)^N exp(-2 theta) / N!; family independent."""
    N = _check_index(N, "N")
    if N <= 0:
        raise ValueError("group order must be positive")
    arr = _check_theta(th)
    with np.errstate(divide="ignore"):
        out = np.exp(
            N * np.log(2.0 * arr) - 2.0 * arr - float(log_factorial(N))
        )
    out = np.where(arr == 0.0, 0.0, out)
    return float(out) if arr.ndim == 0 else out


def _positive_part(value: int) -> int:
    return value if value > 0 else 0


def small_theta_order(a: ModeId, b: ModeId) -> int:
    """Leading power of theta of B_ab as theta -> 0.

    Read off symbolically from the closed forms: the explicit theta
    powers plus twice the lowest surviving Laguerre-series terms (a
    polynomial L_n^alpha vanishes at 0 to order (n - (n + alpha))+ for
    the index gaps that occur here).  Diagonal filters are linear with
    slope -2(N+1); pairs whose order differs by more than one are at
    least quadratic.
    """
    if a.family != b.family:
        raise ValueError("acceptance spectra couple modes of one family")
    if a == b:
        return 1
    if a.family == HG:
        return abs(a.m - b.m) + abs(a.n - b.n)
    p, l, q, s = a.p, a.l, b.p, b.l
    if l * s >= 0:
        return (
            abs(s) - abs(l)
            + 2 * _positive_part(q - p)
            + 2 * _positive_part((p + abs(l)) - (q + abs(s)))
        )
    return (
        abs(s) + abs(l)
        + 2 * _positive_part(p - q - abs(s))
        + 2 * _positive_part(q - p - abs(l))
    )


def b_pair(a: ModeId, b: ModeId, th, *, averaged: bool = True, xi: float = 0.0):
    """Dispatch B_ab by family.  HG pairs are direction-averaged unless
    ``averaged`` is False, in which case ``xi`` selects the direction."""
    if a.family != b.family:
        raise ValueError("acceptance spectra couple modes of one family")
    if a.family == LG:
        return b_lg(a.p, a.l, b.p, b.l, th)
    if averaged:
        return b_hg_avg(a.m, a.n, b.m, b.n, th)
    return b_hg_fixed(a.m, a.n, b.m, b.n, th, xi)


@dataclass(frozen=True)
class AcceptanceSpectrum:
    """Callable B_ab(theta) for a fixed mode pair.

    ``averaged`` only matters for HG pairs; LG filters are isotropic by
    construction.
    """

    mode_a: ModeId
    mode_b: ModeId
    averaged: bool = True
    xi: float = 0.0

    def __post_init__(self):
        if self.mode_a.family != self.mode_b.family:
            raise ValueError("acceptance spectra couple modes of one family")

    def __call__(self, th):
        return b_pair(self.mode_a, self.mode_b, th, averaged=self.averaged, xi=self.xi)

    @property
    def leading_order(self) -> int:
        return small_theta_order(self.mode_a, self.mode_b)
