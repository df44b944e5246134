"""Special functions and combinatorics shared by all analytic formulas.

Everything here is pure and vectorized over the main argument.  The one
piece that is deliberately hand-rolled is the generalized Laguerre
polynomial: the coupling expressions need integer superscripts of either
sign, and ``scipy.special.eval_genlaguerre`` returns NaN for negative
integer ``alpha``.  The three-term recurrence is exact for polynomials
and stable over the index ranges we ever touch (degree <= ~60,
argument <= ~300).
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import special as _special

__all__ = [
    "laguerre",
    "hermite",
    "bessel_j",
    "gamma_fn",
    "log_factorial",
    "binomial",
    "gauss_legendre",
]


def laguerre(n: int, a: float, x):
    """Generalized Laguerre polynomial L_n^a(x).

    Evaluated with the three-term recurrence

        (m+1) L_{m+1}^a = (2m + 1 + a - x) L_m^a - (m + a) L_{m-1}^a,

    which defines the polynomial family for any real superscript ``a``,
    including the negative integers produced by cross-mode index gaps.
    For integer ``a <= -1`` with ``n + a >= 0`` the polynomial carries an
    exact root of order ``-a`` at zero, which the recurrence only
    reproduces through catastrophic cancellation; that case is routed
    through the reflection identity
    L_n^{-m}(x) = (-x)^m (n-m)!/n! L_{n-m}^m(x) instead, which keeps full
    relative accuracy arbitrarily close to the origin.

    Parameters
    ----------
    n : int
        Polynomial degree, n >= 0.
    a : float
        Superscript; any sign.
    x : float or ndarray
        Evaluation points.
    """
    if n < 0:
        raise ValueError(f"Laguerre degree must be non-negative, got {n}")
    if a <= -1.0 and a == int(a) and n + a >= 0:
        m = int(-a)
        arr = np.asarray(x, dtype=float)
        scale = math.factorial(n - m) / math.factorial(n)
        out = (-arr) ** m * scale * laguerre(n - m, m, arr)
        return out if arr.ndim else float(out)
    arr = np.asarray(x, dtype=float)
    prev = np.ones_like(arr)
    if n == 0:
        return prev if arr.ndim else 1.0
    cur = 1.0 + a - arr
    for m in range(1, n):
        cur, prev = ((2.0 * m + 1.0 + a - arr) * cur - (m + a) * prev) / (m + 1.0), cur
    return cur if arr.ndim else float(cur)


def hermite(n: int, x):
    """Physicists' Hermite polynomial H_n(x) via H_{m+1} = 2x H_m - 2m H_{m-1}."""
    if n < 0:
        raise ValueError(f"Hermite degree must be non-negative, got {n}")
    arr = np.asarray(x, dtype=float)
    prev = np.ones_like(arr)
    if n == 0:
        return prev if arr.ndim else 1.0
    cur = 2.0 * arr
    for m in range(1, n):
        cur, prev = 2.0 * arr * cur - 2.0 * m * prev, cur
    return cur if arr.ndim else float(cur)


def bessel_j(n: int, x):
    """Bessel function of the first kind J_n(x) for integer order n >= 0."""
    if n < 0:
        raise ValueError(f"Bessel order must be non-negative, got {n}")
    return _special.jv(n, x)


def gamma_fn(x):
    """Gamma function restricted to positive arguments."""
    if np.any(np.asarray(x, dtype=float) <= 0.0):
        raise ValueError("gamma_fn requires x > 0")
    return _special.gamma(x)


def log_factorial(n):
    """ln(n!) for integer n >= 0; vectorized, stable for large n."""
    arr = np.asarray(n)
    if np.any(arr < 0):
        raise ValueError("factorial argument must be non-negative")
    return _special.gammaln(np.asarray(n, dtype=float) + 1.0)


def binomial(n: int, k: int) -> float:
    """Binomial coefficient C(n, k) for 0 <= k <= n, exact before the float cast."""
    if k < 0 or k > n:
        raise ValueError(f"need 0 <= k <= n, got n={n}, k={k}")
    return float(math.comb(int(n), int(k)))


@lru_cache(maxsize=64)
def _leggauss(npts: int):
    nodes, weights = np.polynomial.legendre.leggauss(npts)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_legendre(npts: int, a: float = -1.0, b: float = 1.0):
    """Gauss-Legendre nodes and weights mapped to the interval [a, b].

    Nodes and weights for the reference interval are cached; the mapped
    arrays are fresh copies safe to mutate.
    """
    if npts < 1:
        raise ValueError("need at least one quadrature node")
    t, w = _leggauss(npts)
    half = 0.5 * (b - a)
    return a + half * (t + 1.0), half * w
