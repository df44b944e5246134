"""Coupling-rate matrices and mean modal-power evolution.

The mean power exchange between modes a and b in a statistically uniform
channel is governed by a symmetric rate matrix with entries

    rate_ab = 0.115 Cn^2 k^2 w^{5/3} I_ab,   I_ab = integral of g(theta) B_ab(theta)

where g is the turbulence weight in the reduced variable theta
(theta^{-11/6} for Kolmogorov, shifted and damped for von Karman, or an
arbitrary tabulated damping) and B_ab the acceptance spectra from
:mod:`turbmodes.coupling`.  The 0.115 prefactor is evaluated exactly in
:mod:`turbmodes.turbulence`.  Mean powers then evolve as
v(L) = expm(rate_matrix * L) v(0).

Quadrature layout for I_ab: the integrand has an integrable theta^{-5/6}
endpoint (diagonal pairs) which the substitution theta = t^6 maps to an
analytic function on [0, 1]; above theta = 1 octave panels follow the
exp(-2 theta) decay, with the cutoff pushed past the Laguerre
polynomial growth.  Diagonal pairs split B_aa = |chi|^2 - 1 and absorb
the slowly decaying -g part into a closed-form (or 1-D numeric) tail,
so no algebraic tail is ever truncated.  Every piece is evaluated at n
and 2n nodes; the node-doubling differences give the reported error
estimate.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from configparser import ConfigParser
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.special import gammaincc

from .coupling import b_pair
from .mathcore import gamma_fn, gauss_legendre
from .modes import Basis, BeamGeometry, ModeId, enumerate_basis, parse_mode_label
from .turbulence import (
    CUSTOM,
    KOLMOGOROV,
    RATE_PREFACTOR,
    VON_KARMAN,
    DampingTable,
    TurbulenceModel,
)

__all__ = [
    "QuadratureError",
    "SpectralWeight",
    "dimensionless_integral",
    "CouplingMatrix",
    "PowerVector",
    "lambda_matrix",
    "cn2_for_target_rate",
    "propagate",
    "nonuniform_channel",
    "ChannelTransformer",
    "scaling_law_check",
    "DEFAULT_RTOL",
]

#: Default relative tolerance demanded of every I_ab evaluation.
DEFAULT_RTOL = 1e-8


class QuadratureError(ArithmeticError):
    """Raised when a spectral integral misses its requested tolerance."""


@dataclass(frozen=True)
class SpectralWeight:
    """Weight g(theta) of the dimensionless coupling integral.

    ``offset`` is the outer-scale shift pi^2 w^2 / (2 L0^2) and ``decay``
    the inner-scale damping rate 2 l0^2 / (pi^2 w^2), both dimensionless;
    a custom weight keeps the Kolmogorov power law times a tabulated
    damping factor evaluated at the cyclic frequency
    f = freq_scale * sqrt(theta).
    """

    kind: str
    offset: float = 0.0
    decay: float = 0.0
    damping: DampingTable | None = None
    freq_scale: float = 0.0

    def __post_init__(self):
        if self.kind not in (KOLMOGOROV, VON_KARMAN, CUSTOM):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.offset < 0.0 or self.decay < 0.0:
            raise ValueError("offset and decay must be non-negative")
        if self.kind == CUSTOM:
            if self.damping is None:
                raise ValueError("custom weight needs a damping table")
            if self.freq_scale <= 0.0:
                raise ValueError("custom weight needs a positive frequency scale")

    @classmethod
    def kolmogorov(cls) -> "SpectralWeight":
        return cls(kind=KOLMOGOROV)

    @classmethod
    def von_karman(cls, spot: float, l0: float, outer: float) -> "SpectralWeight":
        """Weight for inner scale l0 and outer scale L0 at spot radius w(z)."""
        if spot <= 0.0:
            raise ValueError("spot radius must be positive")
        offset = 0.0 if math.isinf(outer) else math.pi**2 * spot**2 / (2.0 * outer**2)
        decay = 2.0 * l0**2 / (math.pi**2 * spot**2)
        return cls(kind=VON_KARMAN, offset=offset, decay=decay)

    @classmethod
    def custom(cls, spot: float, damping: DampingTable) -> "SpectralWeight":
        if spot <= 0.0:
            raise ValueError("spot radius must be positive")
        return cls(kind=CUSTOM, damping=damping, freq_scale=math.sqrt(2.0) / (math.pi * spot))

    @classmethod
    def from_model(cls, model: TurbulenceModel, spot: float) -> "SpectralWeight":
        if model.kind == KOLMOGOROV:
            return cls.kolmogorov()
        if model.kind == VON_KARMAN:
            return cls.von_karman(spot, model.l0, model.L0)
        return cls.custom(spot, model.damping)

    def __call__(self, th):
        th = np.asarray(th, dtype=float)
        if self.kind == VON_KARMAN:
            out = (th + self.offset) ** (-11.0 / 6.0)
            if self.decay > 0.0:
                out = out * np.exp(-self.decay * th)
            return out
        out = th ** (-11.0 / 6.0)
        if self.kind == CUSTOM:
            out = out * self.damping(self.freq_scale * np.sqrt(th))
        return out

    def breakpoints(self, lo: float, hi: float) -> list[float]:
        """Interior panel breaks where g loses analyticity (or changes
        character): the offset knee for von Karman, the damping-table
        nodes for custom weights."""
        points: list[float] = []
        if self.kind == VON_KARMAN and lo < self.offset < hi:
            points.append(self.offset)
        if self.kind == CUSTOM:
            knots = (self.damping.freq / self.freq_scale) ** 2
            points.extend(k for k in knots if lo < k < hi)
            if len(points) > 48:
                points = points[:: len(points) // 48 + 1]
        return sorted(points)

    def tail(self, cut: float) -> tuple[float, float]:
        """Integral of g over [cut, infinity) and its error estimate."""
        if cut <= 0.0:
            raise ValueError("tail cut must be positive")
        if self.kind == KOLMOGOROV:
            return 1.2 * cut ** (-5.0 / 6.0), 0.0
        if self.kind == VON_KARMAN:
            shifted = cut + self.offset
            if self.decay == 0.0:
                return 1.2 * shifted ** (-5.0 / 6.0), 0.0
            # integral of (theta+A)^{-11/6} e^{-B theta}: shift to an
            # upper incomplete gamma of order -5/6, then lift it to
            # order 1/6 so the regularized scipy form applies
            upper = (
                gamma_fn(1.0 / 6.0) * gammaincc(1.0 / 6.0, self.decay * shifted)
            )
            value = 1.2 * (
                shifted ** (-5.0 / 6.0) * math.exp(-self.decay * cut)
                - math.exp(self.offset * self.decay) * self.decay ** (5.0 / 6.0) * upper
            )
            return value, 0.0
        # custom: u = theta^{-5/6} flattens the power law exactly,
        # leaving the tabulated damping on a finite interval
        u_hi = cut ** (-5.0 / 6.0)

        def integrand(u):
            return self.damping(self.freq_scale * u ** (-3.0 / 5.0))

        knots = [
            f ** (-5.0 / 6.0)
            for f in self.breakpoints(cut, math.inf)
        ]
        edges = sorted({0.0, u_hi, *[k for k in knots if 0.0 < k < u_hi]})
        coarse = _panel_sum(integrand, edges, 64)
        fine = _panel_sum(integrand, edges, 128)
        return 1.2 * fine, 1.2 * abs(fine - coarse)


def _panel_sum(fn, edges, order: int) -> float:
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        x, w = gauss_legendre(order, lo, hi)
        total += float(np.dot(fn(x), w))
    return total


def _octave_edges(lo: float, hi: float) -> list[float]:
    edges = [lo]
    while edges[-1] < hi:
        edges.append(min(edges[-1] * 2.0, hi))
    return edges


def _bisected(edges: list[float]) -> list[float]:
    out = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        out.extend((lo, 0.5 * (lo + hi)))
    out.append(edges[-1])
    return out


def dimensionless_integral(
    a: ModeId,
    b: ModeId,
    weight: SpectralWeight,
    *,
    rtol: float = DEFAULT_RTOL,
) -> float:
    """Spectral coupling integral I_ab = int_0^inf g(theta) B_ab dtheta.

    Negative on the diagonal (depletion), positive off it.  Raises
    :class:`QuadratureError` when the node-doubling error estimate
    exceeds ``rtol`` relative to the result.
    """
    diagonal = a == b
    theta_max = 40.0 + 6.0 * max(a.order, b.order)

    def low(t):
        th = t**6
        return 6.0 * t**5 * weight(th) * b_pair(a, b, th)

    if diagonal:

        def high(th):
            # B_aa + 1 = |chi|^2 decays like exp(-2 theta); the pure -g
            # part is restored from the closed-form tail below
            return weight(th) * (b_pair(a, b, th) + 1.0)

    else:

        def high(th):
            return weight(th) * b_pair(a, b, th)

    edges_low = sorted({0.0, 1.0, *(p ** (1.0 / 6.0) for p in weight.breakpoints(0.0, 1.0))})
    edges_high = sorted({*_octave_edges(1.0, theta_max), *weight.breakpoints(1.0, theta_max)})
    tail = tail_err = 0.0
    if diagonal:
        tail, tail_err = weight.tail(1.0)
    # high-order polynomial factors and kinked damping tables converge
    # slowly on wide panels; halve them until the estimate settles
    for _ in range(3):
        coarse = _panel_sum(low, edges_low, 96) + _panel_sum(high, edges_high, 32)
        fine = _panel_sum(low, edges_low, 192) + _panel_sum(high, edges_high, 64)
        value = fine - tail
        error = abs(fine - coarse) + tail_err
        if error <= rtol * abs(value) + 1e-12:
            return value
        edges_low = _bisected(edges_low)
        edges_high = _bisected(edges_high)
    raise QuadratureError(
        f"integral for {a}-{b} reached error estimate {error:.3e} "
        f"on value {value:.6e}, above rtol {rtol:g}"
    )


@dataclass(frozen=True, eq=False)
class PowerVector:
    """Mean modal powers as fractions of the launched power."""

    basis: Basis
    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.shape != (len(self.basis),):
            raise ValueError(
                f"expected {len(self.basis)} entries, got shape {arr.shape}"
            )
        if np.any(arr < -1e-12):
            raise ValueError("modal powers must be non-negative")
        arr[arr < 0.0] = 0.0
        total = float(arr.sum())
        if total > 1.0 + 1e-9:
            raise ValueError(f"total modal power {total} exceeds unity")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def unit(cls, basis: Basis, mode: ModeId | None = None) -> "PowerVector":
        """All power in one mode (the family fundamental by default)."""
        values = np.zeros(len(basis))
        if mode is None:
            mode = next(m for m in basis if m.is_fundamental)
        values[basis.index(mode)] = 1.0
        return cls(basis, values)

    def value_of(self, mode: ModeId) -> float:
        return float(self.values[self.basis.index(mode)])

    @property
    def total(self) -> float:
        return float(self.values.sum())

    def grouped(self) -> list[tuple[int, float]]:
        from .modes import group_by_order

        return group_by_order(self.basis, self.values)


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    """Symmetric power-transfer rate matrix on a mode basis.

    ``rates`` carries units 1/m; ``i_dimensionless`` the geometry-only
    integrals I_ab it was assembled from.  Diagonal entries are
    non-positive (depletion), off-diagonal non-negative, and column sums
    non-positive: a truncated basis only leaks power outward.
    """

    basis: Basis
    rates: np.ndarray
    i_dimensionless: np.ndarray
    model: TurbulenceModel
    geom: BeamGeometry
    rtol: float = DEFAULT_RTOL

    def __post_init__(self):
        n = len(self.basis)
        for name in ("rates", "i_dimensionless"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != (n, n):
                raise ValueError(f"{name} must be {n}x{n}, got {arr.shape}")
            if not np.allclose(arr, arr.T, rtol=1e-10, atol=1e-300):
                raise ValueError(f"{name} must be symmetric")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        diag = np.diag(self.rates)
        if np.any(diag > 0.0):
            raise ValueError("diagonal rates must be non-positive")
        off = self.rates - np.diag(diag)
        if np.any(off < 0.0):
            raise ValueError("off-diagonal rates must be non-negative")

    @cached_property
    def _eig(self) -> tuple[np.ndarray, np.ndarray]:
        return np.linalg.eigh(self.rates)

    def transfer(self, length: float) -> np.ndarray:
        """exp(rates * length) through the symmetric eigendecomposition.

        The result is an intensity-transfer operator and must be
        entrywise non-negative; entries below -1e-12 mean the matrix was
        not a valid generator and raise, roundoff negatives are zeroed.
        """
        if length < 0.0:
            raise ValueError("channel length must be non-negative")
        evals, evecs = self._eig
        out = (evecs * np.exp(evals * length)) @ evecs.T
        out = 0.5 * (out + out.T)
        if out.min() < -1e-12:
            raise ArithmeticError(
                f"transfer operator has negative entry {out.min():.3e}"
            )
        out[out < 0.0] = 0.0
        return out

    def scaled(self, factor: float) -> "CouplingMatrix":
        """Same geometry, turbulence strength multiplied by ``factor``."""
        if factor < 0.0:
            raise ValueError("scale factor must be non-negative")
        return CouplingMatrix(
            basis=self.basis,
            rates=self.rates * factor,
            i_dimensionless=self.i_dimensionless,
            model=replace(self.model, cn2=self.model.cn2 * factor),
            geom=self.geom,
            rtol=self.rtol,
        )

    def fundamental_rate(self) -> float:
        """Diagonal rate of the family fundamental (1/m, non-positive)."""
        idx = next(i for i, m in enumerate(self.basis) if m.is_fundamental)
        return float(self.rates[idx, idx])

    def save(self, csv_path, meta_path=None) -> None:
        """Dense CSV (header and row labels are mode labels) plus a
        structured text sidecar with model, geometry and tolerances."""
        csv_path = Path(csv_path)
        meta_path = Path(meta_path) if meta_path else csv_path.with_suffix(".txt")
        labels = self.basis.labels()
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["mode", *labels])
            for label, row in zip(labels, self.rates):
                writer.writerow([label, *(f"{v:.17e}" for v in row)])
        parser = ConfigParser()
        parser["matrix"] = {
            "family": self.basis.family,
            "n_max": str(self.basis.n_max),
            "size": str(len(self.basis)),
            "rate_unit": "1/m",
            "rate_per_i": f"{self.rate_scale():.17e}",
        }
        parser["turbulence"] = {
            "kind": self.model.kind,
            "cn2": f"{self.model.cn2:.17e}",
            "inner_scale": f"{self.model.l0:.17e}",
            "outer_scale": f"{self.model.L0:.17e}",
        }
        parser["beam"] = {
            "wavelength": f"{self.geom.wavelength:.17e}",
            "waist": f"{self.geom.waist:.17e}",
            "z": f"{self.geom.z:.17e}",
        }
        parser["quadrature"] = {"rtol": f"{self.rtol:g}"}
        with open(meta_path, "w") as fh:
            parser.write(fh)

    def rate_scale(self) -> float:
        """Rate per unit I: the exact-prefactor Cn^2 k^2 w^{5/3} factor."""
        return (
            RATE_PREFACTOR
            * self.model.cn2
            * self.geom.k**2
            * self.geom.spot ** (5.0 / 3.0)
        )

    @classmethod
    def load(cls, csv_path, meta_path=None) -> "CouplingMatrix":
        csv_path = Path(csv_path)
        meta_path = Path(meta_path) if meta_path else csv_path.with_suffix(".txt")
        parser = ConfigParser()
        with open(meta_path) as fh:
            parser.read_file(fh)
        with open(csv_path, newline="") as fh:
            rows = list(csv.reader(fh))
        labels = rows[0][1:]
        modes = tuple(parse_mode_label(label) for label in labels)
        rates = np.array([[float(v) for v in row[1:]] for row in rows[1:]])
        kind = parser["turbulence"]["kind"]
        if kind == CUSTOM:
            raise ValueError("custom damping tables are not embedded in metadata")
        model = TurbulenceModel(
            kind=kind,
            cn2=float(parser["turbulence"]["cn2"]),
            l0=float(parser["turbulence"]["inner_scale"]),
            L0=float(parser["turbulence"]["outer_scale"]),
        )
        geom = BeamGeometry(
            wavelength=float(parser["beam"]["wavelength"]),
            waist=float(parser["beam"]["waist"]),
            z=float(parser["beam"]["z"]),
        )
        scale = float(parser["matrix"]["rate_per_i"])
        i_matrix = rates / scale if scale > 0.0 else np.zeros_like(rates)
        return cls(
            basis=Basis(modes),
            rates=rates,
            i_dimensionless=i_matrix,
            model=model,
            geom=geom,
            rtol=float(parser["quadrature"]["rtol"]),
        )


def lambda_matrix(
    basis: Basis,
    turb: TurbulenceModel,
    geom: BeamGeometry,
    *,
    rtol: float = DEFAULT_RTOL,
    workers: int | None = None,
) -> CouplingMatrix:
    """Assemble the full coupling-rate matrix on ``basis``.

    Entries are independent; the upper triangle is distributed over a
    thread pool (the quadratures are numpy-bound) and mirrored.  A dead
    channel (cn2 = 0) short-circuits to the zero matrix.
    """
    n = len(basis)
    i_matrix = np.zeros((n, n))
    if turb.cn2 > 0.0:
        weight = SpectralWeight.from_model(turb, geom.spot)
        pairs = [(i, j) for i in range(n) for j in range(i, n)]

        def entry(pair):
            i, j = pair
            return i, j, dimensionless_integral(
                basis.modes[i], basis.modes[j], weight, rtol=rtol
            )

        if workers == 0:
            results = map(entry, pairs)
        else:
            pool = ThreadPoolExecutor(max_workers=workers or os.cpu_count())
            with pool:
                results = list(pool.map(entry, pairs))
        for i, j, value in results:
            i_matrix[i, j] = i_matrix[j, i] = value
    rates = (
        RATE_PREFACTOR * turb.cn2 * geom.k**2 * geom.spot ** (5.0 / 3.0)
    ) * i_matrix
    return CouplingMatrix(
        basis=basis,
        rates=rates,
        i_dimensionless=i_matrix,
        model=turb,
        geom=geom,
        rtol=rtol,
    )


def cn2_for_target_rate(
    target_rate_length: float, i00: float, geom: BeamGeometry, length: float
) -> float:
    """Cn^2 that makes |fundamental rate| * length hit the given target."""
    if target_rate_length < 0.0:
        raise ValueError("target must be non-negative")
    if length <= 0.0:
        raise ValueError("channel length must be positive")
    scale = RATE_PREFACTOR * geom.k**2 * geom.spot ** (5.0 / 3.0) * abs(i00)
    return target_rate_length / (scale * length)


def propagate(matrix: CouplingMatrix, length: float, v0: PowerVector) -> PowerVector:
    """Mean modal powers after a uniform channel of the given length."""
    if v0.basis != matrix.basis:
        raise ValueError("power vector and matrix bases differ")
    out = matrix.transfer(length) @ v0.values
    if np.any(out < -1e-12):
        raise ArithmeticError("propagation produced a negative modal power")
    out[out < 0.0] = 0.0
    return PowerVector(matrix.basis, out)


@dataclass(frozen=True, eq=False)
class ChannelTransformer:
    """Ordered product of per-segment transfer operators."""

    steps: tuple[tuple[CouplingMatrix, float], ...]

    def __post_init__(self):
        if not self.steps:
            raise ValueError("channel needs at least one segment")
        first = self.steps[0][0].basis
        if any(matrix.basis != first for matrix, _ in self.steps):
            raise ValueError("all segments must share one basis")

    @property
    def basis(self) -> Basis:
        return self.steps[0][0].basis

    def __call__(self, v0: PowerVector) -> PowerVector:
        out = v0
        for matrix, length in self.steps:
            out = propagate(matrix, length, out)
        return out


def nonuniform_channel(
    basis: Basis,
    segments,
    *,
    rtol: float = DEFAULT_RTOL,
    workers: int | None = None,
) -> ChannelTransformer:
    """Piecewise-uniform channel: segments are (length, model, geometry)
    triples applied in order."""
    steps = []
    for length, model, geom in segments:
        if length < 0.0:
            raise ValueError("segment lengths must be non-negative")
        steps.append(
            (lambda_matrix(basis, model, geom, rtol=rtol, workers=workers), length)
        )
    return ChannelTransformer(tuple(steps))


def scaling_law_check(
    family: str, n_max: int, *, rtol: float = DEFAULT_RTOL
) -> list[tuple[ModeId, float, float, float]]:
    """Pure-Kolmogorov diagonal integrals against 12 (N+1)^{5/6}.

    Returns one row (mode, I_aa, approximation, relative error) per
    distinct diagonal value: LG classes keep l >= 0, HG classes m <= n.
    """
    weight = SpectralWeight.kolmogorov()
    rows = []
    for mode in enumerate_basis(family, n_max):
        if mode.family == "LG" and mode.l < 0:
            continue
        if mode.family == "HG" and mode.m > mode.n:
            continue
        i_val = dimensionless_integral(mode, mode, weight, rtol=rtol)
        approx = 12.0 * (mode.order + 1) ** (5.0 / 6.0)
        rel_err = abs(abs(i_val) - approx) / abs(i_val)
        rows.append((mode, i_val, approx, rel_err))
    return rows
