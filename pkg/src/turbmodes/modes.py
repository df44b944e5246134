"""Mode labels, Gaussian-beam geometry and transverse field evaluation.

Hermite-Gaussian and Laguerre-Gaussian profiles are evaluated in the
complex-width form, with the global z-only propagation phase dropped
(it is common to all modes of a given order and cancels in every power
quantity this package computes).  Fields are normalized to unit L2 norm
over the transverse plane.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .mathcore import hermite, laguerre, log_factorial

__all__ = [
    "ModeId",
    "BeamGeometry",
    "Basis",
    "parse_mode_label",
    "theta",
    "eval_hg",
    "eval_lg",
    "hg_axis_profile",
    "enumerate_basis",
    "group_by_order",
]

HG = "HG"
LG = "LG"

_LABEL_RE = re.compile(r"^(HG|LG)\((-?\d+),\s*(-?\d+)\)$")


@dataclass(frozen=True)
class ModeId:
    """Spatial mode label: HG(m, n) or LG(p, l).

    ``idx1``/``idx2`` hold (m, n) for HG and (p, l) for LG.  The mode
    order is m + n for HG and 2p + |l| for LG; modes of equal order are
    linear combinations of each other across the two families.
    """

    family: str
    idx1: int
    idx2: int

    def __post_init__(self):
        if self.family not in (HG, LG):
            raise ValueError(f"unknown mode family {self.family!r}")
        if self.idx1 < 0:
            raise ValueError("first mode index must be non-negative")
        if self.family == HG and self.idx2 < 0:
            raise ValueError("HG indices must be non-negative")

    @classmethod
    def hg(cls, m: int, n: int) -> "ModeId":
        return cls(HG, m, n)

    @classmethod
    def lg(cls, p: int, l: int) -> "ModeId":
        return cls(LG, p, l)

    @property
    def m(self) -> int:
        if self.family != HG:
            raise AttributeError("m is defined for HG modes only")
        return self.idx1

    @property
    def n(self) -> int:
        if self.family != HG:
            raise AttributeError("n is defined for HG modes only")
        return self.idx2

    @property
    def p(self) -> int:
        if self.family != LG:
            raise AttributeError("p is defined for LG modes only")
        return self.idx1

    @property
    def l(self) -> int:
        if self.family != LG:
            raise AttributeError("l is defined for LG modes only")
        return self.idx2

    @property
    def order(self) -> int:
        if self.family == HG:
            return self.idx1 + self.idx2
        return 2 * self.idx1 + abs(self.idx2)

    @property
    def is_fundamental(self) -> bool:
        return self.idx1 == 0 and self.idx2 == 0

    def label(self) -> str:
        return f"{self.family}({self.idx1},{self.idx2})"

    def __str__(self) -> str:
        return self.label()


def parse_mode_label(text: str) -> ModeId:
    """Parse a label of the form ``HG(m,n)`` or ``LG(p,l)``."""
    match = _LABEL_RE.match(text.strip())
    if match is None:
        raise ValueError(f"cannot parse mode label {text!r}")
    return ModeId(match.group(1), int(match.group(2)), int(match.group(3)))


@dataclass(frozen=True)
class BeamGeometry:
    """Gaussian beam geometry: wavelength, waist radius and plane z.

    z is measured from the waist.  Derived quantities: optical
    wavenumber k, Rayleigh length z_R and local spot radius w(z).
    """

    wavelength: float
    waist: float
    z: float = 0.0

    def __post_init__(self):
        if self.wavelength <= 0.0 or self.waist <= 0.0:
            raise ValueError("wavelength and waist must be positive")

    @property
    def k(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @property
    def rayleigh(self) -> float:
        return math.pi * self.waist**2 / self.wavelength

    @property
    def spot(self) -> float:
        """Spot radius w(z) = w0 sqrt(1 + (z/z_R)^2)."""
        return self.waist * math.sqrt(1.0 + (self.z / self.rayleigh) ** 2)

    def at(self, z: float) -> "BeamGeometry":
        """Same beam evaluated at another plane."""
        return BeamGeometry(self.wavelength, self.waist, z)


def theta(K, geom: BeamGeometry):
    """Reduced spectral variable theta = K^2 w(z)^2 / 8 of a phase wave."""
    K = np.asarray(K, dtype=float)
    if np.any(K < 0.0):
        raise ValueError("spatial frequency must be non-negative")
    out = K**2 * geom.spot**2 / 8.0
    return out if out.ndim else float(out)


def hg_axis_profile(m: int, coord, geom: BeamGeometry):
    """One Cartesian factor g_m of the separable HG field.

    eval_hg(m, n) == hg_axis_profile(m, x) * hg_axis_profile(n, y); the
    simulator exploits this factorization to project a sampled field on
    a whole HG basis with two matrix products.
    """
    coord = np.asarray(coord, dtype=float)
    k = geom.k
    zr = geom.rayleigh
    qc = zr - 1j * geom.z
    scale = math.sqrt(k * zr / (zr**2 + geom.z**2))
    norm = (k * zr / math.pi) ** 0.25 * math.exp(
        -0.5 * (m * math.log(2.0) + float(log_factorial(m)))
    )
    # principal-branch sqrt; Re(qc) > 0 so the two axis factors square
    # back to the 1/(z_R - i z) of the joint profile
    return (
        norm
        / np.sqrt(qc)
        * hermite(m, coord * scale)
        * np.exp(-k * coord**2 / (2.0 * qc))
    )


def eval_hg(mode: ModeId, x, y, geom: BeamGeometry):
    """Hermite-Gaussian transverse field HG_mn(x, y) at plane geom.z."""
    if mode.family != HG:
        raise ValueError(f"expected an HG mode, got {mode}")
    return hg_axis_profile(mode.m, x, geom) * hg_axis_profile(mode.n, y, geom)


def eval_lg(mode: ModeId, rho, phi, geom: BeamGeometry):
    """Laguerre-Gaussian transverse field LG_pl(rho, phi) at plane geom.z."""
    if mode.family != LG:
        raise ValueError(f"expected an LG mode, got {mode}")
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0.0):
        raise ValueError("radius must be non-negative")
    phi = np.asarray(phi, dtype=float)
    p, l = mode.p, mode.l
    la = abs(l)
    k = geom.k
    zr = geom.rayleigh
    qc = zr - 1j * geom.z
    norm = math.exp(0.5 * (float(log_factorial(p)) - float(log_factorial(p + la))))
    norm /= math.sqrt(math.pi)
    radial = laguerre(p, la, k * zr * rho**2 / (zr**2 + geom.z**2))
    return (
        norm
        * (math.sqrt(k * zr) / qc) ** (la + 1)
        * rho**la
        * np.exp(1j * l * phi)
        * radial
        * np.exp(-k * rho**2 / (2.0 * qc))
    )


@dataclass(frozen=True)
class Basis:
    """Ordered single-family mode basis, all orders <= n_max.

    Ordering is deterministic: order N ascending, then m ascending for
    HG and (p, l) ascending for LG.  The in-group ordering is a pure
    serialization convention; grouped-by-order results never depend on
    it.
    """

    modes: tuple[ModeId, ...]

    def __post_init__(self):
        if not self.modes:
            raise ValueError("basis must not be empty")
        families = {mode.family for mode in self.modes}
        if len(families) != 1:
            raise ValueError("basis must not mix mode families")
        if len(set(self.modes)) != len(self.modes):
            raise ValueError("basis contains duplicate modes")

    @property
    def family(self) -> str:
        return self.modes[0].family

    @property
    def n_max(self) -> int:
        return max(mode.order for mode in self.modes)

    def __len__(self) -> int:
        return len(self.modes)

    def __iter__(self):
        return iter(self.modes)

    def index(self, mode: ModeId) -> int:
        return self.modes.index(mode)

    def labels(self) -> list[str]:
        return [mode.label() for mode in self.modes]

    def orders(self) -> np.ndarray:
        return np.array([mode.order for mode in self.modes], dtype=int)


def enumerate_basis(family: str, n_max: int) -> Basis:
    """All modes of the family with order <= n_max; (n_max+1)(n_max+2)/2 of them."""
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    modes: list[ModeId] = []
    for order in range(n_max + 1):
        if family == HG:
            modes.extend(ModeId.hg(m, order - m) for m in range(order + 1))
        elif family == LG:
            group = []
            for p in range(order // 2 + 1):
                rest = order - 2 * p
                if rest == 0:
                    group.append(ModeId.lg(p, 0))
                else:
                    group.append(ModeId.lg(p, -rest))
                    group.append(ModeId.lg(p, rest))
            group.sort(key=lambda mode: (mode.p, mode.l))
            modes.extend(group)
        else:
            raise ValueError(f"unknown mode family {family!r}")
    return Basis(tuple(modes))


def group_by_order(basis: Basis, values) -> list[tuple[int, float]]:
    """Partial sums of a per-mode vector by mode order, order ascending."""
    values = np.asarray(getattr(values, "values", values), dtype=float)
    if values.shape != (len(basis),):
        raise ValueError(
            f"vector length {values.shape} does not match basis size {len(basis)}"
        )
    totals: dict[int, float] = {}
    for mode, value in zip(basis.modes, values):
        totals[mode.order] = totals.get(mode.order, 0.0) + float(value)
    return sorted(totals.items())
