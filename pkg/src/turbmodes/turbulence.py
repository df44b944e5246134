"""Turbulence spectra, structure functions and strength conversions.

All prefactors are kept in their exact Gamma-function form; the familiar
rounded constants of the turbulence literature (0.033, 0.207, 1.23,
6.88, 0.42, 0.023, ...) are only targets for tests.  Spectral damping
outside the inertial range follows the modified von Karman model: the
power law is expressed in cyclic frequency f = K / (2 pi) and

    f^{-11/3}  ->  exp(-l0^2 f^2) / (f^2 + 1/L0^2)^{11/6}.

Normalization convention used throughout the package: the 2-D phase
spectrum F_S is defined such that the phase variance is the plain plane
integral of F_S over K (no (2 pi)^{-2}), which makes the structure
function D(rho) = 2 * integral of (1 - J0(K rho)) F_S d^2K.  The cyclic
PSD used by the phase-screen simulator is tied to the same convention
and lands on the standard 0.023 r0^{-5/3} f^{-11/3} form, which is an
end-to-end consistency check of the bookkeeping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SPECTRUM_3D",
    "PHASE_SPECTRUM_2D",
    "STRUCTURE_PREFACTOR",
    "FRIED_STRUCTURE",
    "FRIED_COEFF",
    "RYTOV_PREFACTOR",
    "RATE_PREFACTOR",
    "FRIED_RATE",
    "RYTOV_PER_STRENGTH",
    "PSD_R0_PREFACTOR",
    "DampingTable",
    "TurbulenceModel",
    "ChannelStrength",
    "refractive_spectrum",
    "phase_spectrum",
    "fried_r0",
    "cn2_from_r0",
    "rytov_sigma2",
    "rytov_from_strength",
    "structure_function_phase",
    "phase_psd_cyclic",
    "rytov_step",
]

_G = math.gamma

#: 3-D refractive-index spectrum prefactor; approximately 0.033.
SPECTRUM_3D = 5.0 / (18.0 * math.pi * _G(1.0 / 3.0))

#: 2-D phase spectrum prefactor 2 pi k^2 L x SPECTRUM_3D; approximately 0.207.
PHASE_SPECTRUM_2D = 2.0 * math.pi * SPECTRUM_3D

#: Phase structure function prefactor; approximately 2 x 1.46.
STRUCTURE_PREFACTOR = 2.0 * math.sqrt(math.pi) * _G(1.0 / 6.0) / (5.0 * _G(2.0 / 3.0))

#: Fried form of the same structure function; approximately 6.88.
FRIED_STRUCTURE = 8.0 * math.sqrt(2.0) * (0.6 * _G(1.2)) ** (5.0 / 6.0)

#: r0 = (FRIED_COEFF Cn^2 k^2 L)^{-3/5}; approximately 0.42.
FRIED_COEFF = STRUCTURE_PREFACTOR / FRIED_STRUCTURE

#: Rytov variance prefactor; approximately 1.23.
RYTOV_PREFACTOR = (
    4.0 * 2.0 ** (1.0 / 6.0) * math.pi**1.5 * (math.sqrt(3.0) - 1.0)
    / (11.0 * _G(2.0 / 3.0))
)

#: Coupling-rate prefactor in Lambda = RATE_PREFACTOR Cn^2 k^2 w^{5/3} I;
#: approximately 0.115.  Equals 8 pi PHASE_SPECTRUM_2D / 8^{11/6}.
RATE_PREFACTOR = 8.0 * math.pi * PHASE_SPECTRUM_2D / 8.0 ** (11.0 / 6.0)

#: Fried form of the rate: Lambda L = FRIED_RATE (w/r0)^{5/3} I; approximately 0.272.
FRIED_RATE = RATE_PREFACTOR / FRIED_COEFF

#: Rytov variance per unit interaction strength; approximately 10.7.
RYTOV_PER_STRENGTH = RYTOV_PREFACTOR / RATE_PREFACTOR

#: Cyclic phase PSD of an r0-normalized channel,
#: PSD(f) = PSD_R0_PREFACTOR r0^{-5/3} f^{-11/3}; approximately 0.023.
PSD_R0_PREFACTOR = PHASE_SPECTRUM_2D * (2.0 * math.pi) ** (-5.0 / 3.0) / FRIED_COEFF

KOLMOGOROV = "kolmogorov"
VON_KARMAN = "von_karman"
CUSTOM = "custom"
_KINDS = (KOLMOGOROV, VON_KARMAN, CUSTOM)


@dataclass(frozen=True)
class DampingTable:
    """Tabulated damping factor D(f) multiplying the Kolmogorov f^{-11/3} law.

    Interpolation is linear in log f; outside the tabulated range the
    edge values are held constant.  Intended for measured residual
    spectra, e.g. behind a tracking or adaptive-optics loop.
    """

    freq: np.ndarray
    value: np.ndarray

    def __post_init__(self):
        freq = np.asarray(self.freq, dtype=float)
        value = np.asarray(self.value, dtype=float)
        if freq.ndim != 1 or freq.shape != value.shape or freq.size < 2:
            raise ValueError("damping table needs two 1-D columns of equal length >= 2")
        if np.any(freq <= 0.0) or np.any(np.diff(freq) <= 0.0):
            raise ValueError("damping frequencies must be positive and increasing")
        if np.any(value < 0.0):
            raise ValueError("damping factors must be non-negative")
        freq.setflags(write=False)
        value.setflags(write=False)
        object.__setattr__(self, "freq", freq)
        object.__setattr__(self, "value", value)

    def __call__(self, f):
        f = np.asarray(f, dtype=float)
        logf = np.log(np.maximum(f, self.freq[0] * 1e-30))
        out = np.interp(logf, np.log(self.freq), self.value)
        return out if out.ndim else float(out)

    @classmethod
    def from_file(cls, path) -> "DampingTable":
        """Read a two-column whitespace-separated text file (f, damping).

        Lines starting with '#' are comments.
        """
        data = np.loadtxt(path, comments="#", ndmin=2)
        if data.shape[1] != 2:
            raise ValueError(f"{path}: expected two columns (f, damping)")
        return cls(freq=data[:, 0], value=data[:, 1])


@dataclass(frozen=True)
class TurbulenceModel:
    """Refractive-index turbulence description for one channel segment.

    ``cn2`` is the structure constant in m^{-2/3}.  Zero is allowed so a
    turbulence-free segment can sit inside a segmented channel; every
    spectrum is then identically zero.  ``kind`` selects the spectral
    shape: pure Kolmogorov (l0 = 0, L0 = inf implied), modified
    von Karman (0 < l0 < L0), or a custom tabulated damping factor.
    """

    cn2: float
    l0: float = 0.0
    L0: float = math.inf
    kind: str = KOLMOGOROV
    damping: DampingTable | None = None

    def __post_init__(self):
        if self.cn2 < 0.0:
            raise ValueError("cn2 must be non-negative")
        if self.kind not in _KINDS:
            raise ValueError(f"unknown spectrum kind {self.kind!r}")
        if self.kind == VON_KARMAN:
            if not (0.0 < self.l0 < self.L0):
                raise ValueError("von Karman model needs 0 < l0 < L0")
        if self.kind == CUSTOM and self.damping is None:
            raise ValueError("custom spectrum requires a damping table")
        if self.kind == KOLMOGOROV and not (self.l0 == 0.0 and math.isinf(self.L0)):
            raise ValueError("Kolmogorov model means l0 = 0 and L0 = inf")


@dataclass(frozen=True)
class ChannelStrength:
    """Channel-level turbulence strength summary."""

    r0: float
    rytov: float
    length: float

    def __post_init__(self):
        if self.r0 <= 0.0:
            raise ValueError("Fried parameter must be positive")
        if self.rytov < 0.0:
            raise ValueError("Rytov variance must be non-negative")


def _damped_power(model: TurbulenceModel, f):
    """The (damped) f^{-11/3} factor of the spectrum, cyclic-frequency form."""
    f = np.asarray(f, dtype=float)
    if model.kind == VON_KARMAN:
        return np.exp(-(model.l0**2) * f**2) * (f**2 + model.L0**-2) ** (-11.0 / 6.0)
    if np.any(f <= 0.0):
        raise ValueError("spectrum diverges at K = 0 without outer-scale damping")
    power = f ** (-11.0 / 3.0)
    if model.kind == CUSTOM:
        power = power * model.damping(f)
    return power


def refractive_spectrum(model: TurbulenceModel, K):
    """3-D refractive-index fluctuation spectrum Phi_n(K), units m^3.

    K is the angular spatial frequency in rad/m.  K = 0 is rejected for
    spectra without outer-scale damping.
    """
    K = np.asarray(K, dtype=float)
    if np.any(K < 0.0):
        raise ValueError("spatial frequency must be non-negative")
    power = _damped_power(model, K / (2.0 * math.pi))
    out = SPECTRUM_3D * model.cn2 * (2.0 * math.pi) ** (-11.0 / 3.0) * power
    return out if out.ndim else float(out)


def phase_spectrum(model: TurbulenceModel, K, k: float, L: float):
    """2-D phase fluctuation spectrum F_S(K) = 2 pi k^2 L Phi_n(K).

    Normalized so the phase variance is the plane integral of F_S over
    K (no (2 pi)^{-2} in front); see the module docstring.
    """
    if k <= 0.0 or L <= 0.0:
        raise ValueError("wavenumber and path length must be positive")
    return 2.0 * math.pi * k**2 * L * refractive_spectrum(model, K)


def fried_r0(cn2: float, k: float, L: float) -> float:
    """Fried parameter r0 = (FRIED_COEFF Cn^2 k^2 L)^{-3/5} in meters."""
    if cn2 < 0.0 or k <= 0.0 or L <= 0.0:
        raise ValueError("need cn2 >= 0 and positive k, L")
    if cn2 == 0.0:
        return math.inf
    return (FRIED_COEFF * cn2 * k**2 * L) ** (-0.6)


def cn2_from_r0(r0: float, k: float, L: float) -> float:
    """Inverse of :func:`fried_r0`; round-trips to machine precision."""
    if r0 <= 0.0 or k <= 0.0 or L <= 0.0:
        raise ValueError("need positive r0, k, L")
    if math.isinf(r0):
        return 0.0
    return r0 ** (-5.0 / 3.0) / (FRIED_COEFF * k**2 * L)


def rytov_sigma2(cn2: float, k: float, L: float) -> float:
    """Plane-wave Rytov variance RYTOV_PREFACTOR Cn^2 k^{7/6} L^{11/6}."""
    if cn2 < 0.0 or k <= 0.0 or L <= 0.0:
        raise ValueError("need cn2 >= 0 and positive k, L")
    return RYTOV_PREFACTOR * cn2 * k ** (7.0 / 6.0) * L ** (11.0 / 6.0)


def rytov_from_strength(lambda00L: float, i00: float, L: float, k: float, w: float) -> float:
    """Rytov variance expressed through the fundamental interaction strength.

    sigma_R^2 = RYTOV_PER_STRENGTH (|Lambda00 L| / |I00|) (L / (k w^2))^{5/6}.
    Magnitudes are used, so either sign convention for the (negative)
    diagonal entries is accepted.
    """
    if L <= 0.0 or k <= 0.0 or w <= 0.0 or i00 == 0.0:
        raise ValueError("need positive L, k, w and nonzero i00")
    return (
        RYTOV_PER_STRENGTH
        * (abs(lambda00L) / abs(i00))
        * (L / (k * w**2)) ** (5.0 / 6.0)
    )


def structure_function_phase(rho, r0: float):
    """Phase structure function FRIED_STRUCTURE (rho / r0)^{5/3} in rad^2."""
    if r0 <= 0.0:
        raise ValueError("Fried parameter must be positive")
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0.0):
        raise ValueError("separation must be non-negative")
    out = FRIED_STRUCTURE * (rho / r0) ** (5.0 / 3.0)
    return out if out.ndim else float(out)


def phase_psd_cyclic(f, r0: float, l0: float = 0.0, L0: float = math.inf):
    """Two-sided phase PSD over cyclic frequency f for a channel of given r0.

    Normalized so the accumulated phase variance equals the plane
    integral of the PSD over f.  With l0 = 0 and L0 = inf this is the
    classic ~0.023 r0^{-5/3} f^{-11/3}; otherwise the von Karman damping
    replaces the bare power law.  f = 0 is valid only with finite L0.
    """
    if r0 <= 0.0:
        raise ValueError("Fried parameter must be positive")
    f = np.asarray(f, dtype=float)
    if np.isfinite(L0):
        power = np.exp(-(l0**2) * f**2) * (f**2 + L0**-2) ** (-11.0 / 6.0)
    else:
        if np.any(f <= 0.0):
            raise ValueError("PSD diverges at f = 0 without outer-scale damping")
        power = np.exp(-(l0**2) * f**2) * f ** (-11.0 / 3.0)
    out = PSD_R0_PREFACTOR * r0 ** (-5.0 / 3.0) * power
    return out if out.ndim else float(out)


def rytov_step(r0_step: float, k: float, dz: float) -> float:
    """Rytov variance of one split step whose screen carries Fried parameter r0_step.

    Derived by eliminating Cn^2 between the r0 and Rytov definitions:
    sigma^2 = (RYTOV_PREFACTOR / FRIED_COEFF) r0^{-5/3} k^{-5/6} dz^{5/6}.
    The customary accuracy margin for split-step simulations is
    sigma^2 <= 0.1 per step.
    """
    if r0_step <= 0.0 or k <= 0.0 or dz < 0.0:
        raise ValueError("need positive r0_step, k and dz >= 0")
    if dz == 0.0 or math.isinf(r0_step):
        return 0.0
    return (
        RYTOV_PREFACTOR / FRIED_COEFF
        * r0_step ** (-5.0 / 3.0)
        * k ** (-5.0 / 6.0)
        * dz ** (5.0 / 6.0)
    )
