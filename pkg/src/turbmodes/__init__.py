"""Spatial-mode power coupling in turbulent free-space optical channels.

The package has two independent computation routes that are meant to be
compared against each other:

* an analytical route (``coupling`` + ``evolution``) that builds the
  mode-coupling rate matrix from closed-form acceptance spectra and
  evolves modal powers with a matrix exponential, and
* a Monte Carlo route (``simulator``) that synthesizes random phase
  screens, propagates a sampled field through them split-step style and
  projects the result onto the same mode basis.

Keeping the two routes separate is deliberate; the simulator acts as the
verification oracle for the analytics and must not share formulas with
them beyond the turbulence spectra themselves.
"""

from .config import ConfigError, ExperimentConfig
from .modes import Basis, BeamGeometry, ModeId, enumerate_basis, group_by_order
from .turbulence import TurbulenceModel, fried_r0, cn2_from_r0, rytov_sigma2
from .coupling import AcceptanceSpectrum, b_pair
from .evolution import (
    CouplingMatrix,
    PowerVector,
    QuadratureError,
    SpectralWeight,
    dimensionless_integral,
    lambda_matrix,
    propagate,
)
from .simulator import (
    ComplexFieldGrid,
    EnsembleConfig,
    EnsembleResult,
    ScreenSpec,
    make_phase_screen,
    run_ensemble,
)

__version__ = "0.1.0"

__all__ = [
    "AcceptanceSpectrum",
    "Basis",
    "BeamGeometry",
    "ComplexFieldGrid",
    "ConfigError",
    "CouplingMatrix",
    "EnsembleConfig",
    "EnsembleResult",
    "ExperimentConfig",
    "ModeId",
    "PowerVector",
    "QuadratureError",
    "ScreenSpec",
    "SpectralWeight",
    "TurbulenceModel",
    "b_pair",
    "cn2_from_r0",
    "dimensionless_integral",
    "enumerate_basis",
    "fried_r0",
    "group_by_order",
    "lambda_matrix",
    "make_phase_screen",
    "propagate",
    "run_ensemble",
    "rytov_sigma2",
]
