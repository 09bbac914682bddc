"""Photon-number dependent Dicke chaos: spectra, echoes and classical flows."""

from .errors import DickeChaosError
from .model import (AncillaState, EffectiveParams, ModelParams, critical_couplings,
                    effective_params)

__version__ = "0.1.0"

__all__ = ["AncillaState", "DickeChaosError", "EffectiveParams", "ModelParams",
           "critical_couplings", "effective_params", "__version__"]
