"""Photon statistics of Raman scattering: exact Fock-space evolution, short-time
series, the linearized (parametric) Gaussian model and the undepleted-pump model."""

__version__ = "0.1.0"

from .numkernel import (ConditioningWarning, DomainError, PrecisionError,  # noqa: E402
                        TruncationError)
from .fock_core import DensityTensor, ModeState, MomentSet, build_product_state  # noqa: E402

__all__ = ["ConditioningWarning", "DensityTensor", "DomainError", "ModeState", "MomentSet",
           "PrecisionError", "TruncationError", "build_product_state", "__version__"]
