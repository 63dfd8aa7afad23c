"""Conditional preparation of sub-Poissonian light from intensity-correlated twin beams.

Three layers share one parameter model: closed-form analytics (:mod:`.analytic`),
exact Fock-basis sums (:mod:`.fock_oracle`) and Monte-Carlo post-selection
(:mod:`.montecarlo`).
"""
from .model import (
    DerivedParams,
    ModelError,
    SelectionBand,
    TwinBeamModel,
    derive,
    model_from_observables,
    photons_in_window,
)

__version__ = "0.1.0"

__all__ = [
    "DerivedParams",
    "ModelError",
    "SelectionBand",
    "TwinBeamModel",
    "derive",
    "model_from_observables",
    "photons_in_window",
]
