"""Nonlocal vorticity model laboratory.

Zero-order operators Z_ij = d_i d_j Laplace^{-1} on rectangles, ellipses
and periodic boxes; the model equations built from them; time integration
with blow-up fitting; and the restricted steady problem on the rectangle.
"""
from .dynamics import BlowupReport, SimConfig, SimulationResult, fit_blowup, run_simulation
from .geometry import (
    DomainError,
    EllipseDomain,
    EllipsoidForm,
    MaskedGrid,
    PeriodicBox,
    RectangleDomain,
    build_masked_grid,
    unit_disk,
)
from .models import ModelSpec
from .steady import RestrictedProblem, VanishingSet, solve_restricted

__version__ = "0.1.0"

__all__ = [
    "BlowupReport",
    "DomainError",
    "EllipseDomain",
    "EllipsoidForm",
    "MaskedGrid",
    "ModelSpec",
    "PeriodicBox",
    "RectangleDomain",
    "RestrictedProblem",
    "SimConfig",
    "SimulationResult",
    "VanishingSet",
    "build_masked_grid",
    "fit_blowup",
    "run_simulation",
    "solve_restricted",
    "unit_disk",
]
