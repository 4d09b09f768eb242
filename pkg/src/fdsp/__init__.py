"""Pseudospectral laboratory for fractional KdV and NLS equations with small data."""
from .kernels import BACKEND
from .spectral import (EquationSpec, Grid, NormKind, SpectralField, apply_multiplier,
                       compute_norm, lp_project, make_grid, to_physical, to_spectral)

__version__ = "0.1.0"
__all__ = ["BACKEND", "EquationSpec", "Grid", "NormKind", "SpectralField", "apply_multiplier",
           "compute_norm", "lp_project", "make_grid", "to_physical", "to_spectral"]
