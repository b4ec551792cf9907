"""Casimir energy and thermal corrections of scalar fields on one-dimensional combs."""

from __future__ import annotations

from .errors import CombError
from .numerics import QuadratureSpec
from .scattering import CombModel, DeltaDeltaPrime, PoschlTeller, amplitudes, det_s, phase_shift
from .spectrum import band_edges, band_structure, dispersion, h_v, mass, negative_band
from .thermal import delta_f, entropy, entropy_analytic, i3, pressure, thermo_point
from .vacuum import ContourSpec, casimir_energy, casimir_pressure_t0

__version__ = "0.1.0"

__all__ = [
    "CombError",
    "QuadratureSpec",
    "CombModel",
    "DeltaDeltaPrime",
    "PoschlTeller",
    "amplitudes",
    "det_s",
    "phase_shift",
    "band_edges",
    "band_structure",
    "dispersion",
    "h_v",
    "mass",
    "negative_band",
    "ContourSpec",
    "casimir_energy",
    "casimir_pressure_t0",
    "delta_f",
    "entropy",
    "entropy_analytic",
    "i3",
    "pressure",
    "thermo_point",
]
