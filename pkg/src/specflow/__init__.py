"""Spectral flow for unitary operators in ``1 + trace class``.

Rigged-set spectra on the circle, the optimal-matching metric, continuous
lifting of spectral paths, the mu-invariant, and the decomposition of the
spectral shift function on finite-rank lattice scattering models.
"""
from .errors import SpecflowError
from .rigged import RiggedSet, StepFunction, counting_function, rho1
from .matching import brute_force_d, d, distance_d
from .lift import ArgumentTrack, SpectrumPath, lift_path
from .mu import MuInvariant, mu_concat, mu_integral, mu_invariant
from .unispec import UnitaryTC, spec, spec_continuity_check, trace_norm
from .scatter import ScatteringModel, lattice_green, tilde_s, xi_decompose

__version__ = "0.1.0"

__all__ = [
    "SpecflowError",
    "RiggedSet", "StepFunction", "counting_function", "rho1",
    "brute_force_d", "d", "distance_d",
    "ArgumentTrack", "SpectrumPath", "lift_path",
    "MuInvariant", "mu_concat", "mu_integral", "mu_invariant",
    "UnitaryTC", "spec", "spec_continuity_check", "trace_norm",
    "ScatteringModel", "lattice_green", "tilde_s", "xi_decompose",
]
