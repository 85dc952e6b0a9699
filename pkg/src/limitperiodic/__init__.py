"""Periodic and limit-periodic discrete Schroedinger operators on odometer hulls."""

__version__ = "0.1.0"

from .builders import build_ac, build_cantor, audit_state, gap_persistence_check
from .floquet import (
    FiniteVector,
    density,
    dk_dE,
    floquet_solutions,
    inverse_transform,
    lt_distance,
    lt_norm_density,
    lt_norm_dkdE,
    spectral_mass,
    u_hat,
)
from .gaps import GapCertificate, count_open_gaps, open_all_gaps, verify_certificate
from .gordon import build_gordon, check_gordon, gordon_growth_check
from .odometer import GroupChain, Potential, SamplingFunction, make_chain, sample_potential, sampling_function
from .periodic import band_structure, discriminant, transfer

__all__ = [
    "FiniteVector",
    "GapCertificate",
    "GroupChain",
    "Potential",
    "SamplingFunction",
    "audit_state",
    "band_structure",
    "build_ac",
    "build_cantor",
    "build_gordon",
    "check_gordon",
    "count_open_gaps",
    "density",
    "discriminant",
    "dk_dE",
    "floquet_solutions",
    "gap_persistence_check",
    "gordon_growth_check",
    "inverse_transform",
    "lt_distance",
    "lt_norm_density",
    "lt_norm_dkdE",
    "make_chain",
    "open_all_gaps",
    "sample_potential",
    "sampling_function",
    "spectral_mass",
    "transfer",
    "u_hat",
    "verify_certificate",
]
