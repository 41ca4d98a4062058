"""Finite-dimensional workbench for coherent-state quantization.

Coherent-state families, their annihilation operators and Berezin symbols,
Kahler geometry from reproducing kernels, normal ordering, GNS/Hardy
representations and resolution-of-identity quadrature.
"""
from .families import QHW, DomainError, Minkowski, PhasePoint, RDeformed, Toeplitz, make_point, parse_point
from .fock import ConvergenceError, Mink, Mono, Multi, Truncation, operator_norm
from .polarization import GeneratorSet, build_generators

__version__ = "0.1.0"

__all__ = [
    "Toeplitz",
    "RDeformed",
    "QHW",
    "Minkowski",
    "PhasePoint",
    "DomainError",
    "ConvergenceError",
    "make_point",
    "parse_point",
    "Mono",
    "Multi",
    "Mink",
    "Truncation",
    "operator_norm",
    "GeneratorSet",
    "build_generators",
]
