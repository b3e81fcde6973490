"""Constructive low-mode control of the 1D viscous Burgers equation.

A spectral Galerkin solver for the forced Burgers equation on (0, pi) with
Dirichlet conditions, together with the machinery that synthesizes controls
valued in span{sin x, sin 2x} steering any initial state close to any L2
target, and a fixed-point loop matching finite-dimensional functionals of
the terminal state exactly.
"""

from .spectral import (
    ModeSubspace,
    SineState,
    burgers_b,
    from_coeffs,
    heat_propagate,
    l2_distance,
    l2_norm,
    laplacian,
    sample,
    single_mode,
    sobolev_norm,
    sym_product,
    transform,
    zero_state,
)

__version__ = "0.1.0"
