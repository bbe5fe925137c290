"""Spectral workbench for noncommutative U(1) gauge theory on curved backgrounds.

Star products, symmetric star ordering, metric machinery, field equations
and energy-momentum tensors, each paired with independent numerical
oracles so every algebraic identity used along the way can be checked at
desk scale.
"""

__version__ = "0.1.0"

from .lattice import (
    GridSpec,
    ScalarField,
    integrate,
    make_field,
    multiply,
    partial_derivative,
    plane_wave,
    random_band_limited,
    translate,
)

__all__ = [
    "GridSpec",
    "ScalarField",
    "integrate",
    "make_field",
    "multiply",
    "partial_derivative",
    "plane_wave",
    "random_band_limited",
    "translate",
    "__version__",
]
