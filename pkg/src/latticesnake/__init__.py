"""Pinning and homoclinic snaking of fronts on rotated square and hexagonal lattices.

Analytic predictions (lattice eigenvalues, late-term constant, pinning width,
snakes and ladders) alongside the numerical checks that test them
(arclength continuation and time stepping of the lattice equation).
"""
__version__ = "0.1.0"

from .errors import LatticeSnakeError  # noqa: E402,F401
from .lattice import Orientation, make_orientation, stencil, symbol  # noqa: E402,F401
from .model import builtin, custom, maxwell  # noqa: E402,F401
