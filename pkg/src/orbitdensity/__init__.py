"""Density conditions for frames and Riesz sequences in lattice orbits.

An exact finite Weyl-Heisenberg oracle (every statement checked
exhaustively) combined with a numerical instance on weighted Bergman
spaces over the upper half-plane.
"""

__version__ = "0.1.0"
