"""Exact nonlocal vertex Poisson algebra calculus for affine Toda field theories."""

__version__ = "0.1.0"

from .diffring import DiffPoly, DiffRing, Gen, grade  # noqa: F401
from .kernels import BracketTable, ThreePointKernel, TwoPointKernel  # noqa: F401
