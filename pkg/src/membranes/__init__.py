"""Solvers and analysis tools for the N-membrane problem with constant forces.

Modules
-------
problem     problem specification, normalization, weighted-average identities
cones1d     the catalogue of homogeneous degree-2 solutions (1D cones)
exact1d     global 1D solutions h(x, b), the error function, 2D profiles
projection  weighted isotonic projection onto the ordered cone (PAVA)
solver2d    projected Gauss-Seidel grid solver on intervals/rectangles/disks
analysis    free boundaries, Weiss energy, blow-up rescaling, cone fitting
gamesim     ticket-exchange random walk game, the independent oracle
cli         scenario runner and verification suites
"""

from .problem import GroupIndex, ProblemSpec, group_force, normalize, subtract_average

__version__ = "0.1.0"

__all__ = [
    "GroupIndex",
    "ProblemSpec",
    "group_force",
    "normalize",
    "subtract_average",
    "__version__",
]
