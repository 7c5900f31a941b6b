"""Numerical study of directional Hilbert transforms along Lipschitz-family vector fields.

Submodules
----------
grid
    Periodic grids, sampled fields and trigonometric interpolation.
lipschitz
    Lipschitz curve families, direction fields, projection and curve charts.
frequency
    Littlewood-Paley profiles and grid multipliers.
directional
    Directional multipliers, truncations, quadrature cross-checks and norm estimation.
adapted
    Projections adapted to the curve family, main term and commutator.
beta
    Beta numbers of Lipschitz graphs and their Carleson sums.
tiles
    Direction intervals, tiles, wave packets and the model sum.
kakeya
    Rectangle families, the counting check and the maximal function.
commutator
    Per-tile estimates along one curve.
experiments, cli
    Experiment runners and the command-line interface.
"""

from ._kernels import get_kernels
from .grid import SampledField, TorusGrid

__all__ = ["SampledField", "TorusGrid", "get_kernels", "__version__"]
__version__ = "0.1.0"
