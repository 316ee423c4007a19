"""Degeneracy breaking and nodal-set geometry for Dirichlet eigenfunctions on perturbed rectangles."""
from .boundary import BoundaryFn, check_admissible, rescale_to_admissible
from .grid import GridSpec
from .hadamard import hadamard_variation, predict_nodal
from .rectangle import DomainSpec, eigenvalue, spectral_index

__version__ = "0.1.0"

__all__ = [
    "BoundaryFn", "DomainSpec", "GridSpec", "check_admissible", "eigenvalue",
    "hadamard_variation", "predict_nodal", "rescale_to_admissible", "spectral_index",
]
