"""Inverse spectral tools for curvilinear polygons.

The forward map sends side lengths and angles to a characteristic
trigonometric polynomial whose non-negative roots (quasi-eigenvalues)
approximate the Steklov spectrum.  The inverse map recovers the polynomial
from a root sequence and then the geometry from the polynomial.
"""

__version__ = "0.1.0"

from .charpoly import (CharPoly, PolygonSpec, build_char_poly, check_admissible, eval_char_poly,
                       geometry_of_spec, loose_equivalent, random_admissible_spec)
from .errors import SteklovError
from .geometry import (build_adjacency, count_exceptional, recover_geometry,
                       recover_order_and_cosines, recover_small_n, recover_sorted_lengths)
from .graph_oracle import CircleGraph, graph_eigenvalues, secular_value
from .reconstruct import (ProductEvaluator, RecoveryOpts, compute_C0, eval_product, mean_transform,
                          recover_charpoly)
from .results import ExceptionalComponent, GeometryResult
from .spectra import (PerturbedSpectrum, QuasiSpectrum, find_quasi_eigenvalues, perturb_spectrum,
                      weyl_check)

__all__ = [
    "CharPoly", "PolygonSpec", "build_char_poly", "check_admissible", "eval_char_poly",
    "geometry_of_spec", "loose_equivalent", "random_admissible_spec", "SteklovError",
    "build_adjacency", "count_exceptional", "recover_geometry", "recover_order_and_cosines",
    "recover_small_n", "recover_sorted_lengths", "CircleGraph", "graph_eigenvalues",
    "secular_value", "ProductEvaluator", "RecoveryOpts", "compute_C0", "eval_product",
    "mean_transform", "recover_charpoly", "ExceptionalComponent", "GeometryResult",
    "PerturbedSpectrum", "QuasiSpectrum", "find_quasi_eigenvalues", "perturb_spectrum",
    "weyl_check",
]
