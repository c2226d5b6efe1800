from ccsopt.numcore.doe import DoeDesign, lhs_sample
from ccsopt.numcore.linalg import CholeskyFactor, chol_solve, cholesky_factor
from ccsopt.numcore.rng import RngStream, standard_normal

__all__ = [
    "CholeskyFactor",
    "DoeDesign",
    "RngStream",
    "chol_solve",
    "cholesky_factor",
    "lhs_sample",
    "standard_normal",
]
