"""Pareto archive, exact hypervolume, and Monte-Carlo acquisition search."""

from ccsopt.acquisition.functions import mc_ehvi, mc_ei
from ccsopt.acquisition.pareto import (
    ParetoArchive,
    box_improvement,
    default_reference,
    hypervolume,
    nondominated_boxes,
    pareto_front,
)
from ccsopt.acquisition.search import AcqSpec, CandidateBatch, optimize_acquisition

__all__ = [
    "AcqSpec",
    "CandidateBatch",
    "ParetoArchive",
    "box_improvement",
    "default_reference",
    "hypervolume",
    "mc_ehvi",
    "mc_ei",
    "nondominated_boxes",
    "optimize_acquisition",
    "pareto_front",
]
