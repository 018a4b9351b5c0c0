"""Explicit upper-bound competitors with exact interface geometry."""

from mslab.constructions.competitor import BranchingParams, Competitor
from mslab.constructions.builders import (
    branching_assembly,
    laminate_in_branching,
    optimize_construction,
    second_order_branching,
    simple_laminate,
)

__all__ = [
    "BranchingParams",
    "Competitor",
    "simple_laminate",
    "branching_assembly",
    "laminate_in_branching",
    "second_order_branching",
    "optimize_construction",
]
