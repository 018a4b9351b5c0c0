"""Discrete model on rotated triangulations: energies, solves, patches."""

from mslab.discrete.triangulation import Triangulation, build_triangulation
from mslab.discrete.fem import (
    FePair,
    alternate_minimize,
    discrete_energy,
    interpolate_to_fe,
    project_chi,
    solve_displacement,
)
from mslab.discrete.patches import patch_inequality_check, patch_constant
from mslab.discrete.sweep import discrete_h_sweep

__all__ = [
    "Triangulation",
    "build_triangulation",
    "FePair",
    "discrete_energy",
    "solve_displacement",
    "project_chi",
    "alternate_minimize",
    "interpolate_to_fe",
    "patch_inequality_check",
    "patch_constant",
    "discrete_h_sweep",
]
