"""Steady rarefied gas flows with the Shakhov model on unstructured hex meshes.

Velocity distributions are stored per cell as three-dimensional tensor
trains; a full-tensor solver with the same discretization serves as the
reference.
"""
from .boundary import BoundaryCondition, Problem
from .cases import Case, FlowState, build_case, rankine_hugoniot, setup_cylinder_case, setup_shock_case
from .mesh import MeshError, UnstructuredMesh, load_mesh, read_starcd, write_starcd
from .physics import GasParameters, Macroparameters, StateError, argon, compute_collision, compute_macro, shakhov_tt
from .reference import DenseScheme, run_steady_dense
from .solver import Scheme, SolverConfig, explicit_step, lusgs_step, rank_ratio, run_steady
from .tt import (
    TtTensor,
    tt_add,
    tt_convolve,
    tt_divide_by_rank1,
    tt_from_full,
    tt_hadamard,
    tt_rank1,
    tt_round,
    tt_to_full,
)
from .velocity import VelocityGrid, abs_xi_normal_estimate, build_grid, xi_normal

__version__ = "0.1.0"
