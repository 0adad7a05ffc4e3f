"""Boundary conditions as ghost distribution functions.

A ghost tensor stands in for the missing neighbour across a boundary face;
the upwind flux then takes the incoming half of velocity space from it.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .physics import GasParameters, StateError, maxwell_dense, maxwell_tt
from .tt import TtTensor, tt_dot, tt_flip, tt_scale
from .velocity import DEFAULT_ABS_RANK_CAP, VelocityGrid, xi_normal_split

BC_KINDS = ("wall", "sym-x", "sym-y", "sym-z", "in", "out")
_SYM_AXIS = {"sym-x": 0, "sym-y": 1, "sym-z": 2}


@dataclass(frozen=True)
class BoundaryCondition:
    kind: str
    T_w: float | None = None
    f_stream: TtTensor | None = None

    def __post_init__(self):
        if self.kind not in BC_KINDS:
            raise ValueError(f"unknown boundary kind {self.kind!r}; expected one of {BC_KINDS}")
        if self.kind == "wall" and not (self.T_w is not None and self.T_w > 0):
            raise ValueError("wall boundary needs a positive wall temperature")
        if self.kind in ("in", "out"):
            if self.f_stream is None:
                raise ValueError(f"{self.kind!r} boundary needs a free-stream Maxwellian")
            if self.f_stream.ranks != (1, 1, 1, 1):
                raise ValueError("free-stream distribution must be a rank-1 Maxwellian")

    @property
    def sym_axis(self):
        return _SYM_AXIS.get(self.kind)


@dataclass
class Problem:
    """Boundary conditions (in .bnd group order) and the initial state.

    ``bc_data`` entries: wall temperature for ``wall``; a free-stream TT
    Maxwellian for ``in``/``out``; ``None`` for symmetry planes.
    ``f_init(center)`` returns the initial TT distribution of a cell.
    """

    bc_type_list: Sequence[str]
    bc_data: Sequence
    f_init: Callable[[np.ndarray], TtTensor]

    def __post_init__(self):
        if len(self.bc_type_list) != len(self.bc_data):
            raise ValueError("bc_type_list and bc_data differ in length")
        self.conditions = [self._make(k, d) for k, d in zip(self.bc_type_list, self.bc_data)]

    @staticmethod
    def _make(kind, data):
        if kind == "wall":
            return BoundaryCondition(kind, T_w=float(data))
        if kind in ("in", "out"):
            return BoundaryCondition(kind, f_stream=data)
        return BoundaryCondition(kind)

    def check_mesh(self, mesh):
        if len(self.conditions) != len(mesh.group_names):
            raise ValueError(
                f"{len(self.conditions)} boundary conditions for "
                f"{len(mesh.group_names)} boundary groups"
            )


def normal_axis(normal, tol=1e-8) -> int:
    """Axis of a coordinate-aligned normal; ``ValueError`` otherwise."""
    nv = np.asarray(normal, dtype=float)
    ax = int(np.argmax(np.abs(nv)))
    others = np.delete(np.abs(nv), ax)
    if abs(abs(nv[ax]) - 1.0) > tol or np.any(others > tol):
        raise ValueError(f"symmetry plane normal {nv} is not axis-aligned")
    return ax


def _unit_wall_maxwellian(T_w, grid, gas):
    return grid.cached(("wallM", float(T_w), gas), lambda: maxwell_tt(1.0, T_w, np.zeros(3), grid, gas))


def wall_density(f_interior: TtTensor, T_w, grid: VelocityGrid, gas: GasParameters, normal,
                 cap_rank=DEFAULT_ABS_RANK_CAP):
    """Density of re-emitted molecules from zero net mass flux."""
    plus, minus = xi_normal_split(grid, normal, cap_rank)
    m_w = _unit_wall_maxwellian(T_w, grid, gas)
    key = ("wall_in", float(T_w), gas, tuple(np.round(np.asarray(normal) * 1e12).astype(np.int64)), cap_rank)
    incoming = grid.cached(key, lambda: tt_dot(minus, m_w))
    outgoing = tt_dot(plus, f_interior)
    n_w = -outgoing / incoming
    if not n_w > 0:
        raise StateError(f"nonpositive wall density {n_w:.6e}: bad incoming state")
    return n_w


def wall_ghost(f_interior: TtTensor, T_w, grid: VelocityGrid, gas: GasParameters, normal,
               cap_rank=DEFAULT_ABS_RANK_CAP) -> TtTensor:
    """Diffuse-reflection ghost ``n_w M(T_w)`` (rank 1)."""
    n_w = wall_density(f_interior, T_w, grid, gas, normal, cap_rank)
    return tt_scale(_unit_wall_maxwellian(T_w, grid, gas), n_w)


def symmetry_ghost(f_interior: TtTensor, axis: int) -> TtTensor:
    """Mirror ``xi_axis -> -xi_axis``; exact on a grid symmetric about 0."""
    if axis not in (0, 1, 2):
        raise ValueError(f"axis must be 0, 1 or 2, got {axis}")
    return tt_flip(f_interior, axis)


def freestream_ghost(bc: BoundaryCondition) -> TtTensor:
    return bc.f_stream


def ghost(bc: BoundaryCondition, f_interior: TtTensor, grid, gas, normal,
          cap_rank=DEFAULT_ABS_RANK_CAP) -> TtTensor:
    if bc.kind == "wall":
        return wall_ghost(f_interior, bc.T_w, grid, gas, normal, cap_rank)
    if bc.sym_axis is not None:
        ax = normal_axis(normal)
        if ax != bc.sym_axis:
            raise ValueError(f"{bc.kind} boundary face has normal {np.asarray(normal)}")
        return symmetry_ghost(f_interior, ax)
    return freestream_ghost(bc)


# -- dense counterparts (reference solver) -------------------------------------


def dense_xi_normal(grid: VelocityGrid, normal) -> np.ndarray:
    x = np.asarray(grid.nodes)
    nv = np.asarray(normal, dtype=float)
    return nv[0] * x[:, None, None] + nv[1] * x[None, :, None] + nv[2] * x[None, None, :]


def dense_wall_ghost(f_interior: np.ndarray, T_w, grid, gas, normal) -> np.ndarray:
    xn = dense_xi_normal(grid, normal)
    m_w = maxwell_dense(1.0, T_w, np.zeros(3), grid, gas)
    outgoing = float(np.sum(np.maximum(xn, 0.0) * f_interior))
    incoming = float(np.sum(np.minimum(xn, 0.0) * m_w))
    n_w = -outgoing / incoming
    if not n_w > 0:
        raise StateError(f"nonpositive wall density {n_w:.6e}: bad incoming state")
    return n_w * m_w


def dense_ghost(bc: BoundaryCondition, f_interior: np.ndarray, grid, gas, normal) -> np.ndarray:
    if bc.kind == "wall":
        return dense_wall_ghost(f_interior, bc.T_w, grid, gas, normal)
    if bc.sym_axis is not None:
        return np.flip(f_interior, axis=normal_axis(normal))
    return bc.f_stream.full()
