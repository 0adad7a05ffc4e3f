"""Full-tensor discrete velocity method (exact |xi_n|, no compression).

This is the oracle the tensorized solver is checked against: one dense
``(N, N, N)`` array per cell, the same moments, collision term, boundary
ghosts and upwind fluxes, evaluated pointwise.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .boundary import Problem, dense_ghost, dense_xi_normal
from .mesh import UnstructuredMesh
from .physics import (
    GasParameters,
    Macroparameters,
    StateError,
    _finish_macro,
    invariant_correction,
    viscosity,
)
from .solver import CellFields, ConvergenceReport, SolverConfig, residual_norm, time_step
from .velocity import VelocityGrid


@dataclass
class DenseState:
    f: np.ndarray  # (n_cells, N, N, N)
    fields: CellFields
    iteration: int = 0
    time: float = 0.0
    residuals: list = field(default_factory=list)


def dense_macro(f: np.ndarray, grid: VelocityGrid, gas: GasParameters) -> Macroparameters:
    n, u, T, S = kernels.moments(np.ascontiguousarray(f), np.asarray(grid.nodes), grid.cell_volume, gas.R_g)
    if not n > 0:
        raise StateError(f"nonpositive density n={n:.6e}")
    if not T > 0:
        raise StateError(f"nonpositive temperature T={T:.6e}")
    return _finish_macro(n, np.asarray(u), T, np.asarray(S), gas)


def dense_shakhov(macro: Macroparameters, grid: VelocityGrid, gas: GasParameters) -> np.ndarray:
    return kernels.shakhov(
        macro.n, np.asarray(macro.u, dtype=float), macro.T, np.asarray(macro.S, dtype=float),
        np.asarray(grid.nodes), gas.R_g, gas.Pr,
    )


def dense_restore_invariants(J: np.ndarray, macro: Macroparameters, grid: VelocityGrid, gas: GasParameters) -> np.ndarray:
    x = np.asarray(grid.nodes)
    c = [(x - macro.u[a]) / math.sqrt(2.0 * gas.R_g * macro.T) for a in range(3)]
    m1, m2, m3 = J.sum(axis=(1, 2)), J.sum(axis=(0, 2)), J.sum(axis=(0, 1))
    total = m1.sum()
    defect = [total, c[0] @ m1, c[1] @ m2, c[2] @ m3, c[0] ** 2 @ m1 + c[1] ** 2 @ m2 + c[2] ** 2 @ m3]
    out = J.copy()
    for w, (v1, v2, v3) in invariant_correction(defect, macro, grid, gas):
        out += w * v1[:, None, None] * v2[None, :, None] * v3[None, None, :]
    return out


def dense_collision(f: np.ndarray, grid: VelocityGrid, gas: GasParameters, conservative: bool = True):
    """``(J, macro, nu)`` for a dense distribution (same correction as the TT path)."""
    macro = dense_macro(f, grid, gas)
    nu = macro.p / float(viscosity(macro.T, gas))
    J = nu * (dense_shakhov(macro, grid, gas) - f)
    if conservative:
        J = dense_restore_invariants(J, macro, grid, gas)
    return J, macro, nu


class DenseScheme:
    def __init__(self, mesh: UnstructuredMesh, grid: VelocityGrid, gas: GasParameters,
                 problem: Problem, config: SolverConfig):
        problem.check_mesh(mesh)
        self.mesh, self.grid, self.gas, self.problem, self.config = mesh, grid, gas, problem, config
        self.dt = time_step(mesh, grid, config.cfl)
        self.bnd_faces = np.flatnonzero(mesh.face_right < 0)
        self.face_ghost = np.full(mesh.n_faces, -1, dtype=np.int64)
        self.face_ghost[self.bnd_faces] = np.arange(len(self.bnd_faces))
        self.inv_vol = 1.0 / mesh.cell_volume
        self._half_abs = None

    def macros(self, f):
        out = []
        for i in range(len(f)):
            try:
                out.append(dense_macro(f[i], self.grid, self.gas))
            except StateError as exc:
                raise StateError(str(exc), cell=i) from None
        return out

    def initial_state(self) -> DenseState:
        f = np.stack([self.problem.f_init(c).full() for c in self.mesh.cell_center])
        return DenseState(f=f, fields=CellFields.from_macros(self.macros(f)))

    def ghosts(self, f):
        m = self.mesh
        N = self.grid.n
        out = np.empty((max(len(self.bnd_faces), 1), N, N, N))
        for g, j in enumerate(self.bnd_faces):
            bc = self.problem.conditions[m.face_group[j]]
            out[g] = dense_ghost(bc, f[m.face_left[j]], self.grid, self.gas, m.face_normal[j])
        return out

    def rhs(self, f):
        return self.rhs_and_nu(f)[0]

    def rhs_and_nu(self, f):
        """``R_i = J_i - (1/V_i) sum_j sign_ij Phi_j`` and the collision frequencies."""
        m = self.mesh
        R = np.empty_like(f)
        nus = np.empty(len(f))
        for i in range(len(f)):
            try:
                R[i], _, nus[i] = dense_collision(f[i], self.grid, self.gas)
            except StateError as exc:
                raise StateError(str(exc), cell=i) from None
        kernels.accumulate_fluxes(
            f, self.ghosts(f), m.face_left, m.face_right, self.face_ghost,
            m.face_area, m.face_normal, self.inv_vol, np.asarray(self.grid.nodes), R,
        )
        return R, nus

    def explicit_step(self, state: DenseState) -> DenseState:
        return self._finish(state, state.f + self.dt * self.rhs(state.f))

    def _finish(self, state, f_new):
        fields = CellFields.from_macros(self.macros(f_new))
        res = residual_norm(state.fields, fields, self.gas.R_g)
        return DenseState(
            f=f_new, fields=fields, iteration=state.iteration + 1,
            time=state.time + self.dt, residuals=state.residuals + [res],
        )

    def _xn(self, j):
        return dense_xi_normal(self.grid, self.mesh.face_normal[j])

    def half_abs_flux(self, i):
        """``(1 / 2V_i) sum_j A_j |xi_n,j|`` over the faces of cell ``i``."""
        m = self.mesh
        acc = np.zeros(self.grid.shape)
        for j in m.cell_faces[i]:
            acc += m.face_area[j] * np.abs(self._xn(j))
        return 0.5 * acc / m.cell_volume[i]

    def lusgs_step(self, state: DenseState) -> DenseState:
        """LU-SGS with the exact pointwise diagonal."""
        m = self.mesh
        R, nus = self.rhs_and_nu(state.f)
        if self._half_abs is None:
            self._half_abs = [self.half_abs_flux(i) for i in range(m.n_cells)]
        D = [1.0 / self.dt + nus[i] + self._half_abs[i] for i in range(m.n_cells)]

        def offdiag(i, j, d):
            # (A/V) xi_n^- with the normal pointing out of cell i
            xn = self._xn(j) if m.face_left[j] == i else -self._xn(j)
            return m.face_area[j] / m.cell_volume[i] * np.minimum(xn, 0.0) * d

        star = np.empty_like(R)
        for i in range(m.n_cells):
            acc = R[i].copy()
            for j in m.cell_faces[i]:
                nb = self._other(i, j)
                if 0 <= nb < i:
                    acc -= offdiag(i, j, star[nb])
            star[i] = acc / D[i]
        delta = np.empty_like(R)
        for i in reversed(range(m.n_cells)):
            acc = np.zeros_like(R[i])
            for j in m.cell_faces[i]:
                nb = self._other(i, j)
                if nb > i:
                    acc += offdiag(i, j, delta[nb])
            delta[i] = star[i] - acc / D[i]
        return self._finish(state, state.f + delta)

    def _other(self, i, j):
        L, R = self.mesh.face_left[j], self.mesh.face_right[j]
        if R < 0:
            return -1
        return R if L == i else L

    def step(self, state):
        if self.config.scheme == "lusgs":
            return self.lusgs_step(state)
        return self.explicit_step(state)

    def run(self, state=None, callback=None):
        cfg = self.config
        if state is None:
            state = self.initial_state()
        converged = False
        t0 = time.perf_counter()
        start = state.iteration
        for _ in range(cfg.max_iters):
            state = self.step(state)
            if callback is not None:
                callback(state)
            res = state.residuals[-1]
            if not math.isfinite(res):
                raise StateError(f"residual became {res} at iteration {state.iteration}")
            if res < cfg.residual_tol:
                converged = True
                break
        n_it = state.iteration - start
        dense = self.mesh.n_cells * self.grid.n ** 3
        report = ConvergenceReport(
            converged=converged, iterations=n_it, residuals=list(state.residuals),
            seconds_per_iter=(time.perf_counter() - t0) / max(n_it, 1),
            max_rank=self.grid.n, storage=dense, dense_storage=dense,
        )
        return state, report


def dense_explicit_step(state, mesh, grid, gas, problem, config):
    return DenseScheme(mesh, grid, gas, problem, config).explicit_step(state)


def dense_lusgs_step(state, mesh, grid, gas, problem, config):
    return DenseScheme(mesh, grid, gas, problem, config).lusgs_step(state)


def run_steady_dense(problem, mesh, grid, gas, config, state=None, callback=None):
    return DenseScheme(mesh, grid, gas, problem, config).run(state, callback)
