"""Moments, Maxwellian and Shakhov equilibria, and the S-model collision term."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tt import TtTensor, tt_add, tt_convolve, tt_hadamard, tt_lincomb, tt_rank1, tt_round
from .velocity import VelocityGrid

BOLTZMANN = 1.380649e-23  # J/K

_EXACT_EPS = 1e-14


class StateError(FloatingPointError):
    """Nonphysical moments (n <= 0 or T <= 0)."""

    def __init__(self, msg, cell=None):
        super().__init__(msg if cell is None else f"cell {cell}: {msg}")
        self.cell = cell


@dataclass(frozen=True)
class GasParameters:
    m: float
    R_g: float
    Pr: float = 2.0 / 3.0
    mu_ref: float = 2.117e-5
    T_ref: float = 273.0
    omega: float = 0.81

    def __post_init__(self):
        for name in ("m", "R_g", "Pr", "mu_ref", "T_ref", "omega"):
            if not getattr(self, name) > 0:
                raise ValueError(f"gas parameter {name} must be positive")
        if self.Pr > 1:
            raise ValueError("Prandtl number must lie in (0, 1]")

    @classmethod
    def from_mass(cls, m, **kw):
        return cls(m=m, R_g=BOLTZMANN / m, **kw)


def argon(**kw) -> GasParameters:
    """Argon, mass 6.63e-26 kg; viscosity law parameters overridable."""
    kw.setdefault("mu_ref", 2.117e-5)
    kw.setdefault("T_ref", 273.0)
    kw.setdefault("omega", 0.81)
    return GasParameters.from_mass(6.63e-26, **kw)


@dataclass(frozen=True)
class Macroparameters:
    n: float
    u: np.ndarray
    T: float
    rho: float
    p: float
    S: np.ndarray
    q: np.ndarray

    def as_dict(self):
        return {
            "n": self.n, "ux": self.u[0], "uy": self.u[1], "uz": self.u[2], "T": self.T,
            "rho": self.rho, "p": self.p,
        }


def viscosity(T, gas: GasParameters):
    return gas.mu_ref * (np.asarray(T) / gas.T_ref) ** gas.omega


def _finish_macro(n, u, T, S, gas):
    rho = gas.m * n
    p = rho * gas.R_g * T
    q = 0.5 * gas.m * (2.0 * gas.R_g * T) ** 1.5 * n * S
    return Macroparameters(float(n), u, float(T), float(rho), float(p), S, q)


def _check_state(n, T):
    if not n > 0:
        raise StateError(f"nonpositive density n={n:.6e}")
    if not T > 0:
        raise StateError(f"nonpositive temperature T={T:.6e}")


def compute_macro(f: TtTensor, grid: VelocityGrid, gas: GasParameters) -> Macroparameters:
    """Moments of ``f`` by separable quadrature (sum of xi-tensor products)."""
    x = np.asarray(grid.nodes)
    one = np.ones_like(x)
    dv = grid.cell_volume

    def axis_moment(*per_axis):
        return dv * tt_convolve(f, *per_axis)

    n = axis_moment(one, one, one)
    if not n > 0:
        raise StateError(f"nonpositive density n={n:.6e}")
    nu = np.array(
        [axis_moment(x, one, one), axis_moment(one, x, one), axis_moment(one, one, x)]
    )
    u = nu / n
    x2 = x * x
    e2 = axis_moment(x2, one, one) + axis_moment(one, x2, one) + axis_moment(one, one, x2)
    T = (e2 - n * float(u @ u)) / (3.0 * n * gas.R_g)
    _check_state(n, T)

    c = [(x - u[a]) / np.sqrt(2.0 * gas.R_g * T) for a in range(3)]
    S = np.zeros(3)
    for a in range(3):
        for b in range(3):
            w = [one, one, one]
            if a == b:
                w[a] = c[a] ** 3
            else:
                w[a] = c[a]
                w[b] = c[b] ** 2
            S[a] += axis_moment(*w)
    S /= n
    return _finish_macro(n, u, T, S, gas)


def maxwell_factors(n, T, u, grid: VelocityGrid, gas: GasParameters):
    """Per-axis 1D factors of the Maxwellian; the density sits on the first."""
    x = np.asarray(grid.nodes)
    two_rt = 2.0 * gas.R_g * T
    norm = 1.0 / np.sqrt(np.pi * two_rt)
    facs = [norm * np.exp(-((x - u[a]) ** 2) / two_rt) for a in range(3)]
    facs[0] = n * facs[0]
    return facs


def maxwell_tt(n, T, u, grid: VelocityGrid, gas: GasParameters) -> TtTensor:
    """Rank-1 Maxwellian ``n (2 pi R T)^(-3/2) exp(-|xi - u|^2 / (2 R T))``."""
    if not (n > 0 and T > 0):
        raise ValueError(f"Maxwellian needs n > 0 and T > 0, got n={n}, T={T}")
    return tt_rank1(*maxwell_factors(n, T, np.asarray(u, dtype=float), grid, gas))


def maxwell_dense(n, T, u, grid: VelocityGrid, gas: GasParameters) -> np.ndarray:
    f1, f2, f3 = maxwell_factors(n, T, np.asarray(u, dtype=float), grid, gas)
    return f1[:, None, None] * f2[None, :, None] * f3[None, None, :]


def _c_tensors(macro: Macroparameters, grid: VelocityGrid, gas: GasParameters):
    x = np.asarray(grid.nodes)
    one = np.ones_like(x)
    scale = 1.0 / np.sqrt(2.0 * gas.R_g * macro.T)
    cvec = [(x - macro.u[a]) * scale for a in range(3)]
    ct = []
    for a in range(3):
        w = [one, one, one]
        w[a] = cvec[a]
        ct.append(tt_rank1(*w))
    c2 = []
    for a in range(3):
        w = [one, one, one]
        w[a] = cvec[a] ** 2
        c2.append(tt_rank1(*w))
    return ct, c2


def shakhov_tt(macro: Macroparameters, grid: VelocityGrid, gas: GasParameters, eps_round: float) -> TtTensor:
    """Shakhov equilibrium ``f_M (1 + 4/5 (1 - Pr) S.c (c^2 - 5/2))``."""
    f_m = maxwell_tt(macro.n, macro.T, macro.u, grid, gas)
    S = np.asarray(macro.S, dtype=float)
    if not np.any(S):
        return f_m
    ones = tt_rank1(*(np.ones(grid.n) for _ in range(3)))
    ct, c2 = _c_tensors(macro, grid, gas)
    s_dot_c = tt_round(tt_lincomb(list(S), ct), _EXACT_EPS)
    c2_shift = tt_round(tt_lincomb([1.0, 1.0, 1.0, -2.5], c2 + [ones]), _EXACT_EPS)
    k = 0.8 * (1.0 - gas.Pr)
    poly = tt_lincomb([1.0, k], [ones, tt_hadamard(s_dot_c, c2_shift)])
    return tt_round(tt_hadamard(f_m, poly), eps_round)


def _collision_invariants(macro: Macroparameters, grid: VelocityGrid, gas: GasParameters):
    """Per-axis vectors of ``1, c_1, c_2, c_3, |c|^2`` in peculiar units."""
    x = np.asarray(grid.nodes)
    one = np.ones_like(x)
    c = [(x - macro.u[a]) / np.sqrt(2.0 * gas.R_g * macro.T) for a in range(3)]
    basis = [[(one, one, one)]]
    for a in range(3):
        w = [one, one, one]
        w[a] = c[a]
        basis.append([tuple(w)])
    sq = []
    for a in range(3):
        w = [one, one, one]
        w[a] = c[a] ** 2
        sq.append(tuple(w))
    basis.append(sq)
    return basis


def _moment(t: TtTensor, terms) -> float:
    return sum(tt_convolve(t, *w) for w in terms)


def invariant_correction(defect, macro: Macroparameters, grid: VelocityGrid, gas: GasParameters):
    """Coefficients and per-axis factors of ``f_M (a + b.c + e |c|^2)``
    whose moments against ``1, c, |c|^2`` equal ``-defect``.

    Returns a list of ``(weight, (v1, v2, v3))`` rank-1 terms.
    """
    basis = _collision_invariants(macro, grid, gas)
    f_m = maxwell_factors(1.0, macro.T, macro.u, grid, gas)
    # Gram matrix <f_M phi_k phi_l>; every product is again separable
    G = np.empty((5, 5))
    for k in range(5):
        for l in range(k, 5):
            G[k, l] = G[l, k] = sum(
                np.prod([np.dot(f_m[a], wk[a] * wl[a]) for a in range(3)])
                for wk in basis[k] for wl in basis[l]
            )
    coef = np.linalg.solve(G, -np.asarray(defect, dtype=float))
    return [
        (coef[k], tuple(f_m[a] * w[a] for a in range(3)))
        for k, b in enumerate(basis) for w in b
    ]


def restore_invariants(J: TtTensor, macro: Macroparameters, grid: VelocityGrid, gas: GasParameters) -> TtTensor:
    """Add ``f_M (a + b.c + e |c|^2)`` so that ``J`` has zero mass, momentum
    and energy moments on the grid.

    Both the velocity quadrature (``f_S`` and ``f`` share moments only up to
    quadrature error) and rounding ``J`` at a relative tolerance leave small
    moment defects; this removes them at the cost of two extra TT ranks.
    """
    basis = _collision_invariants(macro, grid, gas)
    defect = np.array([_moment(J, b) for b in basis])
    if not np.any(defect):
        return J
    terms = invariant_correction(defect, macro, grid, gas)
    fix = tt_round(tt_lincomb([w for w, _ in terms], [tt_rank1(*v) for _, v in terms]), _EXACT_EPS)
    return tt_add(J, fix)


def collision_terms(f: TtTensor, grid: VelocityGrid, gas: GasParameters, eps_round: float,
                    conservative: bool = True):
    """``(J, macro, nu)`` with ``J = nu (f_S - f)``, ``nu = p / mu(T)``.

    With ``conservative`` the rounded ``J`` is corrected to carry no mass,
    momentum or energy (see :func:`restore_invariants`).
    """
    macro = compute_macro(f, grid, gas)
    nu = macro.p / float(viscosity(macro.T, gas))
    f_s = shakhov_tt(macro, grid, gas, eps_round)
    J = tt_round(tt_lincomb([nu, -nu], [f_s, f]), eps_round)
    if conservative:
        J = restore_invariants(J, macro, grid, gas)
    return J, macro, nu


def compute_collision(f: TtTensor, grid: VelocityGrid, gas: GasParameters, eps_round: float) -> TtTensor:
    return collision_terms(f, grid, gas, eps_round)[0]
