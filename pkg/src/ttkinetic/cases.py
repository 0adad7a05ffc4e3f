"""Bundled test problems: a planar normal shock and flow past a cylinder."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .boundary import Problem
from .mesh import MeshError, UnstructuredMesh, load_mesh
from .meshgen import box_mesh
from .physics import GasParameters, argon, maxwell_tt
from .velocity import VelocityGrid, build_grid

GAMMA = 5.0 / 3.0

CYLINDER_BCS = ["sym-z", "in", "out", "wall", "sym-y"]
CYLINDER_RADIUS = 1.35e-5  # m
CYLINDER_N0 = 2e23  # m^-3
CYLINDER_T0 = 200.0  # K
CYLINDER_V0 = 2630.0  # m/s
CYLINDER_MU0 = 1.59e-5  # Pa s at T0, argon
CYLINDER_OMEGA = 0.734


@dataclass(frozen=True)
class FlowState:
    n: float
    u: float  # velocity along x
    T: float


@dataclass
class Case:
    name: str
    mesh: UnstructuredMesh
    grid: VelocityGrid
    gas: GasParameters
    problem: Problem
    params: dict


def sound_speed(T, gas: GasParameters, gamma=GAMMA):
    return float(np.sqrt(gamma * gas.R_g * T))


def mach_number(u, T, gas: GasParameters, gamma=GAMMA):
    return abs(u) / sound_speed(T, gas, gamma)


def mean_free_path(n, T, gas: GasParameters):
    """Hard-sphere mean free path ``16 mu / (5 rho sqrt(2 pi R T))``."""
    mu = gas.mu_ref * (T / gas.T_ref) ** gas.omega
    return 16.0 * mu / (5.0 * gas.m * n * np.sqrt(2.0 * np.pi * gas.R_g * T))


def rankine_hugoniot(mach, upstream: FlowState, gamma=GAMMA) -> FlowState:
    """Downstream state of a stationary normal shock (perfect gas)."""
    if not mach > 1:
        raise ValueError(f"shock needs an upstream Mach number > 1, got {mach}")
    m2 = mach * mach
    ratio = (gamma + 1.0) * m2 / ((gamma - 1.0) * m2 + 2.0)
    t_ratio = (2.0 * gamma * m2 - (gamma - 1.0)) * ((gamma - 1.0) * m2 + 2.0) / ((gamma + 1.0) ** 2 * m2)
    return FlowState(n=upstream.n * ratio, u=upstream.u / ratio, T=upstream.T * t_ratio)


def setup_shock_case(mach=2.0, upstream: FlowState | None = None, n_cells=100, n_v=32,
                     gas: GasParameters | None = None, length_mfp=40.0, bound_factor=4.0) -> Case:
    """Stationary normal shock in a 1 x 1 x ``n_cells`` channel along x.

    ``upstream.u`` is ignored and replaced by ``mach`` times the upstream sound
    speed. The channel spans ``length_mfp`` upstream mean free paths; the left
    half starts in the upstream state, the right half in the Rankine-Hugoniot
    downstream state.
    """
    if not mach > 1:
        raise ValueError(f"shock needs an upstream Mach number > 1, got {mach}")
    if n_cells < 2:
        raise ValueError("shock channel needs at least 2 cells")
    gas = gas or argon()
    up = upstream or FlowState(n=1e20, u=0.0, T=273.0)
    up = FlowState(n=up.n, u=mach * sound_speed(up.T, gas), T=up.T)
    down = rankine_hugoniot(mach, up)

    length = length_mfp * mean_free_path(up.n, up.T, gas)
    h = length / n_cells
    mesh = box_mesh(
        (n_cells, 1, 1), (length, h, h),
        [("in", ["xmin"]), ("out", ["xmax"]), ("sym-y", ["ymin", "ymax"]), ("sym-z", ["zmin", "zmax"])],
    )
    bound = up.u + bound_factor * np.sqrt(2.0 * gas.R_g * down.T)
    grid = build_grid(n_v, bound)
    f_up = maxwell_tt(up.n, up.T, (up.u, 0.0, 0.0), grid, gas)
    f_down = maxwell_tt(down.n, down.T, (down.u, 0.0, 0.0), grid, gas)
    x_mid = 0.5 * length

    def f_init(center):
        return f_up if center[0] < x_mid else f_down

    problem = Problem(["in", "out", "sym-y", "sym-z"], [f_up, f_down, None, None], f_init)
    params = {
        "mach": float(mach), "n_cells": int(n_cells), "n_v": int(n_v), "xi_bound": float(bound),
        "length": float(length), "upstream": up, "downstream": down,
    }
    return Case("shock", mesh, grid, gas, problem, params)


def cylinder_gas() -> GasParameters:
    return argon(mu_ref=CYLINDER_MU0, T_ref=CYLINDER_T0, omega=CYLINDER_OMEGA)


def _gas_dict(gas: GasParameters) -> dict:
    return {"m": gas.m, "R_g": gas.R_g, "Pr": gas.Pr, "mu_ref": gas.mu_ref, "T_ref": gas.T_ref, "omega": gas.omega}


def cylinder_config(mesh_dir, n_v=32, bound_factor=4.5) -> dict:
    """Resolved run configuration of the cylinder problem on a StarCD mesh."""
    gas = cylinder_gas()
    n0, T0, v0 = CYLINDER_N0, CYLINDER_T0, CYLINDER_V0
    T_w = 5.0 * T0
    stream = {"n": n0, "T": T0, "u": [v0, 0.0, 0.0]}
    return {
        "case": "mesh",
        "mesh": str(mesh_dir),
        "boundaries": [
            {"kind": "sym-z"},
            dict(kind="in", **stream),
            dict(kind="out", **stream),
            {"kind": "wall", "T_w": T_w},
            {"kind": "sym-y"},
        ],
        "initial": dict(stream),
        "gas": _gas_dict(gas),
        "grid": {"n_v": int(n_v), "xi_bound": float(v0 + bound_factor * np.sqrt(2.0 * gas.R_g * T_w))},
    }


def _state(d, what):
    try:
        n, T, u = float(d["n"]), float(d["T"]), [float(x) for x in d.get("u", [0.0, 0.0, 0.0])]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"{what}: needs numeric n, T and optional 3-vector u ({exc})") from None
    if len(u) != 3:
        raise ValueError(f"{what}: u must have 3 components")
    return n, T, u


def _gas_from(d: dict) -> GasParameters:
    allowed = {"m", "R_g", "Pr", "mu_ref", "T_ref", "omega"}
    unknown = set(d) - allowed
    if unknown:
        raise ValueError(f"gas: unknown keys {sorted(unknown)}")
    if "m" not in d:
        raise ValueError("gas: molecular mass m is required")
    kw = {k: float(v) for k, v in d.items()}
    if "R_g" in kw:
        return GasParameters(**kw)
    return GasParameters.from_mass(kw.pop("m"), **kw)


def build_case(config: dict, cache_path=None) -> Case:
    """Case from a resolved configuration dictionary (see :func:`cylinder_config`)."""
    kind = config.get("case")
    if kind == "shock":
        p = dict(config.get("shock", {}))
        unknown = set(p) - {"mach", "n_cells", "n_up", "T_up", "length_mfp", "bound_factor"}
        if unknown:
            raise ValueError(f"shock: unknown keys {sorted(unknown)}")
        gas = _gas_from(config["gas"]) if "gas" in config else None
        up = FlowState(n=float(p.pop("n_up", 1e20)), u=0.0, T=float(p.pop("T_up", 273.0)))
        n_v = int(config.get("grid", {}).get("n_v", 32))
        return setup_shock_case(upstream=up, n_v=n_v, gas=gas, **p)
    if kind != "mesh":
        raise ValueError(f"config 'case' must be 'shock' or 'mesh', got {kind!r}")
    for key in ("mesh", "boundaries", "initial", "gas", "grid"):
        if key not in config:
            raise ValueError(f"config is missing {key!r}")
    d = Path(config["mesh"])
    if not d.is_dir():
        raise MeshError(f"mesh directory {d} does not exist")
    mesh = load_mesh(d, cache_path)
    gas = _gas_from(config["gas"])
    g = config["grid"]
    grid = build_grid(int(g["n_v"]), float(g["xi_bound"]))

    kinds, data = [], []
    for k, b in enumerate(config["boundaries"]):
        kind_k = b.get("kind")
        kinds.append(kind_k)
        if kind_k in ("in", "out"):
            n, T, u = _state(b, f"boundary {k}")
            data.append(maxwell_tt(n, T, u, grid, gas))
        elif kind_k == "wall":
            if "T_w" not in b:
                raise ValueError(f"boundary {k}: wall needs T_w")
            data.append(float(b["T_w"]))
        else:
            data.append(None)
    n, T, u = _state(config["initial"], "initial")
    f0 = maxwell_tt(n, T, u, grid, gas)
    problem = Problem(kinds, data, lambda c: f0)
    problem.check_mesh(mesh)
    params = {"n_v": grid.n, "xi_bound": grid.xi_max, "mesh_dir": str(d)}
    return Case("mesh", mesh, grid, gas, problem, params)


def setup_cylinder_case(mesh_dir, n_v=32, bound_factor=4.5, cache_path=None) -> Case:
    """Argon at Mach 10 past a cylinder with a hot diffusely reflecting wall.

    The StarCD mesh must carry five boundary groups in the order
    ``sym-z, in, out, wall, sym-y``.
    """
    case = build_case(cylinder_config(mesh_dir, n_v, bound_factor), cache_path)
    gas = case.gas
    case.name = "cylinder"
    case.params.update(
        n0=CYLINDER_N0, T0=CYLINDER_T0, v0=CYLINDER_V0, T_w=5.0 * CYLINDER_T0,
        mach=mach_number(CYLINDER_V0, CYLINDER_T0, gas),
        knudsen=float(mean_free_path(CYLINDER_N0, CYLINDER_T0, gas) / CYLINDER_RADIUS),
    )
    return case
