"""Result files: legacy ASCII VTK, CSV ray samples and a key-value run summary."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .mesh import UnstructuredMesh

VTK_HEXAHEDRON = 12


def cell_fields(fields, rank_ratio=None) -> dict:
    """Scalar cell data written to VTK/CSV, in output order."""
    u = np.asarray(fields.u)
    out = {
        "n": np.asarray(fields.n),
        "u_mag": np.linalg.norm(u, axis=1),
        "ux": u[:, 0],
        "uy": u[:, 1],
        "uz": u[:, 2],
        "T": np.asarray(fields.T),
        "p": np.asarray(fields.p),
    }
    if rank_ratio is not None:
        out["rank_ratio"] = np.asarray(rank_ratio, dtype=float)
    return out


def write_vtk(path, mesh: UnstructuredMesh, data: dict, title="ttkinetic solution") -> Path:
    path = Path(path)
    nc = mesh.n_cells
    lines = [
        "# vtk DataFile Version 3.0",
        title[:255],
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {len(mesh.vertices)} double",
    ]
    lines += [f"{x:.17g} {y:.17g} {z:.17g}" for x, y, z in mesh.vertices]
    lines.append(f"CELLS {nc} {9 * nc}")
    lines += ["8 " + " ".join(map(str, c)) for c in mesh.cells]
    lines.append(f"CELL_TYPES {nc}")
    lines += [str(VTK_HEXAHEDRON)] * nc
    lines.append(f"CELL_DATA {nc}")
    for name, vals in data.items():
        vals = np.asarray(vals, dtype=float)
        if vals.shape != (nc,):
            raise ValueError(f"field {name!r} has shape {vals.shape}, expected ({nc},)")
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [f"{v:.17g}" for v in vals]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_vtk_cell_data(path):
    """Minimal reader for files from :func:`write_vtk`: ``(n_points, n_cells, data)``."""
    tokens = Path(path).read_text().split("\n")
    n_points = n_cells = None
    data = {}
    i = 0
    while i < len(tokens):
        t = tokens[i].split()
        if t and t[0] == "POINTS":
            n_points = int(t[1])
        elif t and t[0] == "CELLS":
            n_cells = int(t[1])
        elif t and t[0] == "SCALARS":
            vals = np.array([float(v) for v in tokens[i + 2:i + 2 + n_cells]])
            data[t[1]] = vals
            i += 1 + n_cells
        i += 1
    return n_points, n_cells, data


def sample_ray(mesh: UnstructuredMesh, data: dict, origin, direction, tol=None):
    """Cells whose centers lie within ``tol`` of a ray, ordered along it.

    ``tol`` defaults to half the cube root of the smallest cell volume.
    Returns ``(distance, cell_index)`` arrays.
    """
    o = np.asarray(origin, dtype=float)
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    rel = mesh.cell_center - o
    s = rel @ d
    off = np.linalg.norm(rel - s[:, None] * d, axis=1)
    if tol is None:
        tol = 0.5 * float(np.min(mesh.cell_volume)) ** (1.0 / 3.0)
    keep = np.flatnonzero((s >= 0) & (off <= tol))
    keep = keep[np.argsort(s[keep], kind="stable")]
    return s[keep], keep


def write_ray_csv(path, mesh: UnstructuredMesh, data: dict, origin, direction, tol=None) -> int:
    s, idx = sample_ray(mesh, data, origin, direction, tol)
    names = list(data)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["distance", "cell", "x", "y", "z"] + names)
        for si, i in zip(s, idx):
            c = mesh.cell_center[i]
            w.writerow([repr(float(si)), int(i), *(repr(float(v)) for v in c)]
                       + [repr(float(data[k][i])) for k in names])
    return len(idx)


def _flatten(prefix, obj, out):
    if isinstance(obj, dict):
        for k, v in obj.items():
            _flatten(f"{prefix}{k}.", v, out)
    else:
        out[prefix[:-1]] = obj


def write_summary(path, summary: dict) -> Path:
    """``key = value`` lines; values are JSON so they parse back exactly."""
    flat = {}
    _flatten("", summary, flat)
    path = Path(path)
    path.write_text("".join(f"{k} = {json.dumps(v)}\n" for k, v in flat.items()))
    return path


def read_summary(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        k, _, v = line.partition("=")
        out[k.strip()] = json.loads(v)
    return out
