"""StarCD ASCII hexahedral meshes and finite-volume geometry.

Supported dialect: whitespace-delimited fields, blank lines ignored.

* ``.vrt``: ``id x y z``
* ``.cel``: ``id v1 ... v8 [ignored trailing fields]``
* ``.bnd``: ``id v1 v2 v3 v4 group [ignored trailing fields]``

Boundary groups are numbered by order of first appearance in the ``.bnd``
file; that order is the order of the boundary-condition list of a problem.
"""
from __future__ import annotations

import hashlib
import logging
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

CACHE_VERSION = 1

# local hexahedron faces (StarCD / VTK vertex ordering), outward for a
# right-handed cell
HEX_FACES = np.array(
    [
        [0, 3, 2, 1],
        [4, 5, 6, 7],
        [0, 1, 5, 4],
        [1, 2, 6, 5],
        [2, 3, 7, 6],
        [3, 0, 4, 7],
    ]
)

_ARRAY_FIELDS = (
    "vertices",
    "cells",
    "face_vertices",
    "face_area",
    "face_normal",
    "face_center",
    "face_left",
    "face_right",
    "face_group",
    "cell_volume",
    "cell_center",
    "cell_faces",
    "cell_signs",
)


class MeshError(ValueError):
    """Malformed or inconsistent mesh input."""


@dataclass(eq=False)
class UnstructuredMesh:
    """Hexahedral mesh with unique faces.

    Each face stores one unit normal, pointing out of ``face_left``;
    ``face_right`` is -1 on the boundary, where ``face_group`` gives the
    boundary group index (-1 for interior faces). ``cell_signs[i, k]`` is +1
    when the stored normal of ``cell_faces[i, k]`` points out of cell ``i``.
    """

    vertices: np.ndarray
    cells: np.ndarray
    face_vertices: np.ndarray
    face_area: np.ndarray
    face_normal: np.ndarray
    face_center: np.ndarray
    face_left: np.ndarray
    face_right: np.ndarray
    face_group: np.ndarray
    cell_volume: np.ndarray
    cell_center: np.ndarray
    cell_faces: np.ndarray
    cell_signs: np.ndarray
    group_names: tuple = ()
    source_hash: str = ""
    source_dir: str = ""

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_faces(self) -> int:
        return len(self.face_area)

    @property
    def boundary_groups(self) -> list[tuple[str, np.ndarray]]:
        return [
            (name, np.flatnonzero(self.face_group == g))
            for g, name in enumerate(self.group_names)
        ]

    def closure_residual(self) -> np.ndarray:
        """Per cell ``|sum_f sign A n| / sum_f A``."""
        vec = self.face_area[:, None] * self.face_normal
        tot = np.einsum("ck,ckd->cd", self.cell_signs, vec[self.cell_faces])
        return np.linalg.norm(tot, axis=1) / self.face_area[self.cell_faces].sum(axis=1)


def _parse_rows(path: Path, min_fields: int, convert):
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens:
                continue
            if len(tokens) < min_fields:
                raise MeshError(
                    f"{path.name}:{lineno}: expected at least {min_fields} fields, got {len(tokens)}"
                )
            try:
                rows.append((lineno, convert(tokens)))
            except ValueError as exc:
                raise MeshError(f"{path.name}:{lineno}: {exc}") from None
    return rows


def _find(directory: Path, ext: str) -> Path:
    hits = sorted(directory.glob(f"*{ext}"))
    if not hits:
        raise MeshError(f"no {ext} file in {directory}")
    if len(hits) > 1:
        raise MeshError(f"several {ext} files in {directory}: {[h.name for h in hits]}")
    return hits[0]


def source_hash(path) -> str:
    """SHA-256 over the .vrt, .cel and .bnd files of a mesh directory."""
    d = Path(path)
    h = hashlib.sha256()
    for ext in (".vrt", ".cel", ".bnd"):
        h.update(_find(d, ext).read_bytes())
    return h.hexdigest()


def read_starcd(path) -> UnstructuredMesh:
    d = Path(path)
    if not d.is_dir():
        raise MeshError(f"mesh directory {d} does not exist")
    vrt, cel, bnd = (_find(d, e) for e in (".vrt", ".cel", ".bnd"))

    vrows = _parse_rows(vrt, 4, lambda t: (int(t[0]), [float(x) for x in t[1:4]]))
    crows = _parse_rows(cel, 9, lambda t: (int(t[0]), [int(x) for x in t[1:9]]))
    brows = _parse_rows(bnd, 6, lambda t: (int(t[0]), [int(x) for x in t[1:5]], int(t[5])))

    vid = {}
    coords = np.empty((len(vrows), 3))
    for k, (lineno, (i, xyz)) in enumerate(vrows):
        if i in vid:
            raise MeshError(f"{vrt.name}:{lineno}: duplicate vertex id {i}")
        vid[i] = k
        coords[k] = xyz

    def lookup(fname, lineno, ids):
        try:
            return [vid[i] for i in ids]
        except KeyError as exc:
            raise MeshError(f"{fname}:{lineno}: unknown vertex id {exc.args[0]}") from None

    cells = np.empty((len(crows), 8), dtype=np.int64)
    for k, (lineno, (_, ids)) in enumerate(crows):
        if len(set(ids)) != 8:
            raise MeshError(f"{cel.name}:{lineno}: cell is not a hexahedron (repeated vertices)")
        cells[k] = lookup(cel.name, lineno, ids)

    bfaces = np.empty((len(brows), 4), dtype=np.int64)
    bgroup_raw = []
    for k, (lineno, (_, ids, g)) in enumerate(brows):
        bfaces[k] = lookup(bnd.name, lineno, ids)
        bgroup_raw.append((lineno, g))

    order = []
    for _, g in bgroup_raw:
        if g not in order:
            order.append(g)
    bgroup = np.array([order.index(g) for _, g in bgroup_raw], dtype=np.int64)
    lines = np.array([ln for ln, _ in bgroup_raw], dtype=np.int64)

    mesh = build_mesh(
        coords, cells, bfaces, bgroup, [str(g) for g in order], bnd_lines=lines
    )
    mesh.source_hash = source_hash(d)
    mesh.source_dir = str(d.resolve())
    return mesh


def _vector_area(p):
    # p: (..., 4, 3) quad vertices in order
    return 0.5 * np.cross(p[..., 2, :] - p[..., 0, :], p[..., 3, :] - p[..., 1, :])


def build_mesh(vertices, cells, bnd_faces, bnd_group, group_names, bnd_lines=None):
    """Assemble topology and geometry from raw arrays.

    ``bnd_faces`` lists the vertex indices of every boundary quad and
    ``bnd_group`` its group index into ``group_names``.
    """
    vertices = np.asarray(vertices, dtype=np.float64)
    cells = np.asarray(cells, dtype=np.int64)
    bnd_faces = np.asarray(bnd_faces, dtype=np.int64).reshape(-1, 4)
    bnd_group = np.asarray(bnd_group, dtype=np.int64)
    nc = len(cells)
    if nc == 0:
        raise MeshError("mesh has no cells")
    if cells.min() < 0 or cells.max() >= len(vertices):
        raise MeshError("cell refers to a nonexistent vertex")

    local = cells[:, HEX_FACES].reshape(nc * 6, 4)
    keys = np.sort(local, axis=1)
    uniq, first, inverse, counts = np.unique(
        keys, axis=0, return_index=True, return_inverse=True, return_counts=True
    )
    inverse = inverse.ravel()
    if np.any(counts > 2):
        bad = uniq[np.argmax(counts > 2)]
        raise MeshError(f"face with vertices {bad.tolist()} is shared by more than two cells")
    nf = len(uniq)

    owner_slot = first  # first occurrence -> left cell
    face_left = owner_slot // 6
    face_right = np.full(nf, -1, dtype=np.int64)
    slots = np.arange(nc * 6)
    second = slots[slots != owner_slot[inverse]]
    face_right[inverse[second]] = second // 6

    fverts = local[owner_slot].copy()
    pts = vertices[fverts]
    svec = _vector_area(pts)
    fcenter = pts.mean(axis=1)
    ccenter = vertices[cells].mean(axis=1)

    outward = np.einsum("fd,fd->f", svec, fcenter - ccenter[face_left])
    flip = outward < 0
    fverts[flip] = fverts[flip][:, ::-1]
    svec[flip] *= -1.0

    area = np.linalg.norm(svec, axis=1)
    if np.any(area <= 0):
        raise MeshError(f"degenerate face {int(np.argmin(area))} with zero area")
    normal = svec / area[:, None]

    cell_faces = inverse.reshape(nc, 6)
    cell_signs = np.where(face_left[cell_faces] == np.arange(nc)[:, None], 1, -1).astype(np.int64)

    # volume by the divergence theorem over the triangulated stored faces
    origin = vertices.mean(axis=0)
    p = vertices[fverts] - origin
    tri = (
        np.einsum("fd,fd->f", p[:, 0], np.cross(p[:, 1], p[:, 2]))
        + np.einsum("fd,fd->f", p[:, 0], np.cross(p[:, 2], p[:, 3]))
    ) / 6.0
    volume = np.einsum("ck,ck->c", cell_signs, tri[cell_faces])
    if np.any(volume <= 0):
        raise MeshError(f"cell {int(np.argmin(volume))} has nonpositive volume")

    # boundary groups
    face_group = np.full(nf, -1, dtype=np.int64)
    is_bnd = face_right < 0
    if len(bnd_faces):
        bkeys = np.sort(bnd_faces, axis=1)
        lut = {tuple(k): f for f, k in enumerate(map(tuple, uniq))}
        for row, (k, g) in enumerate(zip(map(tuple, bkeys), bnd_group)):
            f = lut.get(k)
            where = f"line {bnd_lines[row]}" if bnd_lines is not None else f"entry {row}"
            if f is None or not is_bnd[f]:
                raise MeshError(f"boundary {where}: face {[int(x) for x in k]} is not a boundary face of any cell")
            if face_group[f] >= 0:
                raise MeshError(f"boundary {where}: face {[int(x) for x in k]} listed twice")
            face_group[f] = g
    missing = np.flatnonzero(is_bnd & (face_group < 0))
    if len(missing):
        raise MeshError(
            f"{len(missing)} boundary faces are not in any boundary group, "
            f"e.g. vertices {fverts[missing[0]].tolist()}"
        )

    mesh = UnstructuredMesh(
        vertices=vertices,
        cells=cells,
        face_vertices=fverts,
        face_area=area,
        face_normal=normal,
        face_center=fcenter,
        face_left=face_left.astype(np.int64),
        face_right=face_right,
        face_group=face_group,
        cell_volume=volume,
        cell_center=ccenter,
        cell_faces=cell_faces,
        cell_signs=cell_signs,
        group_names=tuple(group_names),
    )
    res = mesh.closure_residual()
    if res.max() > 1e-10:
        raise MeshError(f"cell {int(res.argmax())} is not closed (residual {res.max():.3e})")
    for name in _ARRAY_FIELDS:
        getattr(mesh, name).flags.writeable = False
    return mesh


def write_starcd(directory, vertices, cells, bnd_faces, bnd_group, stem="mesh"):
    """Write raw arrays as StarCD ASCII files (1-based ids)."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    with open(d / f"{stem}.vrt", "w") as fh:
        for i, (x, y, z) in enumerate(np.asarray(vertices), start=1):
            fh.write(f"{i:9d} {float(x)!r:>24} {float(y)!r:>24} {float(z)!r:>24}\n")
    with open(d / f"{stem}.cel", "w") as fh:
        for i, c in enumerate(np.asarray(cells), start=1):
            fh.write(f"{i:9d} " + " ".join(f"{v + 1:9d}" for v in c) + "        1        1\n")
    with open(d / f"{stem}.bnd", "w") as fh:
        for i, (f, g) in enumerate(zip(np.asarray(bnd_faces), np.asarray(bnd_group)), start=1):
            fh.write(f"{i:9d} " + " ".join(f"{v + 1:9d}" for v in f) + f" {g + 1:9d}\n")
    return d


# -- preprocessing cache -------------------------------------------------------

def _checksum(arrays: dict) -> str:
    h = hashlib.sha256()
    for name in _ARRAY_FIELDS:
        a = np.ascontiguousarray(arrays[name])
        h.update(name.encode())
        h.update(str(a.dtype).encode() + str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()


def cache_mesh(mesh: UnstructuredMesh, path) -> Path:
    """Serialize ``mesh`` to a versioned, checksummed ``.npz`` file."""
    path = Path(path)
    arrays = {name: getattr(mesh, name) for name in _ARRAY_FIELDS}
    meta = np.array(
        [str(CACHE_VERSION), _checksum(arrays), mesh.source_hash, mesh.source_dir]
        + list(mesh.group_names)
    )
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        np.savez(fh, meta=meta, **arrays)
    os.replace(tmp, path)
    return path


def _from_cache(path: Path):
    with np.load(path, allow_pickle=False) as z:
        meta = [str(x) for x in z["meta"]]
        arrays = {name: z[name] for name in _ARRAY_FIELDS}
    return meta, arrays


def load_cached(path, source=None) -> UnstructuredMesh:
    """Load a cached mesh, recomputing it from the StarCD source when stale.

    The cache is stale when its format version or content checksum do not
    match, or when the source files changed since it was written. ``source``
    defaults to the directory recorded in the cache.
    """
    path = Path(path)
    meta = arrays = None
    problem = None
    if path.exists():
        try:
            meta, arrays = _from_cache(path)
        except (OSError, ValueError, KeyError) as exc:
            problem = f"unreadable cache ({exc})"
    else:
        problem = "no cache file"

    if problem is None:
        version, checksum, shash, sdir = meta[:4]
        src = Path(source) if source is not None else (Path(sdir) if sdir else None)
        if version != str(CACHE_VERSION):
            problem = f"cache version {version} != {CACHE_VERSION}"
        elif checksum != _checksum(arrays):
            problem = "cache checksum mismatch"
        elif src is not None and src.is_dir() and source_hash(src) != shash:
            problem = "mesh source changed"
        else:
            for a in arrays.values():
                a.flags.writeable = False
            return UnstructuredMesh(
                **arrays,
                group_names=tuple(meta[4:]),
                source_hash=shash,
                source_dir=sdir,
            )
    else:
        src = Path(source) if source is not None else None
        if src is None and meta is not None and meta[3]:
            src = Path(meta[3])

    if src is None or not src.is_dir():
        raise MeshError(f"{path}: {problem} and no mesh source to rebuild from")
    log.info("rebuilding mesh cache %s: %s", path, problem)
    mesh = read_starcd(src)
    cache_mesh(mesh, path)
    return mesh


def load_mesh(directory, cache_path=None) -> UnstructuredMesh:
    """Read a StarCD mesh through the preprocessing cache."""
    directory = Path(directory)
    if cache_path is None:
        cache_path = directory / "mesh_cache.npz"
    return load_cached(cache_path, source=directory)
