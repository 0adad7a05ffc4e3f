"""Small structured hexahedral meshes, produced as raw StarCD-style arrays.

Both generators return ``(vertices, cells, bnd_faces, bnd_group, group_names)``
which can go to :func:`ttkinetic.mesh.build_mesh` directly or be written out
with :func:`ttkinetic.mesh.write_starcd`.
"""
import numpy as np

from .mesh import build_mesh


def _hex_block(ni, nj, nk):
    """Cell connectivity of an (ni, nj, nk) block of a (ni+1, nj+1, nk+1) lattice."""
    def vid(i, j, k):
        return (i * (nj + 1) + j) * (nk + 1) + k

    i, j, k = np.meshgrid(np.arange(ni), np.arange(nj), np.arange(nk), indexing="ij")
    i, j, k = i.ravel(), j.ravel(), k.ravel()
    cells = np.stack(
        [
            vid(i, j, k), vid(i + 1, j, k), vid(i + 1, j + 1, k), vid(i, j + 1, k),
            vid(i, j, k + 1), vid(i + 1, j, k + 1), vid(i + 1, j + 1, k + 1), vid(i, j + 1, k + 1),
        ],
        axis=1,
    )
    return cells, vid


def _block_boundary(ni, nj, nk, vid):
    """Boundary quads of the block keyed by side name."""
    sides = {}
    j, k = np.meshgrid(np.arange(nj), np.arange(nk), indexing="ij")
    j, k = j.ravel(), k.ravel()
    for name, i in (("imin", 0), ("imax", ni)):
        sides[name] = np.stack([vid(i, j, k), vid(i, j + 1, k), vid(i, j + 1, k + 1), vid(i, j, k + 1)], 1)
    i, k = np.meshgrid(np.arange(ni), np.arange(nk), indexing="ij")
    i, k = i.ravel(), k.ravel()
    for name, j0 in (("jmin", 0), ("jmax", nj)):
        sides[name] = np.stack([vid(i, j0, k), vid(i + 1, j0, k), vid(i + 1, j0, k + 1), vid(i, j0, k + 1)], 1)
    i, j = np.meshgrid(np.arange(ni), np.arange(nj), indexing="ij")
    i, j = i.ravel(), j.ravel()
    for name, k0 in (("kmin", 0), ("kmax", nk)):
        sides[name] = np.stack([vid(i, j, k0), vid(i + 1, j, k0), vid(i + 1, j + 1, k0), vid(i, j + 1, k0)], 1)
    return sides


def box_arrays(shape, lengths, groups, origin=(0.0, 0.0, 0.0)):
    """Uniform box of ``shape`` cells.

    ``groups`` is an ordered list of ``(name, sides)`` where ``sides`` names
    the box sides (``xmin`` ... ``zmax``) that belong to the group.
    """
    ni, nj, nk = shape
    xs = [origin[a] + np.linspace(0.0, lengths[a], shape[a] + 1) for a in range(3)]
    X, Y, Z = np.meshgrid(*xs, indexing="ij")
    vertices = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)
    cells, vid = _hex_block(ni, nj, nk)
    raw = _block_boundary(ni, nj, nk, vid)
    alias = {"xmin": "imin", "xmax": "imax", "ymin": "jmin", "ymax": "jmax", "zmin": "kmin", "zmax": "kmax"}
    faces, gids, names = [], [], []
    used = set()
    for g, (name, sides) in enumerate(groups):
        names.append(name)
        for s in sides:
            if s in used:
                raise ValueError(f"side {s} assigned twice")
            used.add(s)
            quads = raw[alias[s]]
            faces.append(quads)
            gids.append(np.full(len(quads), g))
    if len(used) != 6:
        raise ValueError(f"sides {sorted(set(alias) - used)} have no boundary group")
    return vertices, cells, np.concatenate(faces), np.concatenate(gids), names


def box_mesh(shape, lengths, groups, origin=(0.0, 0.0, 0.0)):
    return build_mesh(*box_arrays(shape, lengths, groups, origin))


def cylinder_arrays(radius, outer_radius, n_radial, n_theta, thickness, growth=1.0):
    """Half annulus ``y >= 0`` around a cylinder on the z axis, one cell thick.

    Groups, in order: ``sym-z`` (both z planes), ``in`` (outer arc, x < 0),
    ``out`` (outer arc, x >= 0), ``wall`` (cylinder surface), ``sym-y``
    (the y = 0 plane). Radial spacing grows geometrically by ``growth``.
    """
    if growth == 1.0:
        w = np.ones(n_radial)
    else:
        w = growth ** np.arange(n_radial)
    r = radius + (outer_radius - radius) * np.concatenate([[0.0], np.cumsum(w)]) / w.sum()
    theta = np.linspace(0.0, np.pi, n_theta + 1)
    z = np.array([0.0, thickness])
    R, T, Zz = np.meshgrid(r, theta, z, indexing="ij")
    vertices = np.stack([R * np.cos(T), R * np.sin(T), Zz], axis=-1).reshape(-1, 3)
    cells, vid = _hex_block(n_radial, n_theta, 1)
    sides = _block_boundary(n_radial, n_theta, 1, vid)

    outer = sides["imax"]
    xc = vertices[outer].mean(axis=1)[:, 0]
    groups = [
        ("sym-z", np.concatenate([sides["kmin"], sides["kmax"]])),
        ("in", outer[xc < 0]),
        ("out", outer[xc >= 0]),
        ("wall", sides["imin"]),
        ("sym-y", np.concatenate([sides["jmin"], sides["jmax"]])),
    ]
    faces = np.concatenate([f for _, f in groups])
    gids = np.concatenate([np.full(len(f), g) for g, (_, f) in enumerate(groups)])
    return vertices, cells, faces, gids, [name for name, _ in groups]
