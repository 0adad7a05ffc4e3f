import shutil

import numpy as np
import pytest

from ttkinetic.mesh import (
    MeshError,
    build_mesh,
    cache_mesh,
    load_cached,
    load_mesh,
    read_starcd,
    write_starcd,
)
from ttkinetic.meshgen import box_arrays, box_mesh, cylinder_arrays

ALL = [("walls", ["xmin", "xmax", "ymin", "ymax", "zmin", "zmax"])]


def unit_cube():
    return box_mesh((1, 1, 1), (1.0, 1.0, 1.0), ALL)


def test_unit_cube_exact():
    m = unit_cube()
    assert m.n_cells == 1 and m.n_faces == 6
    assert m.cell_volume[0] == 1.0
    np.testing.assert_array_equal(m.cell_center[0], [0.5, 0.5, 0.5])
    np.testing.assert_array_equal(m.face_area, np.ones(6))
    assert np.all(m.face_right == -1)
    # outward normals are the six signed coordinate directions
    got = sorted(map(tuple, m.face_normal + 0.0))
    want = sorted(map(tuple, np.vstack([np.eye(3), -np.eye(3)]) + 0.0))
    assert got == want
    for f in range(6):
        np.testing.assert_allclose(m.face_normal[f], 2 * (m.face_center[f] - 0.5), atol=0)
    assert m.closure_residual()[0] == 0.0


def test_two_cell_fixture_exact():
    m = box_mesh((2, 1, 1), (2.0, 1.0, 1.0), [("in", ["xmin"]), ("rest", ["xmax", "ymin", "ymax", "zmin", "zmax"])])
    assert m.n_cells == 2 and m.n_faces == 11
    np.testing.assert_array_equal(m.cell_volume, [1.0, 1.0])
    np.testing.assert_array_equal(m.cell_center, [[0.5, 0.5, 0.5], [1.5, 0.5, 0.5]])
    inner = np.flatnonzero(m.face_right >= 0)
    assert len(inner) == 1
    f = inner[0]
    assert m.face_area[f] == 1.0
    np.testing.assert_array_equal(m.face_center[f], [1.0, 0.5, 0.5])
    left, right = m.face_left[f], m.face_right[f]
    np.testing.assert_array_equal(m.face_normal[f], np.sign(right - left) * np.array([1.0, 0.0, 0.0]))
    assert m.face_group[f] == -1
    assert m.group_names == ("in", "rest")
    assert len(m.boundary_groups[0][1]) == 1 and len(m.boundary_groups[1][1]) == 9
    # each cell sees the shared face with opposite signs
    s0 = m.cell_signs[0][m.cell_faces[0] == f][0]
    s1 = m.cell_signs[1][m.cell_faces[1] == f][0]
    assert s0 == -s1


def test_closure_on_distorted_mesh():
    rng = np.random.default_rng(3)
    v, c, bf, bg, names = box_arrays((4, 3, 3), (1.0, 1.0, 1.0), ALL)
    v = v + 0.05 * rng.standard_normal(v.shape)
    m = build_mesh(v, c, bf, bg, names)
    assert m.closure_residual().max() <= 1e-10
    # volumes sum to the divergence-theorem volume of the outer surface
    assert np.all(m.cell_volume > 0)


def test_cylinder_mesh_geometry():
    arrays = cylinder_arrays(1.0, 5.0, 6, 12, 0.2, growth=1.2)
    m = build_mesh(*arrays)
    assert m.group_names == ("sym-z", "in", "out", "wall", "sym-y")
    assert m.closure_residual().max() <= 1e-10
    # total volume close to a half annulus (polygonal)
    exact = 0.5 * np.pi * (25.0 - 1.0) * 0.2
    assert m.cell_volume.sum() == pytest.approx(exact, rel=0.02)
    wall = m.boundary_groups[3][1]
    c = m.face_center[wall]
    radial = c / np.linalg.norm(c, axis=1, keepdims=True)
    radial[:, 2] = 0
    # wall normals point into the cylinder (out of the fluid cells)
    assert np.all(np.einsum("fd,fd->f", m.face_normal[wall], radial) < -0.99)


def write_box(tmp_path, shape=(2, 2, 1)):
    arrays = box_arrays(shape, (1.0, 1.0, 1.0), [("a", ["xmin"]), ("b", ["xmax", "ymin", "ymax", "zmin", "zmax"])])
    write_starcd(tmp_path, *arrays[:4])
    return arrays


def test_starcd_round_trip(tmp_path):
    arrays = write_box(tmp_path)
    m = read_starcd(tmp_path)
    ref = build_mesh(*arrays)
    np.testing.assert_allclose(m.cell_volume, ref.cell_volume)
    np.testing.assert_allclose(np.sort(m.face_area), np.sort(ref.face_area))
    assert m.group_names == ("1", "2")
    assert m.source_hash


def _set_token(line, k, value):
    tokens = line.split()
    tokens[k] = value
    return " ".join(tokens) + "\n"


def _rewrite(path, fn):
    lines = path.read_text().splitlines(keepends=True)
    path.write_text("".join(fn(lines)))


@pytest.mark.parametrize(
    "ext, edit, match",
    [
        (".vrt", lambda ls: ls[:-1] + ["  99  0.0  1.0\n"], "expected at least 4 fields"),
        (".vrt", lambda ls: ls + [ls[0]], "duplicate vertex id"),
        (".vrt", lambda ls: ["  1  0.0  abc  0.0\n"] + ls[1:], "could not convert|invalid"),
        (".cel", lambda ls: [_set_token(ls[0], 1, "12345")] + ls[1:], "unknown vertex id 12345"),
        (".cel", lambda ls: ["1 1 1 2 3 4 5 6 7 1 1\n"] + ls[1:], "not a hexahedron"),
        (".cel", lambda ls: ["1 2 3\n"] + ls[1:], "expected at least 9 fields"),
        (".bnd", lambda ls: ls[1:], "not in any boundary group"),
        (".bnd", lambda ls: ls + [ls[0]], "listed twice"),
        (".bnd", lambda ls: ls + ["99 7 9 10 8 1\n"], "not a boundary face"),
        (".bnd", lambda ls: ["1 1 2 x 4 1\n"] + ls[1:], "invalid literal"),
    ],
)
def test_starcd_malformed(tmp_path, ext, edit, match):
    write_box(tmp_path)
    _rewrite(tmp_path / f"mesh{ext}", edit)
    with pytest.raises(MeshError, match=match):
        read_starcd(tmp_path)


def test_starcd_error_reports_line(tmp_path):
    write_box(tmp_path)
    _rewrite(tmp_path / "mesh.vrt", lambda ls: ls + [ls[0]])
    with pytest.raises(MeshError, match=r"mesh\.vrt:\d+"):
        read_starcd(tmp_path)


def test_starcd_missing_or_ambiguous_files(tmp_path):
    with pytest.raises(MeshError, match="does not exist"):
        read_starcd(tmp_path / "nope")
    write_box(tmp_path)
    (tmp_path / "mesh.bnd").unlink()
    with pytest.raises(MeshError, match="no .bnd file"):
        read_starcd(tmp_path)
    write_box(tmp_path)
    shutil.copy(tmp_path / "mesh.cel", tmp_path / "other.cel")
    with pytest.raises(MeshError, match="several .cel files"):
        read_starcd(tmp_path)


def test_inverted_cell_rejected():
    v, c, bf, bg, names = box_arrays((1, 1, 1), (1.0, 1.0, 1.0), ALL)
    v = v.copy()
    v[c[0, 6]] = v[c[0, 0]] - 0.1  # pull a corner through the cell
    with pytest.raises(MeshError):
        build_mesh(v, c, bf, bg, names)


def test_face_shared_by_three_cells_rejected():
    v, c, bf, bg, names = box_arrays((2, 1, 1), (2.0, 1.0, 1.0), ALL)
    with pytest.raises(MeshError):
        build_mesh(v, np.vstack([c, c[:1]]), bf, bg, names)


def test_cache_round_trip(tmp_path):
    write_box(tmp_path)
    m = load_mesh(tmp_path)
    assert (tmp_path / "mesh_cache.npz").exists()
    m2 = load_mesh(tmp_path)
    np.testing.assert_array_equal(m.face_normal, m2.face_normal)
    assert m2.group_names == m.group_names
    assert not m2.cell_volume.flags.writeable


def test_cache_rebuilds_when_source_changes(tmp_path):
    write_box(tmp_path, (2, 2, 1))
    cache = tmp_path / "c.npz"
    m = load_mesh(tmp_path, cache)
    for p in tmp_path.glob("mesh.*"):
        p.unlink()
    write_box(tmp_path, (3, 2, 1))
    m2 = load_mesh(tmp_path, cache)
    assert m.n_cells == 4 and m2.n_cells == 6


def test_cache_corrupt_or_old_version(tmp_path):
    write_box(tmp_path)
    cache = tmp_path / "c.npz"
    m = read_starcd(tmp_path)
    cache_mesh(m, cache)
    cache.write_bytes(b"garbage")
    assert load_cached(cache, tmp_path).n_cells == m.n_cells
    with np.load(cache) as z:
        data = dict(z)
    data["meta"] = np.array(["0"] + [str(x) for x in data["meta"][1:]])
    np.savez(cache, **data)
    assert load_cached(cache, tmp_path).n_cells == m.n_cells
    with np.load(cache) as z:
        assert str(z["meta"][0]) != "0"


def test_cache_without_source_fails(tmp_path):
    with pytest.raises(MeshError, match="no mesh source"):
        load_cached(tmp_path / "missing.npz")
