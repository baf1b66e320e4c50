import numpy as np
import pytest

from cephreg import (
    DataError, DetectorGeometry, LandmarkSet, MeshParseError, PointSet2D,
    ScalarMap2D, TriangleMesh, landmark_group, load_contour, load_frame,
    load_landmarks, load_map, load_mesh, save_contour, save_frame,
    save_landmarks, save_map, save_mesh,
)
from cephreg.mesh_model import AnatomicalFrame

CUBE_VERTS = np.array([[x, y, z] for x in (0.0, 1.0) for y in (0.0, 1.0) for z in (0.0, 1.0)])
CUBE_FACES = np.array([
    [0, 1, 3], [0, 3, 2],          # x = 0
    [4, 6, 7], [4, 7, 5],          # x = 1
    [0, 4, 5], [0, 5, 1],          # y = 0
    [2, 3, 7], [2, 7, 6],          # y = 1
    [0, 2, 6], [0, 6, 4],          # z = 0
    [1, 5, 7], [1, 7, 3],          # z = 1
])


def cube_mesh():
    return TriangleMesh.from_geometry(CUBE_VERTS, CUBE_FACES)


# ---------------------------------------------------------------------------
# meshes
# ---------------------------------------------------------------------------

def test_cube_stl_roundtrip_binary(tmp_path):
    path = tmp_path / "cube.stl"
    save_mesh(path, cube_mesh(), binary=True)
    mesh = load_mesh(path)
    assert mesh.n_vertices == 8
    assert mesh.n_faces == 12
    assert mesh.per_vertex_area.sum() == pytest.approx(6.0, abs=1e-12)


def test_cube_stl_roundtrip_ascii(tmp_path):
    path = tmp_path / "cube_ascii.stl"
    save_mesh(path, cube_mesh(), binary=False)
    mesh = load_mesh(path)
    assert mesh.n_vertices == 8
    assert mesh.n_faces == 12
    assert mesh.per_vertex_area.sum() == pytest.approx(6.0, abs=1e-12)


def test_ascii_and_binary_encodings_agree(tmp_path):
    # same in-memory tetrahedron written both ways must load identically
    verts = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    faces = np.array([[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]])
    tet = TriangleMesh.from_geometry(verts, faces)
    pa, pb = tmp_path / "t.stl", tmp_path / "t_ascii.stl"
    save_mesh(pa, tet, binary=True)
    save_mesh(pb, tet, binary=False)
    ma, mb = load_mesh(pa), load_mesh(pb)
    assert np.allclose(ma.vertices, mb.vertices, atol=1e-6)
    assert np.array_equal(ma.faces, mb.faces)


def test_load_save_load_fixpoint(tmp_path):
    p1, p2 = tmp_path / "a.stl", tmp_path / "b.stl"
    save_mesh(p1, cube_mesh(), binary=True)
    m1 = load_mesh(p1)
    save_mesh(p2, m1, binary=True)
    m2 = load_mesh(p2)
    assert np.allclose(m1.vertices, m2.vertices, atol=1e-6)
    assert np.array_equal(m1.faces, m2.faces)


def test_vertex_area_matches_face_area_total():
    mesh = cube_mesh()
    f = mesh.faces
    p0, p1, p2 = mesh.vertices[f[:, 0]], mesh.vertices[f[:, 1]], mesh.vertices[f[:, 2]]
    total = 0.5 * np.linalg.norm(np.cross(p1 - p0, p2 - p0), axis=1).sum()
    assert abs(mesh.per_vertex_area.sum() - total) <= 1e-9 * total


def test_empty_mesh_errors(tmp_path):
    path = tmp_path / "empty.stl"
    path.write_text("solid nothing\nendsolid nothing\n")
    with pytest.raises(DataError, match="empty mesh"):
        load_mesh(path)


def test_empty_binary_mesh_errors(tmp_path):
    path = tmp_path / "empty_bin.stl"
    path.write_bytes(b"\x00" * 80 + (0).to_bytes(4, "little"))
    with pytest.raises(DataError, match="empty mesh"):
        load_mesh(path)


def test_parse_error_reports_byte_offset(tmp_path):
    head = "solid t\n facet normal 0 0 1\n  outer loop\n"
    bad_line = "   vertex 0 oops 0\n"
    path = tmp_path / "bad.stl"
    path.write_text(head + bad_line + "endsolid t\n")
    with pytest.raises(MeshParseError) as err:
        load_mesh(path)
    assert err.value.byte_offset == len(head.encode())


def test_missing_mesh_file():
    with pytest.raises(DataError, match="not found"):
        load_mesh("/nonexistent/mesh.stl")


def test_obj_loading(tmp_path):
    path = tmp_path / "tri.obj"
    path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\n"
                    "f 1 3 2\nf 1 2 4\nf 1 4 3\nf 2 3 4\n")
    mesh = load_mesh(path)
    assert mesh.n_vertices == 4
    assert mesh.n_faces == 4


def test_degenerate_faces_dropped_by_loader(tmp_path):
    # a triangle collapsing to an edge welds into a repeated-index face
    lines = ["solid d"]
    tri = [(0, 0, 0), (1, 0, 0), (0, 1, 0)]
    degen = [(0, 0, 0), (1, 0, 0), (0, 0, 0)]
    for t in (tri, degen):
        lines.append(" facet normal 0 0 1\n  outer loop")
        for v in t:
            lines.append(f"   vertex {v[0]} {v[1]} {v[2]}")
        lines.append("  endloop\n endfacet")
    lines.append("endsolid d")
    path = tmp_path / "d.stl"
    path.write_text("\n".join(lines) + "\n")
    mesh = load_mesh(path)
    assert mesh.n_faces == 1


def test_mesh_validation_rejects_bad_input():
    with pytest.raises(DataError):
        TriangleMesh(CUBE_VERTS, np.zeros_like(CUBE_VERTS), CUBE_FACES,
                     np.ones(len(CUBE_VERTS)))          # normals not unit
    good = cube_mesh()
    with pytest.raises(DataError):
        TriangleMesh(good.vertices, good.normals, np.array([[0, 0, 1]]),
                     good.per_vertex_area)              # repeated index
    with pytest.raises(DataError):
        TriangleMesh(good.vertices, good.normals, np.array([[0, 1, 99]]),
                     good.per_vertex_area)              # out of range


# ---------------------------------------------------------------------------
# contours
# ---------------------------------------------------------------------------

def test_contour_79_points(tmp_path):
    path = tmp_path / "upper.txt"
    rows = "\n".join(f"{i}.0,{2 * i}.5" for i in range(79))
    path.write_text("jaw=upper\n" + rows + "\n")
    ps = load_contour(path)
    assert len(ps) == 79
    assert ps.label == "upper"


def test_contour_empty_file(tmp_path):
    path = tmp_path / "e.txt"
    path.write_text("")
    with pytest.raises(DataError):
        load_contour(path)


def test_contour_single_point(tmp_path):
    path = tmp_path / "one.txt"
    path.write_text("jaw=lower\n5.0,7.5\n")
    ps = load_contour(path)
    assert len(ps) == 1
    assert np.allclose(ps.points[0], (5.0, 7.5))


def test_contour_bad_record_reports_line(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("jaw=upper\n1.0,2.0\nnope,3.0\n")
    with pytest.raises(DataError, match=":3"):
        load_contour(path)


def test_contour_roundtrip(tmp_path):
    ps = PointSet2D(np.array([[1.25, 2.5], [3.0, 4.125]]), label="lower")
    path = tmp_path / "c.txt"
    save_contour(path, ps, header={"origin": "test"})
    back = load_contour(path)
    assert np.array_equal(back.points, ps.points)
    assert back.label == "lower"


# ---------------------------------------------------------------------------
# landmarks
# ---------------------------------------------------------------------------

def test_landmark_parse_with_parentheses(tmp_path):
    path = tmp_path / "lm.txt"
    path.write_text("UR6_MB: (412.0, 388.5)\n")
    lm = load_landmarks(path)
    assert landmark_group("UR6_MB") == "molar"
    assert np.allclose(lm.entries["UR6_MB"], (412.0, 388.5))


def test_landmark_unknown_code(tmp_path):
    path = tmp_path / "lm.txt"
    path.write_text("UR9_tip: 1.0,2.0\n")
    with pytest.raises(DataError, match="UR9_tip"):
        load_landmarks(path)


def test_landmark_full_table_groups(tmp_path):
    codes = [f"{jaw}{spec}" for jaw in ("UR", "LR")
             for spec in ("1_tip", "2_tip", "3_cusp", "6_MB", "6_DB", "7_MB")]
    path = tmp_path / "lm.txt"
    path.write_text("\n".join(f"{c}: {i}.0,{i}.5" for i, c in enumerate(codes)) + "\n")
    lm = load_landmarks(path)
    assert len(lm) == 12
    counts = lm.group_counts()
    assert counts["incisor_canine"] == 6
    assert counts["premolar"] == 0
    assert counts["molar"] == 6


def test_landmark_group_is_pure_digit_function():
    assert landmark_group("UR1_tip") == "incisor_canine"
    assert landmark_group("LR3_cusp") == "incisor_canine"
    assert landmark_group("UR4_cusp") == "premolar"
    assert landmark_group("LR5_anything") == "premolar"
    assert landmark_group("UR6_DB") == "molar"
    assert landmark_group("LR7_MB") == "molar"
    with pytest.raises(DataError):
        landmark_group("XX1_tip")


def test_landmark_duplicate_code(tmp_path):
    path = tmp_path / "lm.txt"
    path.write_text("UR1_tip: 1,2\nUR1_tip: 3,4\n")
    with pytest.raises(DataError, match="duplicate"):
        load_landmarks(path)


def test_landmark_mixed_dims_rejected():
    with pytest.raises(DataError, match="mixes"):
        LandmarkSet({"UR1_tip": (1.0, 2.0), "UR2_tip": (1.0, 2.0, 3.0)})


def test_landmark_roundtrip(tmp_path):
    lm = LandmarkSet({"UR6_MB": (1.0, 2.0, 3.0), "LR1_tip": (4.0, 5.0, 6.0)})
    path = tmp_path / "lm3.txt"
    save_landmarks(path, lm, header={"space": "test"})
    back = load_landmarks(path)
    assert back.dim == 3
    assert np.array_equal(back.entries["UR6_MB"], (1.0, 2.0, 3.0))


# ---------------------------------------------------------------------------
# scalar maps
# ---------------------------------------------------------------------------

def test_save_map_linear_normalization(tmp_path):
    m = ScalarMap2D(2, 2, np.array([[0.0, 1.0], [2.0, 3.0]]))
    path = tmp_path / "m.pgm"
    save_map(m, path)
    raw = path.read_bytes()
    payload = np.frombuffer(raw[-8:], dtype=">u2")
    assert list(payload) == [0, 21845, 43690, 65535]


def test_save_map_constant_is_zero(tmp_path):
    m = ScalarMap2D(2, 2, np.full((2, 2), 7.0))
    path = tmp_path / "c.pgm"
    save_map(m, path)
    payload = np.frombuffer(path.read_bytes()[-8:], dtype=">u2")
    assert list(payload) == [0, 0, 0, 0]


def test_map_roundtrip_within_quantization(tmp_path):
    rng = np.random.default_rng(5)
    data = rng.uniform(0.0, 10.0, size=(13, 17))
    m = ScalarMap2D(17, 13, data)
    path = tmp_path / "r.pgm"
    save_map(m, path, header={"note": "roundtrip"})
    back = load_map(path)
    assert (back.width, back.height) == (17, 13)
    normalized = (data - data.min()) / (data.max() - data.min())
    assert np.abs(back.data / 65535.0 - normalized).max() <= 1.0 / 65535.0 + 1e-12


# ---------------------------------------------------------------------------
# frames and geometry
# ---------------------------------------------------------------------------

def test_frame_roundtrip(tmp_path):
    frame = AnatomicalFrame((0, 1, 0), (0, 0, 1), (1, 0, 0), (1.5, -2.25, 3.0))
    path = tmp_path / "f.txt"
    save_frame(path, frame, header={"jaw": "upper"})
    back = load_frame(path)
    assert np.allclose(back.rotation, frame.rotation)
    assert np.allclose(back.origin, frame.origin)


def test_frame_validation():
    with pytest.raises(DataError):
        AnatomicalFrame((1, 0, 0), (1, 0, 0), (0, 0, 1), (0, 0, 0))   # not orthogonal
    with pytest.raises(DataError):
        AnatomicalFrame((1, 0, 0), (0, 0, 1), (0, 1, 0), (0, 0, 0))   # left-handed
    with pytest.raises(DataError):
        AnatomicalFrame((2, 0, 0), (0, 1, 0), (0, 0, 1), (0, 0, 0))   # not unit


def test_detector_geometry_validation():
    with pytest.raises(DataError):
        DetectorGeometry(source_x=5.0, detector_x=5.0)
    with pytest.raises(DataError):
        DetectorGeometry(pixel_spacing=0.0)
    with pytest.raises(DataError):
        DetectorGeometry(image_width=0)
    geom = DetectorGeometry()
    assert geom.detector_origin_uv == (geom.image_width / 2.0, geom.image_height / 2.0)


def test_pointset_validation():
    with pytest.raises(DataError):
        PointSet2D(np.array([[np.nan, 1.0]]))
    with pytest.raises(DataError):
        PointSet2D(np.zeros((1, 2)), label="sideways")
    with pytest.raises(DataError):
        PointSet2D(np.zeros((1, 2)), kind="mystery")
