"""Domain types for meshes, contours, landmarks and detector geometry, plus file I/O.

File formats
------------
meshes      binary or ASCII STL (extension-agnostic, sniffed by content);
            minimal Wavefront OBJ (``v``/``f`` records) when the path ends in ``.obj``
contours    line-oriented text: optional ``#`` comment lines, one header line
            ``jaw=upper`` or ``jaw=lower``, then one ``u,v`` pixel pair per line
landmarks   optional ``#`` comments, then ``CODE: u,v`` (2D, pixels) or
            ``CODE: x,y,z`` (3D, millimeters) per line
images      16-bit grayscale PGM: ``P5``, optional ``#`` comments, width height,
            maxval 65535, then height*width big-endian uint16 samples, row-major
frames      one whitespace-separated record of 12 numbers: the 3x3 axis matrix
            (columns are the X, Y, Z axes) in row-major order, then the origin

All coordinates are float64 in memory. Pixel coordinates are (u, v) with u along
image columns and v along rows.
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, MeshParseError

JAW_LABELS = ("upper", "lower")
POINT_KINDS = ("cr_contour", "ios_silhouette", "landmarks")
MAP_MEANINGS = ("thickness", "intensity", "silhouette", "distance")

GROUP_INCISOR_CANINE = "incisor_canine"
GROUP_PREMOLAR = "premolar"
GROUP_MOLAR = "molar"

# UR/LR prefix, tooth position 1-7, then a feature suffix such as tip/cusp/MB/DB.
_LANDMARK_CODE_RE = re.compile(r"^(UR|LR)([1-7])_(\w+)$")

_UNIT_TOL = 1e-6


def landmark_group(code: str) -> str:
    """Classify a landmark code by its tooth digit: 1-3 incisor/canine, 4-5 premolar, 6-7 molar."""
    m = _LANDMARK_CODE_RE.match(code)
    if m is None:
        raise DataError(f"unknown landmark code {code!r}")
    digit = int(m.group(2))
    if digit <= 3:
        return GROUP_INCISOR_CANINE
    if digit <= 5:
        return GROUP_PREMOLAR
    return GROUP_MOLAR


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


# ---------------------------------------------------------------------------
# core types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TriangleMesh:
    """Indexed triangle mesh with per-vertex normals and lumped vertex areas.

    ``per_vertex_area`` is one third of the summed areas of the faces incident
    to each vertex, so the areas total the true surface area.
    Instances are immutable; the arrays are marked read-only.
    """

    vertices: np.ndarray        # (N, 3) mm
    normals: np.ndarray         # (N, 3) unit
    faces: np.ndarray           # (M, 3) int
    per_vertex_area: np.ndarray  # (N,) mm^2

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        n = np.asarray(self.normals, dtype=float)
        f = np.asarray(self.faces, dtype=np.int64)
        a = np.asarray(self.per_vertex_area, dtype=float)
        if v.ndim != 2 or v.shape[1] != 3 or len(v) == 0:
            raise DataError("mesh vertices must be a nonempty (N, 3) array")
        if n.shape != v.shape:
            raise DataError("normals shape must match vertices")
        if f.ndim != 2 or f.shape[1] != 3:
            raise DataError("faces must be an (M, 3) index array")
        if a.shape != (len(v),):
            raise DataError("per_vertex_area must be one value per vertex")
        if not np.isfinite(v).all() or not np.isfinite(n).all() or not np.isfinite(a).all():
            raise DataError("mesh contains non-finite values")
        if np.abs(np.linalg.norm(n, axis=1) - 1.0).max() > _UNIT_TOL:
            raise DataError("vertex normals must be unit length")
        if len(f) and (f.min() < 0 or f.max() >= len(v)):
            raise DataError("face index out of range")
        if len(f) and ((f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])).any():
            raise DataError("degenerate face with a repeated vertex index")
        if (a < 0).any() or a.sum() <= 0:
            raise DataError("per_vertex_area must be nonnegative with positive total")
        object.__setattr__(self, "vertices", _readonly(v))
        object.__setattr__(self, "normals", _readonly(n))
        object.__setattr__(self, "faces", _readonly(f))
        object.__setattr__(self, "per_vertex_area", _readonly(a))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @classmethod
    def from_geometry(cls, vertices, faces, drop_degenerate: bool = False) -> "TriangleMesh":
        """Build a mesh from vertices and faces, deriving normals and vertex areas.

        Vertex normals are the normalized area-weighted sum of incident face
        normals. Set ``drop_degenerate`` to silently discard faces that repeat
        a vertex index (as produced by sloppy exporters).
        """
        v = np.asarray(vertices, dtype=float).reshape(-1, 3)
        f = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
        if drop_degenerate and len(f):
            ok = (f[:, 0] != f[:, 1]) & (f[:, 1] != f[:, 2]) & (f[:, 0] != f[:, 2])
            f = f[ok]
        if len(f) == 0:
            raise DataError("empty mesh: no (valid) faces")
        p0, p1, p2 = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
        cross = np.cross(p1 - p0, p2 - p0)          # norm = 2 * face area
        face_area = 0.5 * np.linalg.norm(cross, axis=1)

        nrm = np.zeros_like(v)
        for k in range(3):
            np.add.at(nrm, f[:, k], cross)          # area-weighted accumulation
        lengths = np.linalg.norm(nrm, axis=1)
        zero = lengths < 1e-300
        nrm[zero] = (0.0, 0.0, 1.0)
        lengths[zero] = 1.0
        nrm /= lengths[:, None]

        area = np.zeros(len(v))
        for k in range(3):
            np.add.at(area, f[:, k], face_area / 3.0)
        return cls(v, nrm, f, area)


@dataclass(frozen=True)
class AnatomicalFrame:
    """Right-handed orthonormal basis [X, Y, Z] anchored at an origin point."""

    X: np.ndarray
    Y: np.ndarray
    Z: np.ndarray
    origin: np.ndarray

    def __post_init__(self):
        for name in ("X", "Y", "Z", "origin"):
            vec = np.asarray(getattr(self, name), dtype=float).reshape(3)
            if not np.isfinite(vec).all():
                raise DataError(f"frame {name} contains non-finite values")
            object.__setattr__(self, name, _readonly(vec))
        for name in ("X", "Y", "Z"):
            if abs(np.linalg.norm(getattr(self, name)) - 1.0) > _UNIT_TOL:
                raise DataError(f"frame axis {name} is not unit length")
        if (abs(self.X @ self.Y) > _UNIT_TOL or abs(self.Y @ self.Z) > _UNIT_TOL
                or abs(self.X @ self.Z) > _UNIT_TOL):
            raise DataError("frame axes are not pairwise orthogonal")
        if np.cross(self.X, self.Y) @ self.Z <= 0:
            raise DataError("frame is not right-handed")

    @property
    def rotation(self) -> np.ndarray:
        """3x3 matrix whose columns are the X, Y, Z axes."""
        return np.column_stack([self.X, self.Y, self.Z])

    @classmethod
    def identity(cls, origin=(0.0, 0.0, 0.0)) -> "AnatomicalFrame":
        return cls((1, 0, 0), (0, 1, 0), (0, 0, 1), origin)


@dataclass(frozen=True)
class DetectorGeometry:
    """Perspective geometry: point source on the ray axis, planar detector.

    The source sits at (source_x, 0, 0) in projection coordinates and the
    detector is the plane x = detector_x. Detector millimeters map to pixels
    via ``u = y'/pixel_spacing + origin_u`` and ``v = z'/pixel_spacing + origin_v``;
    the origin defaults to the image center.
    """

    source_x: float = -1500.0
    detector_x: float = 150.0
    pixel_spacing: float = 0.25
    image_width: int = 703
    image_height: int = 938
    detector_origin_uv: tuple = None

    def __post_init__(self):
        if self.source_x == self.detector_x:
            raise DataError("source and detector planes coincide")
        if self.pixel_spacing <= 0:
            raise DataError("pixel_spacing must be positive")
        if self.image_width <= 0 or self.image_height <= 0:
            raise DataError("image dimensions must be positive")
        if self.detector_origin_uv is None:
            object.__setattr__(self, "detector_origin_uv",
                               (self.image_width / 2.0, self.image_height / 2.0))
        else:
            ou, ov = self.detector_origin_uv
            object.__setattr__(self, "detector_origin_uv", (float(ou), float(ov)))


@dataclass(frozen=True)
class PointSet2D:
    """Ordered list of 2D pixel points with a jaw label and a semantic kind."""

    points: np.ndarray          # (N, 2)
    label: str = "upper"
    kind: str = "cr_contour"

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if not np.isfinite(p).all():
            raise DataError("point set contains non-finite coordinates")
        if self.label not in JAW_LABELS:
            raise DataError(f"unknown jaw label {self.label!r}")
        if self.kind not in POINT_KINDS:
            raise DataError(f"unknown point kind {self.kind!r}")
        object.__setattr__(self, "points", _readonly(p))

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class LandmarkSet:
    """Named landmark points, either all 2D (pixels) or all 3D (mm).

    Codes follow UR/LR tooth notation (positions 1-7 plus a feature suffix);
    groups derive from the digit alone, see :func:`landmark_group`.
    """

    entries: dict

    def __post_init__(self):
        clean = {}
        dim = None
        for code, value in self.entries.items():
            landmark_group(code)  # validates the code
            v = np.asarray(value, dtype=float).reshape(-1)
            if v.shape[0] not in (2, 3) or not np.isfinite(v).all():
                raise DataError(f"landmark {code}: expected 2 or 3 finite coordinates")
            if dim is None:
                dim = v.shape[0]
            elif v.shape[0] != dim:
                raise DataError("landmark set mixes 2D and 3D entries")
            clean[code] = _readonly(v)
        object.__setattr__(self, "entries", clean)

    @property
    def dim(self) -> int:
        for v in self.entries.values():
            return v.shape[0]
        return 0

    def __len__(self) -> int:
        return len(self.entries)

    def codes(self):
        return list(self.entries.keys())

    def group_counts(self) -> dict:
        counts = {GROUP_INCISOR_CANINE: 0, GROUP_PREMOLAR: 0, GROUP_MOLAR: 0}
        for code in self.entries:
            counts[landmark_group(code)] += 1
        return counts


@dataclass(frozen=True)
class ScalarMap2D:
    """Detector-plane grid of scalar values (thickness, intensity, ...)."""

    width: int
    height: int
    data: np.ndarray            # (height, width) row-major
    meaning: str = "thickness"

    def __post_init__(self):
        d = np.asarray(self.data, dtype=float)
        if d.shape != (self.height, self.width):
            raise DataError("scalar map data shape must be (height, width)")
        if not np.isfinite(d).all():
            raise DataError("scalar map contains non-finite values")
        if self.meaning not in MAP_MEANINGS:
            raise DataError(f"unknown map meaning {self.meaning!r}")
        object.__setattr__(self, "data", _readonly(d))


# ---------------------------------------------------------------------------
# mesh loading / saving
# ---------------------------------------------------------------------------

def load_mesh(path) -> TriangleMesh:
    """Load a triangle mesh from STL (binary or ASCII) or minimal OBJ.

    Duplicate triangle-soup vertices are welded by exact coordinate equality.
    Normals are always recomputed from the faces (area-weighted); vertex areas
    are the barycentric third of incident face areas. Faces that repeat a
    vertex index after welding are dropped.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"mesh file not found: {path}")
    raw = path.read_bytes()
    if path.suffix.lower() == ".obj":
        vertices, faces = _parse_obj(path, raw)
        return TriangleMesh.from_geometry(vertices, faces, drop_degenerate=True)

    if len(raw) >= 84:
        (n_tri,) = struct.unpack_from("<I", raw, 80)
        if 84 + 50 * n_tri == len(raw):
            if n_tri == 0:
                raise DataError(f"{path}: empty mesh: no triangles")
            return _mesh_from_soup(_parse_binary_stl(path, raw, n_tri))
    if raw.lstrip()[:5].lower() == b"solid":
        return _mesh_from_soup(_parse_ascii_stl(path, raw))
    raise MeshParseError(path, 0, "not a recognizable STL file")


def _parse_binary_stl(path, raw, n_tri) -> np.ndarray:
    rec = np.dtype([("normal", "<f4", 3), ("verts", "<f4", (3, 3)), ("attr", "<u2")])
    body = np.frombuffer(raw, dtype=rec, count=n_tri, offset=84)
    tris = body["verts"].astype(float)
    if not np.isfinite(tris).all():
        bad = int(np.argwhere(~np.isfinite(tris.reshape(n_tri, -1)).all(axis=1))[0, 0])
        raise MeshParseError(path, 84 + 50 * bad, "non-finite vertex coordinate")
    return tris


def _parse_ascii_stl(path, raw) -> np.ndarray:
    verts = []
    offset = 0
    for line in raw.decode("latin-1").splitlines(keepends=True):
        stripped = line.strip()
        if stripped.lower().startswith("vertex"):
            parts = stripped.split()
            if len(parts) != 4:
                raise MeshParseError(path, offset, "vertex line needs 3 coordinates")
            try:
                verts.append([float(parts[1]), float(parts[2]), float(parts[3])])
            except ValueError:
                raise MeshParseError(path, offset, f"bad vertex coordinate in {stripped!r}")
        offset += len(line.encode("latin-1"))
    if len(verts) == 0:
        raise DataError(f"{path}: empty mesh: no triangles")
    if len(verts) % 3 != 0:
        raise MeshParseError(path, offset, f"vertex count {len(verts)} is not a multiple of 3")
    return np.asarray(verts, dtype=float).reshape(-1, 3, 3)


def _parse_obj(path, raw):
    vertices, faces = [], []
    offset = 0
    for lineno, line in enumerate(raw.decode("utf-8", errors="replace").splitlines(keepends=True), 1):
        stripped = line.strip()
        parts = stripped.split()
        try:
            if parts and parts[0] == "v":
                vertices.append([float(parts[1]), float(parts[2]), float(parts[3])])
            elif parts and parts[0] == "f":
                idx = [int(tok.split("/")[0]) for tok in parts[1:]]
                idx = [i - 1 if i > 0 else len(vertices) + i for i in idx]
                for k in range(1, len(idx) - 1):   # fan-triangulate polygons
                    faces.append([idx[0], idx[k], idx[k + 1]])
        except (ValueError, IndexError):
            raise MeshParseError(path, offset, f"line {lineno}: cannot parse {stripped!r}")
        offset += len(line.encode("utf-8", errors="replace"))
    if not faces:
        raise DataError(f"{path}: empty mesh: no faces")
    return np.asarray(vertices, dtype=float), np.asarray(faces, dtype=np.int64)


def _mesh_from_soup(tris: np.ndarray) -> TriangleMesh:
    flat = tris.reshape(-1, 3)
    vertices, inverse = np.unique(flat, axis=0, return_inverse=True)
    faces = inverse.reshape(-1, 3)
    return TriangleMesh.from_geometry(vertices, faces, drop_degenerate=True)


def save_mesh(path, mesh: TriangleMesh, binary: bool = True) -> None:
    """Write a mesh as STL. Binary STL stores float32; ASCII keeps full precision."""
    path = Path(path)
    f = mesh.faces
    p0, p1, p2 = mesh.vertices[f[:, 0]], mesh.vertices[f[:, 1]], mesh.vertices[f[:, 2]]
    cross = np.cross(p1 - p0, p2 - p0)
    lengths = np.linalg.norm(cross, axis=1)
    lengths[lengths == 0] = 1.0
    fn = cross / lengths[:, None]

    if binary:
        rec = np.dtype([("normal", "<f4", 3), ("verts", "<f4", (3, 3)), ("attr", "<u2")])
        body = np.zeros(len(f), dtype=rec)
        body["normal"] = fn
        body["verts"] = np.stack([p0, p1, p2], axis=1)
        header = b"cephreg binary stl".ljust(80, b" ")
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(struct.pack("<I", len(f)))
            fh.write(body.tobytes())
        return

    lines = ["solid cephreg"]
    for i in range(len(f)):
        lines.append(f"  facet normal {fn[i, 0]:.9g} {fn[i, 1]:.9g} {fn[i, 2]:.9g}")
        lines.append("    outer loop")
        for p in (p0[i], p1[i], p2[i]):
            lines.append(f"      vertex {p[0]:.17g} {p[1]:.17g} {p[2]:.17g}")
        lines.append("    endloop")
        lines.append("  endfacet")
    lines.append("endsolid cephreg")
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# contours and landmarks
# ---------------------------------------------------------------------------

def _header_lines(header) -> list:
    if not header:
        return []
    return [f"# {k} = {v}" for k, v in header.items()]


def load_contour(path) -> PointSet2D:
    """Load an ordered 2D contour. See the module docstring for the format."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"contour file not found: {path}")
    label = None
    pts = []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        if label is None:
            if not s.startswith("jaw="):
                raise DataError(f"{path}:{lineno}: expected 'jaw=upper|lower' header, got {s!r}")
            label = s[4:].strip()
            if label not in JAW_LABELS:
                raise DataError(f"{path}:{lineno}: unknown jaw label {label!r}")
            continue
        parts = s.split(",")
        if len(parts) != 2:
            raise DataError(f"{path}:{lineno}: expected 'u,v', got {s!r}")
        try:
            pts.append((float(parts[0]), float(parts[1])))
        except ValueError:
            raise DataError(f"{path}:{lineno}: non-numeric coordinate in {s!r}")
    if label is None:
        raise DataError(f"{path}: empty contour file")
    if not pts:
        raise DataError(f"{path}: contour has no points")
    return PointSet2D(np.asarray(pts), label=label, kind="cr_contour")


def save_contour(path, points: PointSet2D, header: dict = None) -> None:
    lines = _header_lines(header)
    lines.append(f"jaw={points.label}")
    for u, v in points.points:
        lines.append(f"{float(u)!r},{float(v)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_landmarks(path) -> LandmarkSet:
    """Load a landmark file (``CODE: u,v`` or ``CODE: x,y,z`` per line)."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"landmark file not found: {path}")
    entries = {}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        if ":" not in s:
            raise DataError(f"{path}:{lineno}: expected 'CODE: coords', got {s!r}")
        code, _, rest = s.partition(":")
        code = code.strip()
        if _LANDMARK_CODE_RE.match(code) is None:
            raise DataError(f"{path}:{lineno}: unknown code {code!r}")
        if code in entries:
            raise DataError(f"{path}:{lineno}: duplicate code {code!r}")
        coords = rest.strip().strip("()")
        try:
            values = [float(tok) for tok in coords.split(",")]
        except ValueError:
            raise DataError(f"{path}:{lineno}: non-numeric coordinate in {s!r}")
        if len(values) not in (2, 3):
            raise DataError(f"{path}:{lineno}: expected 2 or 3 coordinates, got {len(values)}")
        entries[code] = values
    if not entries:
        raise DataError(f"{path}: empty landmark file")
    return LandmarkSet(entries)


def save_landmarks(path, landmarks: LandmarkSet, header: dict = None) -> None:
    lines = _header_lines(header)
    for code, v in landmarks.entries.items():
        lines.append(f"{code}: " + ",".join(repr(float(x)) for x in v))
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# scalar map images (16-bit PGM)
# ---------------------------------------------------------------------------

def save_map(map2d: ScalarMap2D, path, header: dict = None) -> None:
    """Write a scalar map as 16-bit binary PGM (P5, maxval 65535).

    Values are min-max normalized to 0..65535; a constant map is written as
    all zeros. Samples are big-endian uint16, row-major, top row first.
    """
    d = map2d.data
    lo, hi = float(d.min()), float(d.max())
    if hi > lo:
        scaled = np.round((d - lo) / (hi - lo) * 65535.0).astype(">u2")
    else:
        scaled = np.zeros(d.shape, dtype=">u2")
    head = ["P5"]
    head += _header_lines(header)
    head.append(f"{map2d.width} {map2d.height}")
    head.append("65535")
    with open(path, "wb") as fh:
        fh.write(("\n".join(head) + "\n").encode("ascii"))
        fh.write(scaled.tobytes())


def load_map(path, meaning: str = "intensity") -> ScalarMap2D:
    """Read a 16-bit PGM written by :func:`save_map`. Data comes back as raw counts 0..65535."""
    raw = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        if pos >= len(raw):
            raise DataError(f"{path}: truncated PGM header")
        if raw[pos:pos + 1] == b"#":
            pos = raw.index(b"\n", pos) + 1
            continue
        if raw[pos:pos + 1].isspace():
            pos += 1
            continue
        end = pos
        while end < len(raw) and not raw[end:end + 1].isspace():
            end += 1
        tokens.append(raw[pos:end])
        pos = end
    if tokens[0] != b"P5" or tokens[3] != b"65535":
        raise DataError(f"{path}: expected 16-bit P5 PGM")
    width, height = int(tokens[1]), int(tokens[2])
    pos += 1  # single whitespace after maxval
    data = np.frombuffer(raw, dtype=">u2", count=width * height, offset=pos)
    if data.size != width * height:
        raise DataError(f"{path}: truncated PGM payload")
    return ScalarMap2D(width, height, data.reshape(height, width).astype(float), meaning=meaning)


# ---------------------------------------------------------------------------
# frame records
# ---------------------------------------------------------------------------

def save_frame(path, frame: AnatomicalFrame, header: dict = None) -> None:
    """Write a frame as 12 numbers: rotation (columns X,Y,Z) row-major, then origin."""
    values = list(frame.rotation.reshape(-1)) + list(frame.origin)
    lines = _header_lines(header)
    lines.append(" ".join(repr(float(x)) for x in values))
    Path(path).write_text("\n".join(lines) + "\n")


def load_frame(path) -> AnatomicalFrame:
    path = Path(path)
    if not path.exists():
        raise DataError(f"frame file not found: {path}")
    tokens = []
    for line in path.read_text().splitlines():
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        tokens += s.split()
    if len(tokens) != 12:
        raise DataError(f"{path}: frame record needs 12 numbers, got {len(tokens)}")
    try:
        values = np.asarray([float(t) for t in tokens])
    except ValueError:
        raise DataError(f"{path}: non-numeric frame record")
    rot = values[:9].reshape(3, 3)
    return AnatomicalFrame(rot[:, 0], rot[:, 1], rot[:, 2], values[9:])
