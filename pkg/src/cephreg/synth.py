"""Synthetic dental arch generator and ground-truth registration cases.

Arches are U-shaped rows of box-shaped teeth capped with hemispherical cusps,
placed along a superellipse (square, ovoid, or tapered family) symmetric about
the world Y axis, crowns facing +Z, incisors toward +Y. The analytic frame
(X anterior = +Y world, Z vertical = +Z world) is returned alongside the mesh
so frame estimation can be validated, and cusp apexes provide exact 3D
landmarks.

A registration case renders the silhouette of a frame-aligned mesh, applies a
known similarity transform to produce the "radiograph" contour (optionally
jittered), and carries the matching landmark pairs, so the recovered transform
can be scored against the truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .mesh_model import (
    AnatomicalFrame, DetectorGeometry, LandmarkSet, PointSet2D, TriangleMesh,
)
from .registration import SimilarityTransform2D, apply_similarity
from .surface_drr import SplatParams, extract_silhouette, project_points, project_vertices, splat
from .umda_frame import UmdaParams

ARCH_TYPES = ("square", "ovoid", "tapered")

# Generated arches are almost all crown surface (no gingival walls), so a
# smaller crown percentile matches their composition than the clinical default.
UMDA_PARAMS = UmdaParams(crown_percentile=10.0)

# superellipse exponent and half-width/depth scale per arch family
_ARCH_SHAPE = {
    "square": (3.5, 1.05, 0.92),
    "ovoid": (2.0, 1.0, 1.0),
    "tapered": (1.6, 0.88, 1.08),
}


@dataclass(frozen=True)
class SyntheticArch:
    mesh: TriangleMesh
    frame: AnatomicalFrame      # analytic truth: X anterior, Y lateral, Z vertical
    landmarks: LandmarkSet      # 3D cusp apexes, world coordinates
    arch_type: str
    n_teeth: int
    seed: int


@dataclass(frozen=True)
class SyntheticCase:
    silhouette: PointSet2D          # projected arch outline, detector pixels
    cr_contour: PointSet2D          # silhouette under the true transform (+noise)
    cr_landmarks: LandmarkSet       # 2D, true-transform images of projected landmarks
    ios_landmarks: LandmarkSet      # 3D, projection-frame coordinates
    true_transform: SimilarityTransform2D
    noise_px: float


# ---------------------------------------------------------------------------
# mesh primitives
# ---------------------------------------------------------------------------

def _quad_patch(origin, eu, ev, nu, nv, base):
    verts = []
    for j in range(nv + 1):
        for i in range(nu + 1):
            verts.append(origin + eu * (i / nu) + ev * (j / nv))
    faces = []
    for j in range(nv):
        for i in range(nu):
            a = base + j * (nu + 1) + i
            b, c, d = a + 1, a + nu + 1, a + nu + 2
            faces += [[a, b, d], [a, d, c]]
    return verts, faces


_TARGET_EDGE = 1.2      # mm; keeps per-vertex splat weights comparable across the mesh


def _subdiv(length: float) -> int:
    return max(2, int(round(length / _TARGET_EDGE)))


def _box(center2d, tangent, width, depth, height, base):
    """Open-top box standing on z=0: four subdivided sides and a bottom."""
    t = np.array([tangent[0], tangent[1], 0.0])
    n = np.array([-tangent[1], tangent[0], 0.0])
    up = np.array([0.0, 0.0, 1.0])
    c = np.array([center2d[0], center2d[1], 0.0])
    hw, hd = 0.5 * width, 0.5 * depth
    corners = [c - t * hw - n * hd, c + t * hw - n * hd,
               c + t * hw + n * hd, c - t * hw + n * hd]
    verts, faces = [], []
    for k in range(4):
        p, q = corners[k], corners[(k + 1) % 4]
        v, f = _quad_patch(p, q - p, up * height, _subdiv(np.linalg.norm(q - p)),
                           _subdiv(height), base + len(verts))
        verts += v
        faces += f
    # bottom winds downward so its outward normal points away from the crowns
    v, f = _quad_patch(corners[0], corners[3] - corners[0], corners[1] - corners[0],
                       _subdiv(depth), _subdiv(width), base + len(verts))
    verts += v
    faces += f
    return verts, faces


def _hemisphere(center3d, radius, base, n_rings=4, n_sectors=12):
    verts, faces = [], []
    for k in range(n_rings):
        elev = 0.5 * math.pi * k / n_rings
        rz = radius * math.sin(elev)
        rr = radius * math.cos(elev)
        for j in range(n_sectors):
            ang = 2.0 * math.pi * j / n_sectors
            verts.append(center3d + np.array([rr * math.cos(ang), rr * math.sin(ang), rz]))
    apex = len(verts)
    verts.append(center3d + np.array([0.0, 0.0, radius]))
    for k in range(n_rings - 1):
        for j in range(n_sectors):
            a = base + k * n_sectors + j
            b = base + k * n_sectors + (j + 1) % n_sectors
            c = a + n_sectors
            d = b + n_sectors
            faces += [[a, b, d], [a, d, c]]
    top = base + (n_rings - 1) * n_sectors
    for j in range(n_sectors):
        faces.append([top + j, top + (j + 1) % n_sectors, base + apex])
    return verts, faces


def _superellipse_point(phi, a, b, exponent):
    c, s = math.cos(phi), math.sin(phi)
    x = a * math.copysign(abs(c) ** (2.0 / exponent), c)
    y = b * abs(s) ** (2.0 / exponent)
    return np.array([x, y])


# tooth footprint by position from the midline: (width, depth)
_TOOTH_DIMS = {1: (5.5, 6.5), 2: (5.0, 6.5), 3: (6.0, 7.0), 4: (6.5, 8.0),
               5: (6.5, 8.5), 6: (9.5, 10.0), 7: (9.0, 10.0)}
_APEX_HEIGHT = 10.5     # cusp tips are nearly coplanar; bases follow the arch curve
_LANDMARK_SUFFIX = {1: ("tip",), 2: ("tip",), 3: ("cusp",), 4: ("cusp",),
                    5: ("cusp",), 6: ("MB", "DB"), 7: ("MB",)}


def make_arch_mesh(arch_type: str, n_teeth: int, seed: int, jaw: str = "upper") -> SyntheticArch:
    """Build a U-shaped arch of n_teeth teeth with its analytic frame and landmarks.

    ``n_teeth`` must be even, between 4 and 14 (up to 7 per side). Teeth sit at
    uniform arc-length positions along the superellipse; the tooth at each
    position takes the size profile of its distance from the midline. A small
    seeded jitter varies placement and crown height between cases.
    """
    if arch_type not in ARCH_TYPES:
        raise DataError(f"unknown arch type {arch_type!r}; pick one of {ARCH_TYPES}")
    if n_teeth <= 0:
        raise DataError("n_teeth must be positive")
    if n_teeth % 2 != 0 or not (4 <= n_teeth <= 14):
        raise DataError("n_teeth must be even and between 4 and 14")
    if jaw not in ("upper", "lower"):
        raise DataError(f"unknown jaw {jaw!r}")

    rng = np.random.default_rng(seed)
    exponent, wscale, dscale = _ARCH_SHAPE[arch_type]
    half_width = wscale * rng.uniform(24.0, 30.0)
    depth = dscale * rng.uniform(38.0, 48.0)
    spee = rng.uniform(2.0, 3.5)    # occlusal curve: posterior teeth sit higher

    # arc-length positions along the curve from right molar (phi=0) to left molar (phi=pi)
    phis = np.linspace(0.0, math.pi, 721)
    curve = np.array([_superellipse_point(p, half_width, depth, exponent) for p in phis])
    seg = np.linalg.norm(np.diff(curve, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    targets = (np.arange(n_teeth) + 0.5) * arc[-1] / n_teeth
    tooth_phi = np.interp(targets, arc, phis)

    per_side = n_teeth // 2
    verts, faces = [], []
    landmark_entries = {}
    prefix = "UR" if jaw == "upper" else "LR"

    for i, phi in enumerate(tooth_phi):
        center = _superellipse_point(phi, half_width, depth, exponent)
        center = center + rng.uniform(-0.15, 0.15, size=2)
        step = _superellipse_point(min(phi + 1e-4, math.pi), half_width, depth, exponent) \
            - _superellipse_point(max(phi - 1e-4, 0.0), half_width, depth, exponent)
        tangent = step / np.linalg.norm(step)

        # position from the midline: right side counts down to the front
        if i < per_side:
            position = per_side - i
            mesial = tangent            # toward the incisors on the right side
            on_right = True
        else:
            position = i - per_side + 1
            mesial = -tangent
            on_right = False
        width, dep = _TOOTH_DIMS[min(position, 7)]
        cusp_r = 0.35 * width if position >= 6 else 0.42 * width
        base_z = -spee * abs(math.cos(phi))     # posterior bases sit deeper
        apex_z = _APEX_HEIGHT + rng.uniform(-0.4, 0.4)
        height = apex_z - cusp_r - base_z

        v, f = _box(center, tangent, width, dep, height, len(verts))
        verts += [p + np.array([0.0, 0.0, base_z]) for p in v]
        faces += f

        top = np.array([center[0], center[1], base_z + height])
        if position >= 6:
            centers = [top + np.array([*(mesial[:2] * 0.22 * width), 0.0]),
                       top - np.array([*(mesial[:2] * 0.22 * width), 0.0])]
        else:
            centers = [top]
        apexes = []
        for cc in centers:
            v, f = _hemisphere(cc, cusp_r, len(verts))
            verts += v
            faces += f
            apexes.append(cc + np.array([0.0, 0.0, cusp_r]))

        if on_right and position <= 7:
            for suffix, apex in zip(_LANDMARK_SUFFIX[position], apexes):
                landmark_entries[f"{prefix}{position}_{suffix}"] = apex

    mesh = TriangleMesh.from_geometry(np.asarray(verts), np.asarray(faces))
    frame = AnatomicalFrame((0.0, 1.0, 0.0), (-1.0, 0.0, 0.0), (0.0, 0.0, 1.0),
                            mesh.vertices.mean(axis=0))
    return SyntheticArch(mesh, frame, LandmarkSet(landmark_entries), arch_type, n_teeth, seed)


# ---------------------------------------------------------------------------
# ground-truth cases
# ---------------------------------------------------------------------------

def sample_true_transform(rng: np.random.Generator, geom: DetectorGeometry,
                          silhouette_centroid) -> SimilarityTransform2D:
    """Draw a ground-truth transform: s in [0.8, 1.3], rotation within 10 degrees,
    translation placing the mapped silhouette centroid inside the central half
    of the image (consistent with clinical magnification, SID/SOD > 1)."""
    s = rng.uniform(0.8, 1.3)
    theta = math.radians(rng.uniform(-10.0, 10.0))
    w, h = geom.image_width, geom.image_height
    target = np.array([rng.uniform(0.25 * w, 0.75 * w), rng.uniform(0.25 * h, 0.75 * h)])
    probe = SimilarityTransform2D(s, theta, 0.0, 0.0)
    t = target - apply_similarity(probe, np.asarray(silhouette_centroid))
    return SimilarityTransform2D(s, theta, t[0], t[1])


def make_case(mesh_in_frame: TriangleMesh, landmarks_in_frame: LandmarkSet,
              geom: DetectorGeometry, true_transform: SimilarityTransform2D,
              cr_noise_px: float, seed: int, splat_params: SplatParams = SplatParams(),
              threshold_fraction: float = 0.05, target_count: int = 441,
              cr_point_count: int = None, cr_arc_fraction: float = 1.0,
              label: str = "upper") -> SyntheticCase:
    """Render the silhouette and synthesize a matching radiograph contour.

    The mesh and landmarks must already be in projection coordinates. The
    contour is the transformed silhouette, optionally reduced to a contiguous
    arc (``cr_arc_fraction`` of the closed loop, centered on its lowest image
    point, mimicking a partial clinical annotation), subsampled to
    ``cr_point_count`` points, and jittered with per-point Gaussian noise of
    ``cr_noise_px`` pixels. With the defaults and zero noise the Chamfer loss
    at the true transform is exactly zero.
    """
    rng = np.random.default_rng(seed)
    proj = project_vertices(mesh_in_frame, geom, rho0=splat_params.rho0)
    thickness = splat(proj, geom, splat_params)
    sil = extract_silhouette(thickness, threshold_fraction, target_count, label=label)

    cr_pts = apply_similarity(true_transform, sil.points)
    if not (0.0 < cr_arc_fraction <= 1.0):
        raise DataError("cr_arc_fraction must be in (0, 1]")
    if cr_arc_fraction < 1.0:
        n = len(cr_pts)
        k = max(2, int(round(cr_arc_fraction * n)))
        center = int(np.argmax(cr_pts[:, 1]))
        cr_pts = cr_pts[(np.arange(k) + center - k // 2) % n]
    if cr_point_count is not None and cr_point_count < len(cr_pts):
        idx = np.linspace(0, len(cr_pts) - 1, cr_point_count).astype(int)
        cr_pts = cr_pts[idx]
    if cr_noise_px > 0:
        cr_pts = cr_pts + rng.normal(0.0, cr_noise_px, size=cr_pts.shape)
    cr_contour = PointSet2D(cr_pts, label=label, kind="cr_contour")

    if landmarks_in_frame.dim != 3:
        raise DataError("case landmarks must be 3D (projection frame)")
    codes = landmarks_in_frame.codes()
    pts3d = np.stack([landmarks_in_frame.entries[c] for c in codes])
    _, uv, _ = project_points(pts3d, geom)
    mapped = apply_similarity(true_transform, uv)
    cr_landmarks = LandmarkSet({c: mapped[k] for k, c in enumerate(codes)})
    return SyntheticCase(sil, cr_contour, cr_landmarks, landmarks_in_frame,
                         true_transform, cr_noise_px)
