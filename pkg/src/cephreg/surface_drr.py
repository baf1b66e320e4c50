"""Perspective projection of surface meshes onto a detector, with Gaussian splatting.

The mesh is treated as a hollow shell of uniform density: every vertex
contributes its lumped surface area to an equivalent thickness map on the
detector plane through a truncated Gaussian kernel. Intensity follows an
exponential attenuation of the thickness. The silhouette is the outer
boundary of the thresholded thickness map.

Projection coordinates are (x, y, z) = (lateral ray axis, detector horizontal,
detector vertical); see ``umda_frame.to_frame_coords(..., axes="YXZ")``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from skimage import measure

from .errors import DataError, NumericalError
from .mesh_model import DetectorGeometry, PointSet2D, ScalarMap2D, TriangleMesh

__all__ = [
    "SplatParams", "ProjectedPoints", "ScalarMap2D",
    "project_points", "project_vertices", "splat", "intensity", "extract_silhouette",
]


@dataclass(frozen=True)
class SplatParams:
    """Rendering parameters: shell density, attenuation, and splat kernel shape."""

    rho0: float = 1.0                      # uniform shell density
    mu0: float = 0.02                      # effective attenuation per unit thickness
    i0: float = 1.0                        # unattenuated intensity
    sigma_px: float = 1.5                  # Gaussian splat width, pixels
    kernel_truncation_radius: float = 3.0  # in multiples of sigma

    def __post_init__(self):
        for name in ("rho0", "mu0", "i0", "sigma_px", "kernel_truncation_radius"):
            if getattr(self, name) <= 0:
                raise DataError(f"SplatParams.{name} must be positive")


@dataclass(frozen=True)
class ProjectedPoints:
    """Vertices projected to the detector: millimeter and pixel coordinates, weights."""

    det_y: np.ndarray     # (N,) detector-plane horizontal, mm
    det_z: np.ndarray     # (N,) detector-plane vertical, mm
    u: np.ndarray         # (N,) pixel column coordinate
    v: np.ndarray         # (N,) pixel row coordinate
    weight: np.ndarray    # (N,) density * lumped area
    visible: np.ndarray   # (N,) bool, inside the detector image

    def __len__(self) -> int:
        return len(self.u)


def project_points(points, geom: DetectorGeometry):
    """Perspective-project (x, y, z) points; returns (yz_mm (N,2), uv_px (N,2), t (N,)).

    The magnification is t = (detector_x - source_x) / (x - source_x), so
    detector coordinates are (t*y, t*z). Points at or behind the source
    (t <= 0 or x == source_x) raise NumericalError.
    """
    p = np.asarray(points, dtype=float).reshape(-1, 3)
    denom = p[:, 0] - geom.source_x
    bad = denom <= 0
    if bad.any():
        raise NumericalError(f"{int(bad.sum())} points at or behind the X-ray source")
    t = (geom.detector_x - geom.source_x) / denom
    yz = p[:, 1:] * t[:, None]
    ou, ov = geom.detector_origin_uv
    uv = np.column_stack([yz[:, 0] / geom.pixel_spacing + ou,
                          yz[:, 1] / geom.pixel_spacing + ov])
    return yz, uv, t


def project_vertices(mesh: TriangleMesh, geom: DetectorGeometry, rho0: float = 1.0,
                     midpoint_supersample: bool = False) -> ProjectedPoints:
    """Project mesh vertices to the detector with density-scaled area weights.

    With ``midpoint_supersample`` each face additionally contributes a point at
    its centroid; the face area is then split half to the centroid and half
    lumped to the corners, keeping the total splat mass equal to rho0 * area.
    """
    pts = mesh.vertices
    weights = rho0 * mesh.per_vertex_area
    if midpoint_supersample:
        f = mesh.faces
        corners = (pts[f[:, 0]], pts[f[:, 1]], pts[f[:, 2]])
        face_area = 0.5 * np.linalg.norm(np.cross(corners[1] - corners[0],
                                                  corners[2] - corners[0]), axis=1)
        mids = (corners[0] + corners[1] + corners[2]) / 3.0
        pts = np.vstack([pts, mids])
        weights = np.concatenate([0.5 * weights, 0.5 * rho0 * face_area])
    yz, uv, _ = project_points(pts, geom)
    visible = ((uv[:, 0] >= 0) & (uv[:, 0] < geom.image_width)
               & (uv[:, 1] >= 0) & (uv[:, 1] < geom.image_height))
    return ProjectedPoints(yz[:, 0], yz[:, 1], uv[:, 0], uv[:, 1], weights, visible)


def splat(projections: ProjectedPoints, geom: DetectorGeometry,
          params: SplatParams = SplatParams()) -> ScalarMap2D:
    """Accumulate projected points into a thickness map with truncated Gaussian kernels.

    Each point adds weight * exp(-r^2 / (2 sigma^2)) to every pixel within the
    truncation radius. Accumulation is a plain sum, so the result is
    order-independent up to float round-off (about 1e-9 relative).
    """
    h, w = geom.image_height, geom.image_width
    grid = np.zeros((h, w))
    n = len(projections)
    if n == 0:
        return ScalarMap2D(w, h, grid, meaning="thickness")

    sigma = params.sigma_px
    radius = params.kernel_truncation_radius * sigma
    r_int = int(np.ceil(radius))
    u, v, wgt = projections.u, projections.v, projections.weight
    iu = np.floor(u).astype(np.int64)
    iv = np.floor(v).astype(np.int64)
    inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma)
    r2_max = radius * radius

    for dv in range(-r_int, r_int + 2):
        pv = iv + dv
        dz2 = (pv - v) ** 2
        for du in range(-r_int, r_int + 2):
            pu = iu + du
            r2 = (pu - u) ** 2 + dz2
            ok = (r2 <= r2_max) & (pu >= 0) & (pu < w) & (pv >= 0) & (pv < h)
            if not ok.any():
                continue
            np.add.at(grid, (pv[ok], pu[ok]), wgt[ok] * np.exp(-r2[ok] * inv_two_sigma2))
    return ScalarMap2D(w, h, grid, meaning="thickness")


def intensity(thickness_map: ScalarMap2D, params: SplatParams = SplatParams()) -> ScalarMap2D:
    """Exponential attenuation of the thickness map: I = i0 * exp(-mu0 * L)."""
    if (thickness_map.data < 0).any():
        raise DataError("thickness map must be nonnegative")
    data = params.i0 * np.exp(-params.mu0 * thickness_map.data)
    return ScalarMap2D(thickness_map.width, thickness_map.height, data, meaning="intensity")


def extract_silhouette(thickness_map: ScalarMap2D, threshold_fraction: float = 0.05,
                       target_count: int = None, label: str = "upper") -> PointSet2D:
    """Outer boundary of the largest connected blob of the thresholded thickness map.

    The map is binarized at threshold_fraction of its maximum (so the result
    is invariant to uniform density rescaling), the largest 8-connected
    component is kept, and its outer boundary is traced at subpixel accuracy
    with marching squares. When ``target_count`` is given the closed boundary
    is resampled to exactly that many points, uniformly by arc length.
    """
    data = thickness_map.data
    peak = float(data.max())
    if peak <= 0:
        raise DataError("cannot extract a silhouette from an all-zero map")
    mask = data >= threshold_fraction * peak

    labels, n_comp = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    if n_comp == 0:
        raise DataError("thresholded map is empty")
    sizes = ndimage.sum_labels(np.ones_like(labels), labels, index=np.arange(1, n_comp + 1))
    biggest = (labels == (1 + int(np.argmax(sizes))))

    padded = np.zeros((biggest.shape[0] + 2, biggest.shape[1] + 2))
    padded[1:-1, 1:-1] = biggest
    contours = measure.find_contours(padded, 0.5)
    if not contours:
        raise DataError("no boundary found in thresholded map")

    def loop_area(c):
        x, y = c[:, 1], c[:, 0]
        return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))

    boundary = max(contours, key=loop_area) - 1.0   # undo padding offset
    points = boundary[:, ::-1]                      # (row, col) -> (u, v)
    if target_count is not None:
        points = _resample_closed(points, int(target_count))
    return PointSet2D(points, label=label, kind="ios_silhouette")


def _resample_closed(points: np.ndarray, count: int) -> np.ndarray:
    """Resample a closed polyline to ``count`` points, uniform in arc length."""
    if count < 1:
        raise DataError("target_count must be >= 1")
    closed = points if np.allclose(points[0], points[-1]) else np.vstack([points, points[0]])
    seg = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    total = arc[-1]
    if total <= 0:
        return np.repeat(points[:1], count, axis=0)
    targets = np.arange(count) * total / count
    return np.column_stack([np.interp(targets, arc, closed[:, 0]),
                            np.interp(targets, arc, closed[:, 1])])
