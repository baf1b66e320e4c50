"""Anatomical reference frame construction for dental arch meshes.

The frame is built in three steps: the vertical axis Z is the minimal-variance
PCA direction of the occlusal crown region, the anterior axis X follows the
U-shaped arch from the molar baseline toward the incisors, and the lateral
axis Y is shared between the two jaws by averaging their individual estimates.

Axis roles in the returned frame: X anterior, Y lateral (left-right),
Z vertical. The lateral projection step works in coordinates ordered
(lateral, anterior, vertical); use ``to_frame_coords(..., axes="YXZ")``
to produce them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericalError
from .mesh_model import AnatomicalFrame, TriangleMesh

_EPS = 1e-12


@dataclass(frozen=True)
class UmdaParams:
    """Tuning knobs for frame estimation.

    crown_percentile: share (percent) of vertices kept as crown candidates,
        ranked by how well their normals align with the occlusal reference.
    occlusal_reference_direction: approximate direction the occlusal surfaces
        face; scanner conventions vary, so this is configurable per jaw.
    molar_fraction: fraction of the 2D arch cloud, at each end of its first
        principal axis, averaged to locate the molar baseline endpoints.
    """

    crown_percentile: float = 20.0
    occlusal_reference_direction: tuple = (0.0, 0.0, 1.0)
    molar_fraction: float = 0.15

    def __post_init__(self):
        if not (0.0 < self.crown_percentile <= 100.0):
            raise DataError("crown_percentile must be in (0, 100]")
        if not (0.0 < self.molar_fraction < 0.5):
            raise DataError("molar_fraction must be in (0, 0.5)")
        ref = np.asarray(self.occlusal_reference_direction, dtype=float).reshape(3)
        n = np.linalg.norm(ref)
        if not np.isfinite(ref).all() or n < _EPS:
            raise DataError("occlusal_reference_direction must be a nonzero vector")
        object.__setattr__(self, "occlusal_reference_direction", tuple(ref / n))

    @property
    def reference(self) -> np.ndarray:
        return np.asarray(self.occlusal_reference_direction)


@dataclass(frozen=True)
class ArchFit:
    """2D arch fit: molar baseline, its midpoint, incisal reference, anterior direction."""

    baseline_b: np.ndarray   # unit 2D, molar-to-molar
    midpoint_m: np.ndarray   # 2D
    incisal_f: np.ndarray    # 2D
    x2d: np.ndarray          # unit 2D, anterior, orthogonal to baseline_b

    def __post_init__(self):
        for name in ("baseline_b", "midpoint_m", "incisal_f", "x2d"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(2))
        if abs(float(self.x2d @ self.baseline_b)) > 1e-6:
            raise NumericalError("anterior direction not orthogonal to molar baseline")


def centroid(mesh) -> np.ndarray:
    """Arithmetic mean of the mesh vertices (accepts a mesh or a bare (N, 3) array)."""
    v = mesh.vertices if isinstance(mesh, TriangleMesh) else np.asarray(mesh, dtype=float)
    v = v.reshape(-1, 3)
    if len(v) == 0:
        raise DataError("empty mesh")
    return v.mean(axis=0)


def crown_candidates(mesh: TriangleMesh, params: UmdaParams = UmdaParams()) -> np.ndarray:
    """Indices of the top crown_percentile vertices by normal alignment with the reference.

    Vertices whose score ties the cutoff (within 1e-9) are all kept, so meshes
    with repeated geometry select symmetrically instead of by vertex order.
    """
    scores = mesh.normals @ params.reference
    k = max(3, int(np.ceil(len(scores) * params.crown_percentile / 100.0)))
    k = min(k, len(scores))
    order = np.argsort(-scores, kind="stable")
    cutoff = scores[order[k - 1]]
    return np.flatnonzero(scores >= cutoff - 1e-9)


def estimate_vertical_axis(mesh: TriangleMesh, params: UmdaParams = UmdaParams()) -> np.ndarray:
    """Vertical axis: minimal-variance PCA direction of the crown candidate positions.

    The sign is chosen so the axis points along the occlusal reference.
    Raises NumericalError when the candidate cloud is (near) collinear.
    """
    idx = crown_candidates(mesh, params)
    pts = mesh.vertices[idx]
    if len(pts) < 3:
        raise NumericalError("crown region degenerate: fewer than 3 candidates")
    centered = pts - pts.mean(axis=0)
    cov = centered.T @ centered / len(pts)
    evals, evecs = np.linalg.eigh(cov)    # ascending eigenvalues
    if evals[1] <= 1e-9 * max(evals[2], _EPS):
        raise NumericalError("crown region degenerate: candidate cloud is collinear")
    z = evecs[:, 0]
    if z @ params.reference < 0:
        z = -z
    return z / np.linalg.norm(z)


def _plane_basis(z: np.ndarray) -> np.ndarray:
    """Fixed orthonormal pair spanning the plane orthogonal to z, as a (3, 2) matrix."""
    seed = np.zeros(3)
    seed[int(np.argmin(np.abs(z)))] = 1.0
    u1 = seed - (seed @ z) * z
    u1 /= np.linalg.norm(u1)
    u2 = np.cross(z, u1)
    return np.column_stack([u1, u2])


def fit_arch(mesh: TriangleMesh, z: np.ndarray, params: UmdaParams = UmdaParams()) -> ArchFit:
    """Fit the U-shaped arch in the plane orthogonal to the vertical axis.

    Crown candidates are projected to 2D; the molar baseline endpoints are the
    means of the two extreme tails along the first principal axis, and the
    incisal reference is the candidate farthest from the baseline midpoint on
    the far side of the cloud mean. The anterior direction is the incisal
    offset with its baseline component removed.
    """
    z = np.asarray(z, dtype=float).reshape(3)
    idx = crown_candidates(mesh, params)
    basis = _plane_basis(z)
    pts2d = (mesh.vertices[idx] - mesh.vertices[idx].mean(axis=0)) @ basis

    centered = pts2d - pts2d.mean(axis=0)
    cov = centered.T @ centered / len(pts2d)
    evals, evecs = np.linalg.eigh(cov)
    if evals[0] <= 1e-9 * max(evals[1], _EPS) or evals[1] <= _EPS:
        raise NumericalError("arch cloud rank-deficient")
    pc1 = evecs[:, 1]                       # largest spread: molar-to-molar

    proj = pts2d @ pc1
    order = np.argsort(proj, kind="stable")
    n_tail = max(1, int(round(len(pts2d) * params.molar_fraction)))
    lo_end = pts2d[order[:n_tail]].mean(axis=0)
    hi_end = pts2d[order[-n_tail:]].mean(axis=0)
    span = hi_end - lo_end
    norm = np.linalg.norm(span)
    if norm < _EPS:
        raise NumericalError("arch cloud rank-deficient: molar endpoints coincide")
    b = span / norm
    m = 0.5 * (lo_end + hi_end)

    mean2d = pts2d.mean(axis=0)
    anterior = mean2d - m
    anterior_norm = np.linalg.norm(anterior)
    if anterior_norm < 1e-9 * max(norm, 1.0):
        raise NumericalError("arch anterior direction degenerate (no U shape)")
    anterior /= anterior_norm
    beyond = (pts2d - mean2d) @ anterior > 0
    candidates = pts2d[beyond] if beyond.any() else pts2d
    f = candidates[int(np.argmax(np.linalg.norm(candidates - m, axis=1)))]

    w = f - m
    x2d = w - (w @ b) * b
    n = np.linalg.norm(x2d)
    if n < _EPS:
        raise NumericalError("arch anterior direction degenerate (aligned with baseline)")
    return ArchFit(b, m, f, x2d / n)


def jaw_axes(mesh: TriangleMesh, params: UmdaParams = UmdaParams()):
    """Per-jaw axes (X0 anterior, Y0 lateral, Z vertical) and the centroid origin.

    X0 is back-projected from the 2D arch fit, orthogonalized against Z, and
    re-normalized via Y0 x Z so the triple is exactly orthonormal.
    """
    z = estimate_vertical_axis(mesh, params)
    arch = fit_arch(mesh, z, params)
    basis = _plane_basis(z)
    x0 = basis @ arch.x2d
    x0 /= np.linalg.norm(x0)
    y0 = np.cross(z, x0)
    y0 /= np.linalg.norm(y0)
    x0 = np.cross(y0, z)
    x0 /= np.linalg.norm(x0)
    return x0, y0, z, centroid(mesh)


def single_jaw_frame(mesh: TriangleMesh, params: UmdaParams = UmdaParams()) -> AnatomicalFrame:
    """Frame for one jaw in isolation (no cross-jaw lateral averaging)."""
    x0, y0, z, origin = jaw_axes(mesh, params)
    return AnatomicalFrame(x0, y0, z, origin)


def shared_frame(upper_axes, lower_axes):
    """Couple the two jaws through a shared lateral axis.

    The per-jaw lateral axes are averaged (the lower one is flipped first if
    it points the opposite way), then each jaw's X is recomputed as
    unit(Y_shared x Z) and its Z is re-completed as X x Y_shared so both
    frames are exactly orthonormal with identical Y. The Z adjustment is
    second order in the angle between the two lateral estimates.
    """
    x_up, y_up, z_up, o_up = (np.asarray(v, dtype=float) for v in upper_axes)
    x_lo, y_lo, z_lo, o_lo = (np.asarray(v, dtype=float) for v in lower_axes)
    if y_up @ y_lo < 0:
        y_lo = -y_lo
    if y_up @ y_lo <= -0.999:
        raise NumericalError("irreconcilable lateral axes between jaws")
    y_sum = y_up + y_lo
    n = np.linalg.norm(y_sum)
    if n < 1e-6:
        raise NumericalError("irreconcilable lateral axes between jaws")
    y_sh = y_sum / n

    frames = []
    for z, origin in ((z_up, o_up), (z_lo, o_lo)):
        x = np.cross(y_sh, z)
        xn = np.linalg.norm(x)
        if xn < 1e-6:
            raise NumericalError("shared lateral axis parallel to a vertical axis")
        x /= xn
        z_new = np.cross(x, y_sh)      # exactly unit: x is orthogonal to y_sh
        frames.append(AnatomicalFrame(x, y_sh, z_new, origin))
    return frames[0], frames[1]


_AXIS_INDEX = {"X": 0, "Y": 1, "Z": 2}


def _frame_matrix(frame: AnatomicalFrame, axes: str) -> np.ndarray:
    if len(axes) != 3 or set(axes.upper()) != {"X", "Y", "Z"}:
        raise DataError(f"axes must be a permutation of 'XYZ', got {axes!r}")
    cols = [frame.rotation[:, _AXIS_INDEX[c]] for c in axes.upper()]
    return np.column_stack(cols)


def points_to_frame(points, frame: AnatomicalFrame, axes: str = "XYZ") -> np.ndarray:
    """Express 3D points in frame coordinates, with an optional axis reordering.

    ``axes`` selects the output component order; "YXZ" yields
    (lateral, anterior, vertical), the order the lateral projection expects.
    """
    mat = _frame_matrix(frame, axes)
    return (np.asarray(points, dtype=float).reshape(-1, 3) - frame.origin) @ mat


def to_frame_coords(mesh: TriangleMesh, frame: AnatomicalFrame, axes: str = "XYZ") -> TriangleMesh:
    """Rigidly re-express a mesh in frame coordinates (normals rotated, areas kept)."""
    mat = _frame_matrix(frame, axes)
    return TriangleMesh(
        (mesh.vertices - frame.origin) @ mat,
        mesh.normals @ mat,
        mesh.faces,
        mesh.per_vertex_area,
    )
