"""Curve-level and landmark-level evaluation in pixels.

Field names in reports are fixed: chamfer_bidir_mean, hausdorff_sym,
ios_to_cr_mean, cr_to_ios_mean, lm_mean, lm_rmse, lm_std,
lm_group_{inc_can,prem,molar}.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DataError
from .mesh_model import (
    GROUP_INCISOR_CANINE, GROUP_MOLAR, GROUP_PREMOLAR,
    DetectorGeometry, LandmarkSet, PointSet2D, landmark_group,
)
from .registration import SimilarityTransform2D, apply_similarity
from .surface_drr import project_points

GROUP_FIELDS = {
    GROUP_INCISOR_CANINE: "lm_group_inc_can",
    GROUP_PREMOLAR: "lm_group_prem",
    GROUP_MOLAR: "lm_group_molar",
}


def _pts(a) -> np.ndarray:
    p = a.points if isinstance(a, PointSet2D) else np.asarray(a, dtype=float)
    p = p.reshape(-1, 2)
    if len(p) == 0:
        raise DataError("metric requires a nonempty point set")
    return p


def directed_mean(a, b) -> float:
    """Mean over a of the distance to the nearest point of b."""
    pa, pb = _pts(a), _pts(b)
    return float(cKDTree(pb).query(pa)[0].mean())


def chamfer_metric(a, b) -> float:
    """Average of the two directed means (half the Chamfer loss)."""
    return 0.5 * (directed_mean(a, b) + directed_mean(b, a))


def hausdorff(a, b):
    """Directed Hausdorff distances (a->b, b->a) and their maximum."""
    pa, pb = _pts(a), _pts(b)
    d_ab = float(cKDTree(pb).query(pa)[0].max())
    d_ba = float(cKDTree(pa).query(pb)[0].max())
    return d_ab, d_ba, max(d_ab, d_ba)


@dataclass(frozen=True)
class LandmarkReport:
    per_code: dict              # code -> pixel error
    mean: float
    rmse: float
    std: float                  # population std, so rmse^2 = mean^2 + std^2
    group_means: dict           # group name -> mean or nan

    def to_dict(self) -> dict:
        out = {"lm_mean": self.mean, "lm_rmse": self.rmse, "lm_std": self.std}
        for group, field in GROUP_FIELDS.items():
            out[field] = self.group_means.get(group, math.nan)
        return out


def evaluate_landmarks(mesh_landmarks_3d: LandmarkSet, transform: SimilarityTransform2D,
                       geom: DetectorGeometry, cr_landmarks_2d: LandmarkSet) -> LandmarkReport:
    """Per-landmark pixel error between projected+transformed 3D landmarks and CR landmarks.

    The 3D landmarks must be in projection coordinates (lateral, anterior,
    vertical); they are perspective-projected, mapped by the similarity
    transform, and compared code-by-code against the 2D set.
    """
    if mesh_landmarks_3d.dim != 3:
        raise DataError("mesh landmarks must be 3D")
    if cr_landmarks_2d.dim != 2:
        raise DataError("CR landmarks must be 2D")
    common = [c for c in mesh_landmarks_3d.entries if c in cr_landmarks_2d.entries]
    if not common:
        raise DataError("no landmark codes in common")

    pts3d = np.stack([mesh_landmarks_3d.entries[c] for c in common])
    _, uv, _ = project_points(pts3d, geom)
    mapped = apply_similarity(transform, uv)
    ref = np.stack([cr_landmarks_2d.entries[c] for c in common])
    errors = np.linalg.norm(mapped - ref, axis=1)

    per_code = {c: float(e) for c, e in zip(common, errors)}
    mean = float(errors.mean())
    rmse = float(np.sqrt((errors ** 2).mean()))
    std = float(errors.std())
    group_means = {}
    for group in (GROUP_INCISOR_CANINE, GROUP_PREMOLAR, GROUP_MOLAR):
        sel = [e for c, e in per_code.items() if landmark_group(c) == group]
        group_means[group] = float(np.mean(sel)) if sel else math.nan
    return LandmarkReport(per_code, mean, rmse, std, group_means)


@dataclass(frozen=True)
class MetricsReport:
    """Curve metrics for one jaw, with an optional landmark block."""

    chamfer_bidir_mean: float
    hausdorff_sym: float
    ios_to_cr_mean: float
    cr_to_ios_mean: float
    hausdorff_ios_to_cr: float
    hausdorff_cr_to_ios: float
    landmarks: LandmarkReport = None

    def to_dict(self) -> dict:
        out = {
            "chamfer_bidir_mean": self.chamfer_bidir_mean,
            "hausdorff_sym": self.hausdorff_sym,
            "ios_to_cr_mean": self.ios_to_cr_mean,
            "cr_to_ios_mean": self.cr_to_ios_mean,
        }
        if self.landmarks is not None:
            out.update(self.landmarks.to_dict())
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def format_text(self) -> str:
        lines = [f"{k} = {v!r}" for k, v in self.to_dict().items()]
        return "\n".join(lines)


def full_report(cr_contour, ios_sil_transformed, mesh_landmarks_3d: LandmarkSet = None,
                transform: SimilarityTransform2D = None, geom: DetectorGeometry = None,
                cr_landmarks_2d: LandmarkSet = None) -> MetricsReport:
    """All curve metrics between the transformed silhouette and the CR contour.

    The landmark block is filled when all three of (3D landmarks, transform,
    geometry, CR landmarks) are supplied.
    """
    ios = _pts(ios_sil_transformed)
    cr = _pts(cr_contour)
    d_ic = directed_mean(ios, cr)
    d_ci = directed_mean(cr, ios)
    h_ic, h_ci, h_sym = hausdorff(ios, cr)
    lm = None
    if mesh_landmarks_3d is not None and cr_landmarks_2d is not None:
        if transform is None or geom is None:
            raise DataError("landmark evaluation needs a transform and detector geometry")
        lm = evaluate_landmarks(mesh_landmarks_3d, transform, geom, cr_landmarks_2d)
    return MetricsReport(0.5 * (d_ic + d_ci), h_sym, d_ic, d_ci, h_ic, h_ci, lm)
