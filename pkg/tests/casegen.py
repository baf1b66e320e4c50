"""Shared builders for synthetic registration cases used across test modules."""

import numpy as np

import cephreg as cr
from cephreg.synth import UMDA_PARAMS
from cephreg.umda_frame import points_to_frame, single_jaw_frame, to_frame_coords

ARCH_CYCLE = ("ovoid", "square", "tapered")


def frame_landmarks(arch, frame):
    codes = arch.landmarks.codes()
    pts = np.stack([arch.landmarks.entries[c] for c in codes])
    in_frame = points_to_frame(pts, frame, axes="YXZ")
    return cr.LandmarkSet({c: in_frame[k] for k, c in enumerate(codes)})


def build_case(seed, noise=0.0, arc_fraction=1.0, cr_points=None, n_teeth=14):
    """One ground-truth case: returns (case, geometry, truth)."""
    arch = cr.make_arch_mesh(ARCH_CYCLE[seed % 3], n_teeth, seed=seed)
    frame = single_jaw_frame(arch.mesh, UMDA_PARAMS)
    mesh_f = to_frame_coords(arch.mesh, frame, axes="YXZ")
    lm_f = frame_landmarks(arch, frame)
    geom = cr.DetectorGeometry()
    rng = np.random.default_rng(1000 + seed)
    proj = cr.project_vertices(mesh_f, geom)
    thickness = cr.splat(proj, geom, cr.SplatParams())
    sil = cr.extract_silhouette(thickness, 0.05, 441)
    truth = cr.sample_true_transform(rng, geom, sil.points.mean(axis=0))
    case = cr.make_case(mesh_f, lm_f, geom, truth, noise, seed=seed,
                        cr_arc_fraction=arc_fraction, cr_point_count=cr_points)
    return case, geom, truth


def landmark_error(case, geom, transform):
    report = cr.evaluate_landmarks(case.ios_landmarks, transform, geom, case.cr_landmarks)
    return report.mean
