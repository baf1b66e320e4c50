"""Registration of intraoral scan silhouettes onto cephalometric radiograph contours.

Pipeline: build an anatomical frame on the scan mesh (``umda_frame``), render a
radiograph-like perspective projection and extract its silhouette
(``surface_drr``), align the silhouette to the annotated contour with a staged
Chamfer search (``registration``), and score the result (``metrics``).
``synth`` generates ground-truth cases; ``cli`` exposes everything as
subcommands.
"""

from .errors import CephregError, DataError, MeshParseError, NumericalError
from .mesh_model import (
    AnatomicalFrame, DetectorGeometry, LandmarkSet, PointSet2D, ScalarMap2D,
    TriangleMesh, landmark_group, load_contour, load_frame, load_landmarks,
    load_map, load_mesh, save_contour, save_frame, save_landmarks, save_map,
    save_mesh,
)
from .umda_frame import (
    ArchFit, UmdaParams, centroid, crown_candidates, estimate_vertical_axis,
    fit_arch, jaw_axes, points_to_frame, shared_frame, single_jaw_frame,
    to_frame_coords,
)
from .surface_drr import (
    ProjectedPoints, SplatParams, extract_silhouette, intensity,
    project_points, project_vertices, splat,
)
from .registration import (
    DistanceField2D, Schedule, SimilarityTransform2D, StageSpec, StageTrace,
    apply_similarity, bbox_only_schedule, chamfer_loss, default_schedule,
    initialize, one_sided_loss, optimize_stage, register, single_stage_schedule,
)
from .metrics import (
    LandmarkReport, MetricsReport, chamfer_metric, directed_mean,
    evaluate_landmarks, full_report, hausdorff,
)
from .synth import (
    ARCH_TYPES, UMDA_PARAMS, SyntheticArch, SyntheticCase, make_arch_mesh,
    make_case, sample_true_transform,
)

__version__ = "0.1.0"
