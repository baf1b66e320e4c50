"""Silhouette-to-contour registration over 2D similarity transforms.

A projected silhouette is mapped onto an annotated radiograph contour by
``p' = s * R(theta) @ (y, -z) + (tx, ty)``; the built-in sign flip on the
second coordinate converts detector-up coordinates to the image-down pixel
convention. The objective is the symmetric Chamfer loss (sum of the two
directed mean nearest-neighbor distances), minimized with a seeded
derivative-free search: uniform sampling within per-stage bounds, keep-best
including the incumbent, then a compass (pattern) search that contracts
around the best sample. Stages shrink their bounds coarse-to-fine.

During the search the silhouette-to-contour direction is evaluated against a
precomputed distance field and the reverse direction against a KD-tree over
the transformed points; the last stage and all reported losses use exact
distances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from .errors import DataError, NumericalError
from .mesh_model import PointSet2D

_FLIP = np.array([1.0, -1.0])


def _pts(a) -> np.ndarray:
    p = a.points if isinstance(a, PointSet2D) else np.asarray(a, dtype=float)
    return p.reshape(-1, 2)


def _wrap_angle(theta: float) -> float:
    w = (theta + math.pi) % (2.0 * math.pi) - math.pi
    return math.pi if w == -math.pi else w


@dataclass(frozen=True)
class SimilarityTransform2D:
    """Isotropic scale, rotation and translation, applied after the z sign flip."""

    s: float = 1.0
    theta: float = 0.0
    tx: float = 0.0
    ty: float = 0.0

    def __post_init__(self):
        if not (self.s > 0 and np.isfinite(self.s)):
            raise DataError("scale must be positive and finite")
        object.__setattr__(self, "theta", _wrap_angle(float(self.theta)))
        object.__setattr__(self, "s", float(self.s))
        object.__setattr__(self, "tx", float(self.tx))
        object.__setattr__(self, "ty", float(self.ty))

    @property
    def rotation(self) -> np.ndarray:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return np.array([[c, -s], [s, c]])

    @property
    def translation(self) -> np.ndarray:
        return np.array([self.tx, self.ty])


def apply_similarity(transform: SimilarityTransform2D, points) -> np.ndarray:
    """Map silhouette points (y, z) to radiograph pixels: s*R(theta)@(y,-z) + t."""
    p = points.points if isinstance(points, PointSet2D) else np.asarray(points, dtype=float)
    single = p.ndim == 1
    p = p.reshape(-1, 2) * _FLIP
    out = transform.s * (p @ transform.rotation.T) + transform.translation
    return out[0] if single else out


def chamfer_loss(a, b) -> float:
    """Symmetric Chamfer loss: mean NN distance a->b plus mean NN distance b->a (exact)."""
    pa, pb = _pts(a), _pts(b)
    if len(pa) == 0 or len(pb) == 0:
        raise DataError("chamfer_loss requires nonempty point sets")
    d_ab = cKDTree(pb).query(pa)[0].mean()
    d_ba = cKDTree(pa).query(pb)[0].mean()
    return float(d_ab + d_ba)


def one_sided_loss(a, b) -> float:
    """Directed mean NN distance a->b only. Blind to uncovered regions of b."""
    pa, pb = _pts(a), _pts(b)
    if len(pa) == 0 or len(pb) == 0:
        raise DataError("one_sided_loss requires nonempty point sets")
    return float(cKDTree(pb).query(pa)[0].mean())


# ---------------------------------------------------------------------------
# distance field
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DistanceField2D:
    """Pixel grid of distances to the nearest contour point, plus the raw points.

    Contour points are rasterized to the nearest grid node, so node values
    agree with exact nearest-neighbor distances to within the half-diagonal
    rasterization bound (sqrt(2)/2 px). Queries between nodes interpolate
    bilinearly; queries outside the grid add the distance to the grid edge.
    """

    grid: np.ndarray       # (H, W) distances in px
    origin_uv: tuple       # coordinates of grid[0, 0]
    points: np.ndarray     # raw contour points for exact queries

    @classmethod
    def from_points(cls, points, shape: tuple = None, margin: int = 8) -> "DistanceField2D":
        pts = _pts(points)
        if len(pts) == 0:
            raise DataError("cannot build a distance field from an empty set")
        if shape is None:
            u0 = math.floor(pts[:, 0].min()) - margin
            v0 = math.floor(pts[:, 1].min()) - margin
            w = math.ceil(pts[:, 0].max()) - u0 + 1 + margin
            h = math.ceil(pts[:, 1].max()) - v0 + 1 + margin
        else:
            w, h = int(shape[0]), int(shape[1])
            u0 = v0 = 0
        if w < 2 or h < 2:
            raise DataError("distance field grid must be at least 2x2")
        iu = np.clip(np.round(pts[:, 0] - u0).astype(int), 0, w - 1)
        iv = np.clip(np.round(pts[:, 1] - v0).astype(int), 0, h - 1)
        mask = np.zeros((h, w), dtype=bool)
        mask[iv, iu] = True
        grid = ndimage.distance_transform_edt(~mask)
        return cls(grid, (float(u0), float(v0)), pts)

    def query(self, points) -> np.ndarray:
        p = _pts(points)
        x = p[:, 0] - self.origin_uv[0]
        y = p[:, 1] - self.origin_uv[1]
        h, w = self.grid.shape
        xc = np.clip(x, 0.0, w - 1.0)
        yc = np.clip(y, 0.0, h - 1.0)
        outside = np.hypot(x - xc, y - yc)
        x0 = np.clip(np.floor(xc).astype(int), 0, w - 2)
        y0 = np.clip(np.floor(yc).astype(int), 0, h - 2)
        fx = xc - x0
        fy = yc - y0
        g = self.grid
        val = (g[y0, x0] * (1 - fx) * (1 - fy) + g[y0, x0 + 1] * fx * (1 - fy)
               + g[y0 + 1, x0] * (1 - fx) * fy + g[y0 + 1, x0 + 1] * fx * fy)
        return val + outside


# ---------------------------------------------------------------------------
# stage schedule
# ---------------------------------------------------------------------------

_PARAM_NAMES = ("log_s", "theta", "tx", "ty")


@dataclass(frozen=True)
class StageSpec:
    """One search stage: per-parameter (lo, hi) offsets around the incumbent.

    Rows of ``bounds`` are (log-scale, rotation rad, anchor shift u px, anchor
    shift v px); the anchor is the incumbent image of the silhouette centroid,
    which keeps translation decoupled from rotation and scale.
    """

    bounds: np.ndarray          # (4, 2)
    iterations: int
    samples_per_iter: int = 64

    def __post_init__(self):
        b = np.asarray(self.bounds, dtype=float).reshape(4, 2)
        if not (b[:, 0] < b[:, 1]).all():
            raise DataError("stage bounds need lo < hi for every parameter")
        if self.iterations <= 0 or self.samples_per_iter <= 0:
            raise DataError("stage budgets must be positive")
        object.__setattr__(self, "bounds", b)

    @classmethod
    def from_ranges(cls, scale_frac: float, theta_deg: float, t_px: float,
                    iterations: int, samples_per_iter: int = 64) -> "StageSpec":
        """Symmetric bounds: scale within (1 +/- scale_frac), rotation +/- theta_deg, shift +/- t_px."""
        ls = math.log1p(scale_frac)
        th = math.radians(theta_deg)
        return cls(np.array([[-ls, ls], [-th, th], [-t_px, t_px], [-t_px, t_px]]),
                   iterations, samples_per_iter)


@dataclass(frozen=True)
class Schedule:
    """Ordered stages with non-increasing bounds (each range inside the previous)."""

    stages: tuple

    def __post_init__(self):
        stages = tuple(self.stages)
        for prev, cur in zip(stages, stages[1:]):
            if ((cur.bounds[:, 0] < prev.bounds[:, 0]) | (cur.bounds[:, 1] > prev.bounds[:, 1])).any():
                raise DataError("stage bounds must shrink (or hold) from stage to stage")
        object.__setattr__(self, "stages", stages)

    def __len__(self) -> int:
        return len(self.stages)


def default_schedule(image_diag_px: float, samples_per_iter: int = 64) -> Schedule:
    """Three stages: coarse, fine, super-fine (30%/15deg/25%diag down to 2%/1deg/1%diag)."""
    return Schedule((
        StageSpec.from_ranges(0.30, 15.0, 0.25 * image_diag_px, 40, samples_per_iter),
        StageSpec.from_ranges(0.10, 5.0, 0.05 * image_diag_px, 30, samples_per_iter),
        StageSpec.from_ranges(0.02, 1.0, 0.01 * image_diag_px, 20, samples_per_iter),
    ))


def single_stage_schedule(image_diag_px: float, iterations: int = 80,
                          samples_per_iter: int = 64) -> Schedule:
    """One coarse-range stage; the classic single-stage baseline."""
    return Schedule((StageSpec.from_ranges(0.30, 15.0, 0.25 * image_diag_px,
                                           iterations, samples_per_iter),))


def bbox_only_schedule() -> Schedule:
    """No stages at all: registration reduces to the bounding-box initialization."""
    return Schedule(())


# ---------------------------------------------------------------------------
# initialization and staged search
# ---------------------------------------------------------------------------

def initialize(ios_sil, cr) -> SimilarityTransform2D:
    """Bounding-box and centroid matching on the flipped silhouette.

    Scale is the mean of the per-axis bounding-box extent ratios (falling back
    to the nondegenerate axis, then to 1); rotation starts at zero; translation
    aligns the point centroids after scaling.
    """
    ios_pts, cr_pts = _pts(ios_sil), _pts(cr)
    if len(ios_pts) == 0 or len(cr_pts) == 0:
        raise DataError("initialize requires nonempty point sets")
    flipped = ios_pts * _FLIP
    ios_ext = flipped.max(axis=0) - flipped.min(axis=0)
    cr_ext = cr_pts.max(axis=0) - cr_pts.min(axis=0)
    ratios = [cr_ext[k] / ios_ext[k] for k in range(2)
              if ios_ext[k] > 1e-12 and cr_ext[k] > 1e-12]
    s = float(np.mean(ratios)) if ratios else 1.0
    if s <= 1e-12:
        s = 1.0
    t = cr_pts.mean(axis=0) - s * flipped.mean(axis=0)
    return SimilarityTransform2D(s, 0.0, t[0], t[1])


class _StageProblem:
    """Loss evaluation plus the centroid-anchored chart around one incumbent."""

    def __init__(self, field, ios_pts, incumbent, one_sided, exact):
        self.flipped = ios_pts * _FLIP
        self.center = self.flipped.mean(axis=0)
        self.cr = field.points
        self.field = field
        self.one_sided = one_sided
        self.exact = exact
        self.s0 = incumbent.s
        self.theta0 = incumbent.theta
        self.anchor0 = incumbent.s * (incumbent.rotation @ self.center) + incumbent.translation

    def transform_at(self, delta) -> SimilarityTransform2D:
        s = self.s0 * math.exp(delta[0])
        theta = self.theta0 + delta[1]
        c, sn = math.cos(theta), math.sin(theta)
        rc = np.array([c * self.center[0] - sn * self.center[1],
                       sn * self.center[0] + c * self.center[1]])
        t = self.anchor0 + delta[2:] - s * rc
        return SimilarityTransform2D(s, theta, t[0], t[1])

    def loss_at(self, delta, bound: float = None) -> float:
        """Loss at a chart offset; with ``bound`` set, returns inf as soon as the
        silhouette-to-contour term alone exceeds it (both terms are nonnegative)."""
        s = self.s0 * math.exp(delta[0])
        theta = self.theta0 + delta[1]
        c, sn = math.cos(theta), math.sin(theta)
        rot = np.array([[c, -sn], [sn, c]])
        rc = rot @ self.center
        t = self.anchor0 + delta[2:] - s * rc
        transformed = s * (self.flipped @ rot.T) + t
        if self.exact:
            dmat = cdist(transformed, self.cr)
            loss = dmat.min(axis=1).mean()
            if not self.one_sided:
                loss += dmat.min(axis=0).mean()
        else:
            loss = self.field.query(transformed).mean()
            if not self.one_sided:
                if bound is not None and loss > bound:
                    return math.inf
                tree = cKDTree(transformed, balanced_tree=False, compact_nodes=False)
                loss += tree.query(self.cr)[0].mean()
        return float(loss)


def optimize_stage(cr_field: DistanceField2D, ios, incumbent: SimilarityTransform2D,
                   stage: StageSpec, rng_seed, one_sided: bool = False,
                   exact: bool = False) -> SimilarityTransform2D:
    """Run one bounded stage: seeded uniform sampling, keep-best, compass contraction.

    The incumbent is always a candidate, so the returned transform never has a
    larger (stage-objective) loss. Ties are broken toward the candidate
    closest to the incumbent in the search chart. Fixed seed, fixed result.
    """
    ios_pts = _pts(ios)
    if len(ios_pts) == 0:
        raise DataError("optimize_stage requires a nonempty silhouette")
    problem = _StageProblem(cr_field, ios_pts, incumbent, one_sided, exact)
    lo, hi = stage.bounds[:, 0], stage.bounds[:, 1]
    rng = np.random.default_rng(rng_seed)

    best_delta = np.zeros(4)
    best_loss = problem.loss_at(best_delta)
    best_dist = 0.0

    def consider(delta):
        nonlocal best_delta, best_loss, best_dist
        loss = problem.loss_at(delta, bound=best_loss)
        dist = float(np.linalg.norm(delta))
        if loss < best_loss or (loss == best_loss and dist < best_dist):
            best_delta, best_loss, best_dist = delta.copy(), loss, dist

    for _ in range(stage.iterations):
        for delta in rng.uniform(lo, hi, size=(stage.samples_per_iter, 4)):
            consider(delta)

    # compass search around the best sample, contracting until convergence
    steps = (hi - lo) / 8.0
    tol = (hi - lo) * 1e-5
    budget = max(320, 8 * stage.iterations)
    evals = 0
    while evals < budget and (steps > tol).any():
        sweep_best, sweep_loss, sweep_dist = None, best_loss, best_dist
        for dim in range(4):
            for sign in (1.0, -1.0):
                delta = best_delta.copy()
                delta[dim] = np.clip(delta[dim] + sign * steps[dim], lo[dim], hi[dim])
                if delta[dim] == best_delta[dim]:
                    continue
                loss = problem.loss_at(delta, bound=sweep_loss)
                evals += 1
                dist = float(np.linalg.norm(delta))
                if loss < sweep_loss or (loss == sweep_loss and sweep_best is not None
                                         and dist < sweep_dist):
                    sweep_best, sweep_loss, sweep_dist = delta, loss, dist
        if sweep_best is None:
            steps /= 2.0
        else:
            best_delta, best_loss, best_dist = sweep_best, sweep_loss, sweep_dist
    return problem.transform_at(best_delta)


@dataclass(frozen=True)
class StageTrace:
    """Audit record after one stage: name, exact objective value, incumbent transform."""

    stage: str
    loss: float
    transform: SimilarityTransform2D


def register(cr, ios_sil, schedule: Schedule, seed: int, one_sided: bool = False):
    """Full registration: initialize, then run the stage schedule around the incumbent.

    Returns ``(transform, final_loss, trace)``. Each stage result is kept only
    if it does not worsen the exact objective, so the trace losses are
    monotonically non-increasing. An empty schedule returns the
    initialization unchanged. Deterministic for a fixed seed.
    """
    cr_pts, ios_pts = _pts(cr), _pts(ios_sil)
    objective = one_sided_loss if one_sided else chamfer_loss

    incumbent = initialize(ios_pts, cr_pts)
    best_loss = objective(apply_similarity(incumbent, ios_pts), cr_pts)
    trace = [StageTrace("init", best_loss, incumbent)]
    if len(schedule) == 0:
        return incumbent, best_loss, tuple(trace)

    field = DistanceField2D.from_points(cr_pts)
    last = len(schedule) - 1
    for k, stage in enumerate(schedule.stages):
        candidate = optimize_stage(field, ios_pts, incumbent, stage,
                                   rng_seed=(seed, k), one_sided=one_sided,
                                   exact=(k == last))
        cand_loss = objective(apply_similarity(candidate, ios_pts), cr_pts)
        if cand_loss <= best_loss:
            incumbent, best_loss = candidate, cand_loss
        trace.append(StageTrace(f"stage{k}", best_loss, incumbent))
    return incumbent, best_loss, tuple(trace)
