"""Batch command-line interface.

Subcommands: frame, render, register, evaluate, overlay, synth.

Settings come from an optional key-value config file (``key = value`` lines,
``#`` comments); command-line flags override the file. The seed falls back to
the CEPHREG_SEED environment variable, then 0. Every output file echoes the
effective settings in its header for provenance.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .errors import DataError, NumericalError
from .mesh_model import (
    AnatomicalFrame, DetectorGeometry, PointSet2D,
    load_contour, load_frame, load_landmarks, load_map, load_mesh,
    save_contour, save_frame, save_map, save_mesh,
)
from .metrics import GROUP_FIELDS, full_report
from .registration import (
    SimilarityTransform2D, bbox_only_schedule, default_schedule, register,
    single_stage_schedule,
)
from .surface_drr import SplatParams, extract_silhouette, intensity, project_vertices, splat
from .synth import make_arch_mesh, make_case, sample_true_transform
from .umda_frame import (
    UmdaParams, crown_candidates, jaw_axes, points_to_frame, shared_frame,
    single_jaw_frame, to_frame_coords,
)

MODES = ("dentalscr", "bbox_only", "single_stage")


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PipelineConfig:
    source_x: float = -1500.0
    detector_x: float = 150.0
    pixel_spacing: float = 0.25
    image_width: int = 703
    image_height: int = 938
    rho0: float = 1.0
    mu0: float = 0.02
    i0: float = 1.0
    sigma_px: float = 1.5
    truncation: float = 3.0
    supersample: bool = False
    threshold_fraction: float = 0.05
    target_count: int = 441
    crown_percentile: float = 20.0
    molar_fraction: float = 0.15
    upper_reference: tuple = (0.0, 0.0, 1.0)
    lower_reference: tuple = (0.0, 0.0, -1.0)
    samples_per_iter: int = 64
    seed: int = 0

    @classmethod
    def load(cls, path=None) -> "PipelineConfig":
        if path is None:
            return cls()
        path = Path(path)
        if not path.exists():
            raise DataError(f"config file not found: {path}")
        values = {}
        casts = {f.name: f.type for f in fields(cls)}
        defaults = cls()
        for lineno, line in enumerate(path.read_text().splitlines(), 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            if "=" not in s:
                raise DataError(f"{path}:{lineno}: expected 'key = value', got {s!r}")
            key, _, raw = s.partition("=")
            key, raw = key.strip(), raw.strip()
            if key not in casts:
                raise DataError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = _parse_value(raw, getattr(defaults, key), path, lineno)
        return cls(**values)

    def geometry(self) -> DetectorGeometry:
        return DetectorGeometry(self.source_x, self.detector_x, self.pixel_spacing,
                                self.image_width, self.image_height)

    def splat_params(self) -> SplatParams:
        return SplatParams(self.rho0, self.mu0, self.i0, self.sigma_px, self.truncation)

    def umda_params(self, jaw: str) -> UmdaParams:
        ref = self.upper_reference if jaw == "upper" else self.lower_reference
        return UmdaParams(self.crown_percentile, ref, self.molar_fraction)

    def image_diag(self) -> float:
        return math.hypot(self.image_width, self.image_height)

    def echo(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = ",".join(repr(float(x)) for x in v) if isinstance(v, tuple) else v
        return out


def _parse_value(raw: str, default, path, lineno):
    try:
        if isinstance(default, bool):
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            return tuple(float(tok) for tok in raw.split(","))
        return raw
    except ValueError:
        raise DataError(f"{path}:{lineno}: cannot parse value {raw!r}")


def _apply_overrides(cfg: PipelineConfig, args) -> PipelineConfig:
    updates = {}
    for f in fields(PipelineConfig):
        flag = getattr(args, f"cfg_{f.name}", None)
        if flag is not None:
            updates[f.name] = flag
    return replace(cfg, **updates) if updates else cfg


def _resolve_seed(args, cfg: PipelineConfig) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("CEPHREG_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise DataError(f"CEPHREG_SEED is not an integer: {env!r}")
    return cfg.seed


# ---------------------------------------------------------------------------
# small shared writers
# ---------------------------------------------------------------------------

def _header_lines(header: dict) -> list:
    return [f"# {k} = {v}" for k, v in header.items()]


def _write_points3d(path, points, header: dict) -> None:
    lines = _header_lines(header)
    for p in np.asarray(points, dtype=float).reshape(-1, 3):
        lines.append(f"{p[0]!r},{p[1]!r},{p[2]!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def save_transform(path, t: SimilarityTransform2D, header: dict = None) -> None:
    lines = _header_lines(header or {})
    lines.append(f"{t.s!r} {t.theta!r} {t.tx!r} {t.ty!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_transform(path) -> SimilarityTransform2D:
    path = Path(path)
    if not path.exists():
        raise DataError(f"transform file not found: {path}")
    for line in path.read_text().splitlines():
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split()
        if len(parts) != 4:
            raise DataError(f"{path}: transform record needs 4 numbers")
        try:
            return SimilarityTransform2D(*(float(x) for x in parts))
        except ValueError:
            raise DataError(f"{path}: non-numeric transform record")
    raise DataError(f"{path}: empty transform file")


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------

def _cmd_frame(args) -> int:
    cfg = _apply_overrides(PipelineConfig.load(args.config), args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    header = cfg.echo()

    upper = load_mesh(args.upper)
    if args.lower is None:
        print("warning: no lower mesh given; single-jaw mode, lateral axis is not shared",
              file=sys.stderr)
        frame_up = single_jaw_frame(upper, cfg.umda_params("upper"))
        frames = {"upper": (upper, frame_up)}
    else:
        lower = load_mesh(args.lower)
        axes_up = jaw_axes(upper, cfg.umda_params("upper"))
        axes_lo = jaw_axes(lower, cfg.umda_params("lower"))
        frame_up, frame_lo = shared_frame(axes_up, axes_lo)
        frames = {"upper": (upper, frame_up), "lower": (lower, frame_lo)}

    for jaw, (mesh, frame) in frames.items():
        save_frame(out_dir / f"frame_{jaw}.txt", frame, header={**header, "jaw": jaw})
        idx = crown_candidates(mesh, cfg.umda_params(jaw))
        _write_points3d(out_dir / f"crowns_{jaw}.txt", mesh.vertices[idx],
                        header={**header, "jaw": jaw, "role": "crown_candidates"})
        print(f"{jaw}: frame -> {out_dir / f'frame_{jaw}.txt'}")
    return 0


def _render_frame_for(args, cfg, mesh) -> AnatomicalFrame:
    if args.no_umda:
        return AnatomicalFrame.identity(mesh.vertices.mean(axis=0))
    if args.frame is not None:
        return load_frame(args.frame)
    return single_jaw_frame(mesh, cfg.umda_params(args.jaw))


def _cmd_render(args) -> int:
    cfg = _apply_overrides(PipelineConfig.load(args.config), args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    header = {**cfg.echo(), "jaw": args.jaw, "no_umda": args.no_umda}

    mesh = load_mesh(args.mesh)
    frame = _render_frame_for(args, cfg, mesh)
    mesh_f = to_frame_coords(mesh, frame, axes="YXZ")
    geom = cfg.geometry()
    proj = project_vertices(mesh_f, geom, rho0=cfg.rho0,
                            midpoint_supersample=cfg.supersample)
    thickness = splat(proj, geom, cfg.splat_params())
    img = intensity(thickness, cfg.splat_params())
    sil = extract_silhouette(thickness, cfg.threshold_fraction,
                             cfg.target_count, label=args.jaw)

    save_map(thickness, out_dir / "thickness.pgm", header=header)
    save_map(img, out_dir / "intensity.pgm", header=header)
    save_contour(out_dir / "silhouette.txt", sil, header=header)
    print(f"rendered {len(sil)} silhouette points -> {out_dir / 'silhouette.txt'}")
    return 0


def _schedule_for_mode(mode: str, cfg: PipelineConfig):
    if mode == "bbox_only":
        return bbox_only_schedule()
    if mode == "single_stage":
        return single_stage_schedule(cfg.image_diag(), 80, cfg.samples_per_iter)
    return default_schedule(cfg.image_diag(), cfg.samples_per_iter)


def _register_one(cr_path, sil_path, out_dir, mode, one_sided, no_umda, seed, cfg):
    cr = load_contour(cr_path)
    sil = load_contour(sil_path)
    sil = PointSet2D(sil.points, label=sil.label, kind="ios_silhouette")
    schedule = _schedule_for_mode(mode, cfg)
    transform, final_loss, trace = register(cr, sil, schedule, seed, one_sided=one_sided)

    from .registration import apply_similarity
    mapped = apply_similarity(transform, sil.points)
    report = full_report(cr, mapped)

    header = {**cfg.echo(), "mode": mode, "seed": seed,
              "one_sided": one_sided, "no_umda": no_umda,
              "cr": str(cr_path), "silhouette": str(sil_path)}
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = ["# cephreg registration report"]
    lines += _header_lines(header)
    lines.append(f"s = {transform.s!r}")
    lines.append(f"theta = {transform.theta!r}")
    lines.append(f"tx = {transform.tx!r}")
    lines.append(f"ty = {transform.ty!r}")
    lines.append(f"final_loss = {final_loss!r}")
    for entry in trace:
        t = entry.transform
        lines.append(f"stage {entry.stage}: loss={entry.loss!r} "
                     f"s={t.s!r} theta={t.theta!r} tx={t.tx!r} ty={t.ty!r}")
    lines.append(report.format_text())
    (out_dir / "report.txt").write_text("\n".join(lines) + "\n")
    save_transform(out_dir / "transform.txt", transform, header=header)
    save_contour(out_dir / "transformed_silhouette.txt",
                 PointSet2D(mapped, label=sil.label, kind="ios_silhouette"),
                 header=header)
    return final_loss


def _register_case_dir(packed):
    case_dir, mode, one_sided, no_umda, seed, cfg = packed
    case_dir = Path(case_dir)
    loss = _register_one(case_dir / "cr_contour.txt", case_dir / "silhouette.txt",
                         case_dir, mode, one_sided, no_umda, seed, cfg)
    return str(case_dir), loss


def _cmd_register(args) -> int:
    cfg = _apply_overrides(PipelineConfig.load(args.config), args)
    seed = _resolve_seed(args, cfg)

    if args.case_dir:
        jobs = [(d, args.mode, args.one_sided, args.no_umda, seed + k, cfg)
                for k, d in enumerate(args.case_dir)]
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                results = list(pool.map(_register_case_dir, jobs))
        else:
            results = [_register_case_dir(j) for j in jobs]
        for name, loss in results:
            print(f"{name}: final_loss = {loss!r}")
        return 0

    if args.cr is None or args.silhouette is None:
        raise DataError("register needs either --case-dir or both --cr and --silhouette")
    loss = _register_one(args.cr, args.silhouette, args.out_dir,
                         args.mode, args.one_sided, args.no_umda, seed, cfg)
    print(f"final_loss = {loss!r}")
    return 0


_TABLE_COLUMNS = ("Mean", "RMSE", "Std", "Inc&Can", "PreM", "Molars")


def _evaluate_jaw(jaw, args, cfg):
    prefix = f"{jaw}_"
    lm3d_path = getattr(args, prefix + "landmarks3d")
    if lm3d_path is None:
        return None
    for field in ("cr_landmarks", "frame", "transform"):
        if getattr(args, prefix + field) is None:
            raise DataError(f"evaluate: --{jaw}-{field.replace('_', '-')} is required "
                            f"when --{jaw}-landmarks3d is given")
    cr_lm = load_landmarks(getattr(args, prefix + "cr_landmarks"))
    lm3d = load_landmarks(lm3d_path)
    frame = load_frame(getattr(args, prefix + "frame"))
    transform = load_transform(getattr(args, prefix + "transform"))
    codes = lm3d.codes()
    pts = np.stack([lm3d.entries[c] for c in codes])
    in_frame = points_to_frame(pts, frame, axes="YXZ")
    from .mesh_model import LandmarkSet
    lm_frame = LandmarkSet({c: in_frame[k] for k, c in enumerate(codes)})

    cr_path = getattr(args, prefix + "cr")
    sil_path = getattr(args, prefix + "silhouette")
    if cr_path is not None and sil_path is not None:
        cr = load_contour(cr_path)
        sil = load_contour(sil_path)
        report = full_report(cr, sil.points, lm_frame, transform, cfg.geometry(), cr_lm)
        return jaw, report.landmarks, report
    from .metrics import evaluate_landmarks
    lm = evaluate_landmarks(lm_frame, transform, cfg.geometry(), cr_lm)
    return jaw, lm, None


def _cmd_evaluate(args) -> int:
    cfg = _apply_overrides(PipelineConfig.load(args.config), args)
    rows = []
    for jaw in ("upper", "lower"):
        row = _evaluate_jaw(jaw, args, cfg)
        if row is not None:
            rows.append(row)
    if not rows:
        raise DataError("evaluate needs at least one jaw block (--upper-* or --lower-*)")

    print("Landmark evaluation (pixels)")
    print("Jaw      " + "".join(f"{c:>12}" for c in _TABLE_COLUMNS))
    for jaw, lm, _ in rows:
        d = lm.to_dict()
        vals = [d["lm_mean"], d["lm_rmse"], d["lm_std"],
                d[GROUP_FIELDS["incisor_canine"]], d[GROUP_FIELDS["premolar"]],
                d[GROUP_FIELDS["molar"]]]
        print(f"{jaw:<9}" + "".join(f"{v:>12.3f}" for v in vals))
    for jaw, _, report in rows:
        if report is None:
            continue
        print(f"\nContour-distance metrics, {jaw} jaw (pixels)")
        print(f"  Chamfer distance (bi-directional mean)  {report.chamfer_bidir_mean:.3f}")
        print(f"  Hausdorff distance                      {report.hausdorff_sym:.3f}")
        print(f"  IOS -> CR mean distance                 {report.ios_to_cr_mean:.3f}")
        print(f"  CR -> IOS mean distance                 {report.cr_to_ios_mean:.3f}")
    return 0


def _draw_polyline(canvas, points, color):
    h, w, _ = canvas.shape
    pts = np.asarray(points, dtype=float)
    for a, b in zip(pts[:-1], pts[1:]):
        n = max(2, int(np.ceil(np.linalg.norm(b - a))) + 1)
        line = a + (b - a) * np.linspace(0.0, 1.0, n)[:, None]
        iu = np.round(line[:, 0]).astype(int)
        iv = np.round(line[:, 1]).astype(int)
        ok = (iu >= 0) & (iu < w) & (iv >= 0) & (iv < h)
        canvas[iv[ok], iu[ok]] = color


def _cmd_overlay(args) -> int:
    cfg = _apply_overrides(PipelineConfig.load(args.config), args)
    cr = load_contour(args.cr_contour)
    sil = load_contour(args.silhouette)

    if args.cr_image is not None:
        base = load_map(args.cr_image)
        gray = (base.data / 257.0).astype(np.uint8)        # 0..65535 -> 0..255
        canvas = np.stack([gray, gray, gray], axis=-1)
    else:
        canvas = np.full((cfg.image_height, cfg.image_width, 3), 255, dtype=np.uint8)

    _draw_polyline(canvas, cr.points, (255, 0, 0))         # radiograph contour: red
    _draw_polyline(canvas, sil.points, (0, 200, 0))        # projected silhouette: green

    header = {**cfg.echo(), "cr_contour": args.cr_contour, "silhouette": args.silhouette}
    head = ["P6"] + _header_lines(header)
    head.append(f"{canvas.shape[1]} {canvas.shape[0]}")
    head.append("255")
    with open(args.out, "wb") as fh:
        fh.write(("\n".join(head) + "\n").encode("ascii"))
        fh.write(canvas.tobytes())
    print(f"overlay ({canvas.shape[1]}x{canvas.shape[0]}) -> {args.out}")
    return 0


def _synth_one(packed):
    case_dir, arch_type, n_teeth, noise, seed, cfg = packed
    case_dir = Path(case_dir)
    case_dir.mkdir(parents=True, exist_ok=True)
    header = {**cfg.echo(), "arch_type": arch_type, "n_teeth": n_teeth,
              "noise_px": noise, "case_seed": seed}

    arch = make_arch_mesh(arch_type, n_teeth, seed)
    frame = single_jaw_frame(arch.mesh, cfg.umda_params("upper"))
    mesh_f = to_frame_coords(arch.mesh, frame, axes="YXZ")
    codes = arch.landmarks.codes()
    pts = np.stack([arch.landmarks.entries[c] for c in codes])
    in_frame = points_to_frame(pts, frame, axes="YXZ")
    from .mesh_model import LandmarkSet, save_landmarks
    lm_frame = LandmarkSet({c: in_frame[k] for k, c in enumerate(codes)})

    geom = cfg.geometry()
    rng = np.random.default_rng(seed)
    proj = project_vertices(mesh_f, geom)
    anchor = np.array([proj.u.mean(), proj.v.mean()])
    truth = sample_true_transform(rng, geom, anchor)
    case = make_case(mesh_f, lm_frame, geom, truth, noise, seed,
                     splat_params=cfg.splat_params(),
                     threshold_fraction=cfg.threshold_fraction,
                     target_count=cfg.target_count)

    save_mesh(case_dir / "mesh.stl", arch.mesh)
    save_frame(case_dir / "frame_true.txt", arch.frame,
               header={**header, "role": "analytic_truth"})
    save_landmarks(case_dir / "landmarks3d.txt", arch.landmarks,
                   header={**header, "space": "world_mm"})
    save_contour(case_dir / "cr_contour.txt", case.cr_contour, header=header)
    save_landmarks(case_dir / "cr_landmarks.txt", case.cr_landmarks,
                   header={**header, "space": "cr_pixels"})
    save_contour(case_dir / "silhouette.txt", case.silhouette, header=header)
    save_transform(case_dir / "truth.txt", truth, header=header)
    return str(case_dir)


def _cmd_synth(args) -> int:
    cfg = _apply_overrides(PipelineConfig.load(args.config), args)
    seed = _resolve_seed(args, cfg)
    out = Path(args.out_dir)
    jobs = [(out / f"case_{k:03d}", args.arch_type, args.n_teeth,
             args.noise, seed + k, cfg) for k in range(args.cases)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            done = list(pool.map(_synth_one, jobs))
    else:
        done = [_synth_one(j) for j in jobs]
    for name in done:
        print(f"wrote {name}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_common(p):
    p.add_argument("--config", default=None, help="key-value config file")
    p.add_argument("--seed", type=int, default=None,
                   help="random seed (falls back to config, then CEPHREG_SEED, then 0)")
    for name, typ in (("source_x", float), ("detector_x", float), ("pixel_spacing", float),
                      ("image_width", int), ("image_height", int), ("sigma_px", float),
                      ("rho0", float), ("mu0", float), ("truncation", float),
                      ("threshold_fraction", float), ("target_count", int),
                      ("crown_percentile", float), ("molar_fraction", float),
                      ("samples_per_iter", int)):
        p.add_argument(f"--{name.replace('_', '-')}", dest=f"cfg_{name}", type=typ,
                       default=None, help=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cephreg",
        description="Register intraoral scan silhouettes onto cephalogram contours.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("frame", help="estimate anatomical frames for one or two jaw meshes")
    p.add_argument("--upper", required=True, help="upper jaw mesh (STL/OBJ)")
    p.add_argument("--lower", default=None, help="lower jaw mesh (STL/OBJ)")
    p.add_argument("--out-dir", default=".", help="output directory")
    _add_common(p)
    p.set_defaults(func=_cmd_frame)

    p = sub.add_parser("render", help="project a mesh and extract its silhouette")
    p.add_argument("--mesh", required=True)
    p.add_argument("--frame", default=None, help="frame file (default: estimate from the mesh)")
    p.add_argument("--jaw", choices=("upper", "lower"), default="upper")
    p.add_argument("--no-umda", action="store_true",
                   help="skip the anatomical frame; project in centered world coordinates")
    p.add_argument("--out-dir", default=".")
    _add_common(p)
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("register", help="align a silhouette to a radiograph contour")
    p.add_argument("--cr", default=None, help="radiograph contour file")
    p.add_argument("--silhouette", default=None, help="projected silhouette contour file")
    p.add_argument("--case-dir", nargs="*", default=None,
                   help="case directories holding cr_contour.txt and silhouette.txt")
    p.add_argument("--mode", choices=MODES, default="dentalscr")
    p.add_argument("--one-sided", action="store_true",
                   help="ablation: optimize the silhouette-to-contour direction only")
    p.add_argument("--no-umda", action="store_true",
                   help="annotation only: mark the report as rendered without the anatomical frame")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers across case directories")
    _add_common(p)
    p.set_defaults(func=_cmd_register)

    p = sub.add_parser("evaluate", help="landmark and contour metrics tables")
    for jaw in ("upper", "lower"):
        p.add_argument(f"--{jaw}-landmarks3d", default=None, help=f"{jaw} 3D landmarks (world mm)")
        p.add_argument(f"--{jaw}-cr-landmarks", default=None, help=f"{jaw} 2D radiograph landmarks")
        p.add_argument(f"--{jaw}-frame", default=None)
        p.add_argument(f"--{jaw}-transform", default=None)
        p.add_argument(f"--{jaw}-cr", default=None, help=f"{jaw} radiograph contour (optional)")
        p.add_argument(f"--{jaw}-silhouette", default=None,
                       help=f"{jaw} transformed silhouette (optional)")
    _add_common(p)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("overlay", help="rasterize contour and silhouette into a color image")
    p.add_argument("--cr-image", default=None, help="16-bit PGM backdrop (optional)")
    p.add_argument("--cr-contour", required=True)
    p.add_argument("--silhouette", required=True, help="transformed silhouette contour file")
    p.add_argument("--out", required=True, help="output PPM path")
    _add_common(p)
    p.set_defaults(func=_cmd_overlay)

    p = sub.add_parser("synth", help="generate synthetic ground-truth case directories")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--cases", type=int, default=1)
    p.add_argument("--arch-type", choices=("square", "ovoid", "tapered"), default="ovoid")
    p.add_argument("--n-teeth", type=int, default=14)
    p.add_argument("--noise", type=float, default=0.0, help="CR contour jitter in pixels")
    p.add_argument("--jobs", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=_cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
