"""Command-line interface: bake, schedule, eval, preview.

Exit codes:
  0  success
  1  unexpected internal error
  2  bad usage or configuration
  3  asset I/O failure (missing/malformed mesh or image)
  4  segmentation backend unavailable
  5  backend protocol violation
  6  shape/length mismatch between stages
  7  material table error
  8  metric error (empty overlap, image too small)
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .baking import LabelUV
from .camera import build_schedule
from .errors import (
    BackendUnavailableError,
    ConfigError,
    DecodeError,
    DegenerateExtentError,
    EmptyMeshError,
    EmptyOverlapError,
    LengthMismatchError,
    MaterialRangeError,
    MatbakeError,
    MissingClassError,
    MissingUVsError,
    ParseError,
    ProtocolError,
    ShapeMismatchError,
    TooSmallError,
)
from .assets import load_asset
from .materials import PBRMaps, default_material_table, load_material_table
from .metrics import miou, psnr, ssim
from .pipeline import DEFAULT_THREADS, PipelineConfig, run_bake
from .shading import DirectionalLight, render_preview
from .texture import atomic_save, load_gray, load_texture, write_image

EXIT_CODES = [
    (ConfigError, 2),
    (BackendUnavailableError, 4),
    (ProtocolError, 5),
    (ShapeMismatchError, 6),
    (LengthMismatchError, 6),
    (MissingClassError, 7),
    (MaterialRangeError, 7),
    (EmptyOverlapError, 8),
    (TooSmallError, 8),
    (ParseError, 3),
    (MissingUVsError, 3),
    (EmptyMeshError, 3),
    (DegenerateExtentError, 3),
    (DecodeError, 3),
]


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, (FileNotFoundError, IsADirectoryError)):
        return 3
    for cls, code in EXIT_CODES:
        if isinstance(exc, cls):
            return code
    return 1 if isinstance(exc, MatbakeError) else 1


def _default_threads() -> int:
    env = os.environ.get("MATBAKE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return DEFAULT_THREADS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="matbake",
        description="Bake PBR metallic/roughness maps from multi-view material segmentation.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_bake = sub.add_parser("bake", help="run the full pipeline on one asset")
    p_bake.add_argument("--config", help="JSON config file; flags override it")
    p_bake.add_argument("--asset", help="OBJ mesh path")
    p_bake.add_argument("--albedo", help="albedo PNG path")
    p_bake.add_argument("--backend", choices=["http", "dir", "oracle"])
    p_bake.add_argument("--endpoint", help="segmentation service base URL")
    p_bake.add_argument("--labels-dir", help="directory of precomputed label PNGs")
    p_bake.add_argument("--palette", help="JSON palette for the oracle backend")
    p_bake.add_argument("--seed", type=int)
    p_bake.add_argument("--render-res", type=int)
    p_bake.add_argument("--uv-res", type=int)
    p_bake.add_argument("--alpha", type=float)
    p_bake.add_argument("--material-table", help="INI material table path")
    p_bake.add_argument("--out", help="output directory")
    p_bake.add_argument("--threads", type=int)
    p_bake.add_argument("--debug-dump", action="store_true", default=None)

    p_sched = sub.add_parser("schedule", help="print the camera schedule")
    p_sched.add_argument("seed", type=int)

    p_eval = sub.add_parser("eval", help="compare label UVs and renders")
    p_eval.add_argument("--pred", required=True, help="predicted label UV (8-bit gray PNG)")
    p_eval.add_argument("--gt", required=True, help="ground-truth label UV (8-bit gray PNG)")
    p_eval.add_argument("--render-a", help="first render for PSNR/SSIM")
    p_eval.add_argument("--render-b", help="second render for PSNR/SSIM")
    p_eval.add_argument("--report", help="write a JSON report here")

    p_prev = sub.add_parser("preview", help="relight an asset with baked maps")
    p_prev.add_argument("--asset", required=True)
    p_prev.add_argument("--albedo", required=True)
    p_prev.add_argument("--metallic", required=True)
    p_prev.add_argument("--roughness", required=True)
    p_prev.add_argument("--elevation", type=float, default=15.0)
    p_prev.add_argument("--azimuth", type=float, default=0.0)
    p_prev.add_argument("--resolution", type=int, default=1024)
    p_prev.add_argument("--light-dir", default="-1,-1,-1")
    p_prev.add_argument("--light-intensity", default="1,1,1")
    p_prev.add_argument("--out", required=True)
    return parser


_FLAG_TO_CFG = {
    "asset": "mesh_path",
    "albedo": "albedo_path",
    "backend": "backend",
    "endpoint": "endpoint",
    "labels_dir": "labels_dir",
    "palette": "palette_path",
    "seed": "seed",
    "render_res": "render_res",
    "uv_res": "uv_res",
    "alpha": "alpha",
    "material_table": "material_table",
    "out": "out_dir",
    "threads": "threads",
    "debug_dump": "debug_dump",
}


def _bake_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = PipelineConfig(threads=_default_threads())
    if args.config:
        with open(args.config) as fh:
            loaded = json.load(fh)
        for key, value in loaded.items():
            if not hasattr(cfg, key):
                raise ConfigError(f"unknown config key {key!r}")
            setattr(cfg, key, value)
    for flag, attr in _FLAG_TO_CFG.items():
        value = getattr(args, flag, None)
        if value is not None:
            setattr(cfg, attr, value)
    if not cfg.mesh_path or not cfg.albedo_path:
        raise ConfigError("bake requires --asset and --albedo (or a config file)")
    return cfg


def cmd_bake(args: argparse.Namespace) -> int:
    cfg = _bake_config(args)
    manifest = run_bake(cfg)
    print(json.dumps(manifest, indent=2))
    return 0


def cmd_schedule(args: argparse.Namespace) -> int:
    schedule = build_schedule(args.seed)
    for i, pose in enumerate(schedule.poses):
        tag = "manual" if pose.manual else "auto"
        print(f"{i:3d}  elev {pose.elevation:+8.3f}  azim {pose.azimuth:7.2f}  {tag}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    pred = LabelUV(load_gray(args.pred))
    gt = LabelUV(load_gray(args.gt))
    report = miou(pred, gt)
    print(report.format_table())
    result = {
        "miou": report.mean,
        "per_class_iou": {str(k): v for k, v in report.per_class.items()},
        "gt_pixel_counts": {str(k): v for k, v in report.pixel_counts.items()},
    }
    if bool(args.render_a) != bool(args.render_b):
        raise ConfigError("--render-a and --render-b must be given together")
    if args.render_a:
        ia = load_texture(args.render_a)
        ib = load_texture(args.render_b)
        p = psnr(ia, ib)
        s = ssim(ia, ib)
        print(f"{'PSNR (dB)':<18}{'inf' if p == float('inf') else f'{p:.4f}':>8}")
        print(f"{'SSIM':<18}{s:>8.4f}")
        result["psnr_db"] = "inf" if p == float("inf") else p
        result["ssim"] = s
    if args.report:
        atomic_save(
            lambda p: open(p, "w").write(json.dumps(result, indent=2)),
            args.report,
        )
    return 0


def cmd_preview(args: argparse.Namespace) -> int:
    asset = load_asset(args.asset, args.albedo)
    metallic = load_gray(args.metallic)
    roughness = load_gray(args.roughness)
    pbr = PBRMaps(
        metallic=metallic,
        roughness=roughness,
        label_vis=np.zeros(metallic.shape + (3,), dtype=np.uint8),
        labels=np.zeros(metallic.shape, dtype=np.uint8),
        unassigned_count=0,
    )
    from .camera import CameraPose

    pose = CameraPose(
        elevation=args.elevation,
        azimuth=args.azimuth % 360.0,
        width=args.resolution,
        height=args.resolution,
    )
    light = DirectionalLight(
        direction=tuple(float(x) for x in args.light_dir.split(",")),
        intensity=tuple(float(x) for x in args.light_intensity.split(",")),
    )
    image = render_preview(asset, pbr, pose, light)
    write_image(image, args.out)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "bake": cmd_bake,
        "schedule": cmd_schedule,
        "eval": cmd_eval,
        "preview": cmd_preview,
    }
    try:
        return handlers[args.command](args)
    except Exception as exc:  # noqa: BLE001 - single translation point to exit codes
        code = _exit_code(exc)
        print(f"matbake: error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
