"""End-to-end bake orchestration: render -> segment -> bake -> fuse -> emit."""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from PIL import Image

from . import __version__
from .assets import Asset, load_asset
from .baking import LabelUV, bake_view, rasterize_uv
from .camera import ViewSchedule, build_schedule
from .errors import ConfigError
from .fusion import FusionConfig, accumulate, region_unify, vote
from .materials import (
    MaterialTable,
    default_material_table,
    emit_pbr,
    load_material_table,
)
from .segmentation import (
    DirectoryBackend,
    HttpBackend,
    OraclePalette,
    PaletteBackend,
    SegmentationBackend,
)
from .shading import DirectionalLight, render_preview
from .raster import render_view
from .texture import (
    atomic_save,
    write_gray,
    write_gray16,
    write_image,
)

DEFAULT_THREADS = 4


@dataclass
class PipelineConfig:
    mesh_path: str = ""
    albedo_path: str = ""
    name: str | None = None
    seed: int = 0
    render_res: int = 1024
    uv_res: int = 1024
    backend: str = "oracle"          # http | dir | oracle
    endpoint: str | None = None
    labels_dir: str | None = None
    palette_path: str | None = None
    alpha: float = 2.0
    unify_min_region: float = 0.005
    unify_dominance: float = 0.8
    material_table: str | None = None
    out_dir: str = "out"
    debug_dump: bool = False
    threads: int = DEFAULT_THREADS

    def validate(self) -> None:
        for res in (self.render_res, self.uv_res):
            if res < 64 or res > 8192 or res & (res - 1):
                raise ConfigError(f"resolution {res} must be a power of two in [64, 8192]")
        if self.backend not in ("http", "dir", "oracle"):
            raise ConfigError(f"unknown backend {self.backend!r}")
        if self.backend == "http" and not self.endpoint:
            raise ConfigError("http backend requires --endpoint")
        if self.backend == "dir" and not self.labels_dir:
            raise ConfigError("dir backend requires --labels-dir")
        if self.backend == "oracle" and not self.palette_path:
            raise ConfigError("oracle backend requires --palette")
        if self.threads < 1:
            raise ConfigError("thread cap must be >= 1")

    def config_hash(self) -> str:
        canon = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()


def make_backend(cfg: PipelineConfig) -> SegmentationBackend:
    if cfg.backend == "http":
        return HttpBackend(cfg.endpoint)
    if cfg.backend == "dir":
        return DirectoryBackend(cfg.labels_dir)
    return PaletteBackend(OraclePalette.from_file(cfg.palette_path))


def _write_label_png(labels: np.ndarray, table: MaterialTable,
                     path: str | os.PathLike) -> None:
    """Indexed PNG: pixel value = class id, palette = display colors."""
    im = Image.fromarray(np.ascontiguousarray(labels), mode="P")
    palette = table.color_lut().flatten().tolist()
    im.putpalette(palette)
    atomic_save(lambda p: im.save(p, format="PNG"), path)


def run_bake(cfg: PipelineConfig, backend: SegmentationBackend | None = None,
             asset: Asset | None = None) -> dict:
    """Run the full pipeline; returns the manifest dict.

    Outputs in cfg.out_dir: material_labels.png (indexed, class ids with a
    display palette), metallic.png, roughness.png, preview_{i:03}.png for
    the five manual poses, and manifest.json.
    """
    cfg.validate()
    os.makedirs(cfg.out_dir, exist_ok=True)
    if backend is None:
        backend = make_backend(cfg)
    timings: dict[str, float] = {}

    t0 = time.perf_counter()
    if asset is None:
        asset = load_asset(cfg.mesh_path, cfg.albedo_path, name=cfg.name)
    timings["load"] = time.perf_counter() - t0

    schedule = build_schedule(
        cfg.seed, width=cfg.render_res, height=cfg.render_res
    )

    t0 = time.perf_counter()
    table = rasterize_uv(asset.mesh, cfg.uv_res)
    timings["uv_table"] = time.perf_counter() - t0

    def process_view(i: int) -> LabelUV:
        pose = schedule.poses[i]
        image, gbuf = render_view(asset, pose)
        labels = backend.segment(image, view_index=i)
        baked = bake_view(table, gbuf, labels, pose, view_index=i)
        if cfg.debug_dump:
            write_image(image, os.path.join(cfg.out_dir, f"view_{i:03}.png"))
            finite = np.where(np.isinf(gbuf.depth), 0.0, gbuf.depth)
            scale = finite.max() or 1.0
            write_gray16(
                np.round(finite / scale * 65535).astype(np.uint16),
                os.path.join(cfg.out_dir, f"depth_{i:03}.png"),
            )
            write_gray(baked.labels, os.path.join(cfg.out_dir, f"bake_{i:03}.png"))
        return baked

    t0 = time.perf_counter()
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        stack = list(pool.map(process_view, range(len(schedule))))
    timings["views"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    fusion_cfg = FusionConfig(
        alpha=cfg.alpha,
        unify_min_region=cfg.unify_min_region,
        unify_dominance=cfg.unify_dominance,
    )
    hist = accumulate(stack, schedule, fusion_cfg)
    fused = vote(hist, fusion_cfg)
    unified = region_unify(fused, table, asset.mesh, fusion_cfg)
    timings["fusion"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    mat_table = (
        load_material_table(cfg.material_table)
        if cfg.material_table
        else default_material_table()
    )
    pbr = emit_pbr(unified, mat_table)
    _write_label_png(pbr.labels, mat_table, os.path.join(cfg.out_dir, "material_labels.png"))
    write_gray(pbr.metallic, os.path.join(cfg.out_dir, "metallic.png"))
    write_gray(pbr.roughness, os.path.join(cfg.out_dir, "roughness.png"))
    timings["emit"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    light = DirectionalLight()
    for i, pose in enumerate(schedule.poses[:5]):
        img = render_preview(asset, pbr, pose, light)
        write_image(img, os.path.join(cfg.out_dir, f"preview_{i:03}.png"))
    timings["previews"] = time.perf_counter() - t0

    manifest = {
        "matbake_version": __version__,
        "numpy_version": np.__version__,
        "seed": cfg.seed,
        "config": asdict(cfg),
        "config_hash": cfg.config_hash(),
        "num_views": len(schedule),
        "unassigned_texels": pbr.unassigned_count,
        "uv_overlap_texels": table.overlap_count,
        "dropped_degenerate_faces": asset.mesh.dropped_faces,
        "timings_s": {k: round(v, 4) for k, v in timings.items()},
    }

    def save_manifest(p):
        with open(p, "w") as fh:
            json.dump(manifest, fh, indent=2)

    atomic_save(save_manifest, os.path.join(cfg.out_dir, "manifest.json"))
    return manifest
