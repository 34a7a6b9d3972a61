"""Texture-space baking: unproject per-view label maps onto the UV layout.

The bake is texel-centric: a precomputed table maps every texel to a point
on the mesh surface (face, barycentric, world position, normal); each view
then gathers its label by projecting that point into the view and testing
visibility against the view's depth buffer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import CameraPose, camera_basis, project_points
from .errors import ShapeMismatchError
from .mesh import TriangleMesh
from .raster import FACE_NONE, GBuffer, canonical_orient, edge_is_top_left
from .segmentation import BACKGROUND, LabelMap

VIEW_FUSED = -1

# Relative depth tolerance when matching a texel against the view's z-buffer.
DEPTH_BIAS_SCALE = 1e-3
# Texels seen at normal-dot-view below this carry unreliable labels.
GRAZING_COS = 0.1


@dataclass
class TexelSampleTable:
    """Per-texel surface samples for one (mesh, resolution) pair.

    face_id is -1 where no triangle covers the texel center. Overlapping UV
    charts are an asset defect: contested texels go to the lowest face id
    and are tallied in overlap_count.
    """

    resolution: int
    face_id: np.ndarray    # (R, R) int32
    bary: np.ndarray       # (R, R, 3) float64, UV-space barycentric
    world_pos: np.ndarray  # (R, R, 3) float64
    normal: np.ndarray     # (R, R, 3) float64, geometric face normal
    overlap_count: int = 0

    @property
    def assigned(self) -> np.ndarray:
        return self.face_id != FACE_NONE


@dataclass(frozen=True)
class LabelUV:
    """Texture-space class raster; 255 = unassigned/background."""

    labels: np.ndarray  # (R, R) uint8
    view_index: int = VIEW_FUSED

    @property
    def resolution(self) -> int:
        return self.labels.shape[0]


def rasterize_uv(mesh: TriangleMesh, resolution: int) -> TexelSampleTable:
    """Rasterize every triangle in UV space at texel centers.

    Texel (row j, col i) has center (u, v) = ((i+0.5)/R, 1-(j+0.5)/R);
    row 0 is the top of the exported texture (v near 1).
    """
    if not 64 <= resolution <= 8192:
        raise ValueError(f"UV resolution {resolution} outside [64, 8192]")
    res = resolution
    face_id = np.full((res, res), FACE_NONE, dtype=np.int32)
    bary = np.zeros((res, res, 3))
    world = np.zeros((res, res, 3))
    normal = np.zeros((res, res, 3))
    claims = np.zeros((res, res), dtype=np.int32)

    corner_uv = mesh.corner_uvs()
    corner_pos = mesh.corner_positions()
    face_n = mesh.face_normals()

    for fi in range(mesh.num_faces):
        uv = corner_uv[fi]
        # UV -> texel pixel space, y down.
        vx = uv[:, 0] * res
        vy = (1.0 - uv[:, 1]) * res
        order = (0, 1, 2)
        area = canonical_orient(vx[0], vy[0], vx[1], vy[1], vx[2], vy[2])
        if area == 0.0:
            continue
        if area < 0.0:
            order = (0, 2, 1)
        ax = [vx[k] for k in order]
        ay = [vy[k] for k in order]

        x_lo = max(0, int(np.ceil(min(ax) - 0.5)))
        x_hi = min(res - 1, int(np.floor(max(ax) - 0.5)))
        y_lo = max(0, int(np.ceil(min(ay) - 0.5)))
        y_hi = min(res - 1, int(np.floor(max(ay) - 0.5)))
        if x_lo > x_hi or y_lo > y_hi:
            continue
        cx = np.arange(x_lo, x_hi + 1) + 0.5
        cy = np.arange(y_lo, y_hi + 1) + 0.5
        gx, gy = np.meshgrid(cx, cy)

        inside = np.ones(gx.shape, dtype=bool)
        w = []
        for k in range(3):
            a, b = (k + 1) % 3, (k + 2) % 3
            wk = canonical_orient(ax[a], ay[a], ax[b], ay[b], gx, gy)
            if edge_is_top_left(ax[a], ay[a], ax[b], ay[b]):
                inside &= wk >= 0.0
            else:
                inside &= wk > 0.0
            w.append(wk)
        if not inside.any():
            continue

        wsum = w[0] + w[1] + w[2]
        b0 = w[0] / wsum
        b1 = w[1] / wsum
        b2 = w[2] / wsum
        tri_bary = np.stack([b0, b1, b2], axis=-1)
        if order != (0, 1, 2):
            tri_bary = tri_bary[..., [0, 2, 1]]

        tile = (slice(y_lo, y_hi + 1), slice(x_lo, x_hi + 1))
        claims[tile][inside] += 1
        free = inside & (face_id[tile] == FACE_NONE)
        if not free.any():
            continue
        face_id[tile][free] = fi
        bary[tile][free] = tri_bary[free]
        world[tile][free] = tri_bary[free] @ corner_pos[fi]
        normal[tile][free] = face_n[fi]

    return TexelSampleTable(
        resolution=res,
        face_id=face_id,
        bary=bary,
        world_pos=world,
        normal=normal,
        overlap_count=int((claims >= 2).sum()),
    )


def bake_view(table: TexelSampleTable, gbuffer: GBuffer, labelmap: LabelMap,
              pose: CameraPose, view_index: int = 0) -> LabelUV:
    """Gather one view's labels into texture space.

    A texel receives a label only when its surface point projects in-frame,
    survives the depth test against the view's z-buffer, and faces the
    camera above the grazing threshold; otherwise it stays 255.
    """
    if gbuffer.depth.shape != labelmap.labels.shape:
        raise ShapeMismatchError("G-buffer and label map disagree in shape")
    if labelmap.labels.shape != (pose.height, pose.width):
        raise ShapeMismatchError("label map does not match pose resolution")

    res = table.resolution
    out = np.full((res, res), BACKGROUND, dtype=np.uint8)
    mask = table.assigned
    if not mask.any():
        return LabelUV(out, view_index=view_index)

    pts = table.world_pos[mask]
    normals = table.normal[mask]
    px, py, depth, in_front = project_points(pose, pts)

    ix = np.floor(px).astype(np.int64)
    iy = np.floor(py).astype(np.int64)
    ok = in_front & (ix >= 0) & (ix < pose.width) & (iy >= 0) & (iy < pose.height)

    eye, _, _, _ = camera_basis(pose)
    to_cam = eye - pts
    to_cam /= np.linalg.norm(to_cam, axis=1, keepdims=True)
    cos_inc = (normals * to_cam).sum(axis=1)
    ok &= cos_inc >= GRAZING_COS

    ixc = np.clip(ix, 0, pose.width - 1)
    iyc = np.clip(iy, 0, pose.height - 1)
    # Slope-scaled depth bias: at grazing incidence the surface depth varies
    # within a single pixel by footprint * tan(theta), so a fixed bias would
    # reject valid texels near silhouettes. A z-buffer pixel showing the
    # texel's own face is accepted outright.
    eps = DEPTH_BIAS_SCALE * pose.radius / np.clip(cos_inc, GRAZING_COS, 1.0)
    seen_face = gbuffer.face_id[iyc, ixc]
    own_face = table.face_id[mask]
    ok &= (seen_face == own_face) | (
        np.abs(depth - gbuffer.depth[iyc, ixc]) <= eps
    )

    labels = np.full(len(pts), BACKGROUND, dtype=np.uint8)
    labels[ok] = labelmap.labels[iyc[ok], ixc[ok]]
    out[mask] = labels
    return LabelUV(out, view_index=view_index)
