"""Software z-buffer rasterizer with perspective-correct interpolation.

Coverage uses edge functions with a top-left fill rule so triangles sharing
an edge never double-cover or gap a pixel. Edge functions are evaluated with
a canonical vertex ordering, which makes the two sides of a shared edge
compute exactly opposite values (bit-for-bit), making the fill rule
watertight in floating point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assets import Asset
from .camera import NEAR_PLANE, CameraPose, project_points
from .texture import TextureImage

FACE_NONE = -1
DEPTH_INF = np.inf


@dataclass
class GBuffer:
    """Per-pixel geometry buffer: face index (-1 = background),
    perspective-correct barycentric weights, and camera-space depth."""

    face_id: np.ndarray   # (H, W) int32
    bary: np.ndarray      # (H, W, 3) float64
    depth: np.ndarray     # (H, W) float64, +inf where empty

    @classmethod
    def empty(cls, width: int, height: int) -> "GBuffer":
        return cls(
            face_id=np.full((height, width), FACE_NONE, dtype=np.int32),
            bary=np.zeros((height, width, 3)),
            depth=np.full((height, width), DEPTH_INF),
        )


def canonical_orient(ax, ay, bx, by, px, py):
    """Signed area form of orient2d(a, b, p), computed with the segment's
    endpoints in a canonical (lexicographic) order so orient(a,b,p) ==
    -orient(b,a,p) exactly in floating point. px/py may be arrays."""
    if (ax, ay) <= (bx, by):
        val = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
        return val
    val = (ax - bx) * (py - by) - (ay - by) * (px - bx)
    return -val


def edge_is_top_left(ax, ay, bx, by) -> bool:
    """Top-left classification for the directed edge a->b, in y-down screen
    coordinates with positive-orient winding."""
    ey = by - ay
    ex = bx - ax
    return (ey == 0.0 and ex > 0.0) or ey < 0.0


def rasterize(mesh_positions: np.ndarray, faces_pos: np.ndarray,
              pose: CameraPose) -> GBuffer:
    """Rasterize triangles into a fresh G-buffer.

    Triangles with any vertex at or behind the near plane are skipped
    (the schedule keeps the whole normalized asset well in front).
    """
    gbuf = GBuffer.empty(pose.width, pose.height)
    if len(faces_pos) == 0:
        return gbuf

    px, py, z, in_front = project_points(pose, mesh_positions)
    width, height = pose.width, pose.height

    for fi in range(len(faces_pos)):
        i0, i1, i2 = faces_pos[fi]
        if not (in_front[i0] and in_front[i1] and in_front[i2]):
            continue
        vx = [px[i0], px[i1], px[i2]]
        vy = [py[i0], py[i1], py[i2]]
        vz = [z[i0], z[i1], z[i2]]
        order = (0, 1, 2)
        area = canonical_orient(vx[0], vy[0], vx[1], vy[1], vx[2], vy[2])
        if area == 0.0:
            continue
        if area < 0.0:
            order = (0, 2, 1)
        ax = [vx[k] for k in order]
        ay = [vy[k] for k in order]
        az = [vz[k] for k in order]

        x_lo = max(0, int(np.ceil(min(ax) - 0.5)))
        x_hi = min(width - 1, int(np.floor(max(ax) - 0.5)))
        y_lo = max(0, int(np.ceil(min(ay) - 0.5)))
        y_hi = min(height - 1, int(np.floor(max(ay) - 0.5)))
        if x_lo > x_hi or y_lo > y_hi:
            continue

        cx = np.arange(x_lo, x_hi + 1) + 0.5
        cy = np.arange(y_lo, y_hi + 1) + 0.5
        gx, gy = np.meshgrid(cx, cy)

        # w[k] is the edge function opposite corner k (edge k+1 -> k+2).
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
        # Perspective correction: interpolate 1/z linearly in screen space.
        q0 = w[0] / (wsum * az[0])
        q1 = w[1] / (wsum * az[1])
        q2 = w[2] / (wsum * az[2])
        inv_z = q0 + q1 + q2
        depth = 1.0 / inv_z
        b0 = q0 / inv_z
        b1 = q1 / inv_z
        b2 = q2 / inv_z

        tile_depth = gbuf.depth[y_lo:y_hi + 1, x_lo:x_hi + 1]
        win = inside & (depth < tile_depth)
        if not win.any():
            continue
        tile_depth[win] = depth[win]
        gbuf.face_id[y_lo:y_hi + 1, x_lo:x_hi + 1][win] = fi
        bary = np.stack([b0, b1, b2], axis=-1)
        if order != (0, 1, 2):
            bary = bary[..., [0, 2, 1]]
        gbuf.bary[y_lo:y_hi + 1, x_lo:x_hi + 1][win] = bary[win]
    return gbuf


def sample_bilinear(texture: TextureImage, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Bilinearly sample RGB at UV coordinates (repeat wrap); v=0 is the
    bottom image row. Returns float64 (N, 3) in [0, 255]."""
    h, w = texture.height, texture.width
    x = u * w - 0.5
    y = (1.0 - v) * h - 0.5
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    fx = x - x0
    fy = y - y0
    x0w, x1w = x0 % w, (x0 + 1) % w
    y0w, y1w = y0 % h, (y0 + 1) % h
    rgb = texture.pixels[..., :3].astype(np.float64)
    c00 = rgb[y0w, x0w]
    c10 = rgb[y0w, x1w]
    c01 = rgb[y1w, x0w]
    c11 = rgb[y1w, x1w]
    fx = fx[..., None]
    fy = fy[..., None]
    top = c00 * (1 - fx) + c10 * fx
    bot = c01 * (1 - fx) + c11 * fx
    return top * (1 - fy) + bot * fy


def render_view(asset: Asset, pose: CameraPose) -> tuple[TextureImage, GBuffer]:
    """Render one unlit albedo view plus its G-buffer.

    Color is the albedo sampled bilinearly at the perspective-correct
    interpolated UV; background pixels have alpha 0.
    """
    mesh = asset.mesh
    gbuf = rasterize(mesh.positions, mesh.faces_pos, pose)
    color = np.zeros((pose.height, pose.width, 4), dtype=np.uint8)
    covered = gbuf.face_id != FACE_NONE
    if covered.any():
        fids = gbuf.face_id[covered]
        bary = gbuf.bary[covered]
        corner_uv = mesh.uvs[mesh.faces_uv[fids]]  # (N, 3, 2)
        uv = np.einsum("nk,nkc->nc", bary, corner_uv)
        rgb = sample_bilinear(asset.albedo, uv[:, 0], uv[:, 1])
        color[covered, :3] = np.clip(np.rint(rgb), 0, 255).astype(np.uint8)
        color[covered, 3] = 255
    return TextureImage(color), gbuf
