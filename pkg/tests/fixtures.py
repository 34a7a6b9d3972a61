"""Procedural mesh/texture fixtures shared across tests."""

from __future__ import annotations

import math

import numpy as np

from matbake.assets import Asset
from matbake.mesh import TriangleMesh, normalize_mesh
from matbake.segmentation import OraclePalette, class_id
from matbake.texture import TextureImage


class MeshBuilder:
    """Accumulates quad grids into an indexed triangle mesh, tracking a
    material class per face."""

    def __init__(self):
        self.positions: list[tuple] = []
        self.uvs: list[tuple] = []
        self.faces_pos: list[list[int]] = []
        self.faces_uv: list[list[int]] = []
        self.face_class: list[int] = []

    def _add_vertex(self, p) -> int:
        self.positions.append(tuple(p))
        return len(self.positions) - 1

    def _add_uv(self, uv) -> int:
        self.uvs.append(tuple(uv))
        return len(self.uvs) - 1

    def add_grid(self, origin, edge_u, edge_v, subdiv, uv_rect, cls):
        """Add a subdiv x subdiv quad grid spanning origin + s*edge_u + t*edge_v,
        with UVs filling uv_rect = (u0, v0, u1, v1)."""
        origin = np.asarray(origin, float)
        edge_u = np.asarray(edge_u, float)
        edge_v = np.asarray(edge_v, float)
        u0, v0, u1, v1 = uv_rect
        n = subdiv + 1
        pidx = np.empty((n, n), dtype=int)
        tidx = np.empty((n, n), dtype=int)
        for j in range(n):
            for i in range(n):
                s, t = i / subdiv, j / subdiv
                pidx[j, i] = self._add_vertex(origin + s * edge_u + t * edge_v)
                tidx[j, i] = self._add_uv((u0 + s * (u1 - u0), v0 + t * (v1 - v0)))
        for j in range(subdiv):
            for i in range(subdiv):
                a, b = pidx[j, i], pidx[j, i + 1]
                c, d = pidx[j + 1, i + 1], pidx[j + 1, i]
                ta, tb = tidx[j, i], tidx[j, i + 1]
                tc, td = tidx[j + 1, i + 1], tidx[j + 1, i]
                self.faces_pos.append([a, b, c])
                self.faces_uv.append([ta, tb, tc])
                self.faces_pos.append([a, c, d])
                self.faces_uv.append([ta, tc, td])
                self.face_class.extend([cls, cls])

    def add_triangle(self, pts, uvs, cls):
        pi = [self._add_vertex(p) for p in pts]
        ti = [self._add_uv(t) for t in uvs]
        self.faces_pos.append(pi)
        self.faces_uv.append(ti)
        self.face_class.append(cls)

    def add_box(self, center, half, uv_rects, subdiv, cls, face_mask=None):
        """Axis-aligned box; uv_rects is 6 rects (+x, -x, +y, -y, +z, -z),
        faces wound so normals point outward. face_mask (6 bools) skips
        faces that would be permanently hidden in an assembly."""
        cx, cy, cz = center
        hx, hy, hz = half
        # (origin, edge_u, edge_v) per face, outward normal = edge_u x edge_v
        faces = [
            ((cx + hx, cy - hy, cz - hz), (0, 2 * hy, 0), (0, 0, 2 * hz)),  # +x
            ((cx - hx, cy + hy, cz - hz), (0, -2 * hy, 0), (0, 0, 2 * hz)),  # -x
            ((cx + hx, cy + hy, cz - hz), (-2 * hx, 0, 0), (0, 0, 2 * hz)),  # +y
            ((cx - hx, cy - hy, cz - hz), (2 * hx, 0, 0), (0, 0, 2 * hz)),   # -y
            ((cx - hx, cy - hy, cz + hz), (2 * hx, 0, 0), (0, 2 * hy, 0)),   # +z
            ((cx - hx, cy + hy, cz - hz), (2 * hx, 0, 0), (0, -2 * hy, 0)),  # -z
        ]
        if face_mask is None:
            face_mask = [True] * 6
        for (origin, eu, ev), rect, keep in zip(faces, uv_rects, face_mask):
            if keep:
                self.add_grid(origin, eu, ev, subdiv, rect, cls)

    def build(self, normalize: bool = True) -> tuple[TriangleMesh, np.ndarray]:
        mesh = TriangleMesh(
            positions=np.asarray(self.positions, float).reshape(-1, 3),
            uvs=np.asarray(self.uvs, float).reshape(-1, 2),
            faces_pos=np.asarray(self.faces_pos, np.int32).reshape(-1, 3),
            faces_uv=np.asarray(self.faces_uv, np.int32).reshape(-1, 3),
        )
        if normalize:
            mesh = normalize_mesh(mesh)
        return mesh, np.asarray(self.face_class, dtype=np.int64)


def atlas_tiles(nx: int, ny: int, pad: float = 0.12):
    """Generator of inner UV rects in an nx x ny tile grid; pad is the
    fraction of each tile left as margin."""
    for j in range(ny):
        for i in range(nx):
            u0 = (i + pad) / nx
            u1 = (i + 1 - pad) / nx
            v0 = (j + pad) / ny
            v1 = (j + 1 - pad) / ny
            yield (u0, v0, u1, v1)


def tile_outer_rect(index: int, nx: int, ny: int):
    j, i = divmod(index, nx)
    return (i / nx, j / ny, (i + 1) / nx, (j + 1) / ny)


def paint_atlas(class_tiles: list[tuple[int, int]], nx: int, ny: int,
                colors: dict[int, tuple[int, int, int]],
                size: int = 256) -> TextureImage:
    """Albedo texture with each tile's full rect painted in its class color."""
    px = np.zeros((size, size, 4), dtype=np.uint8)
    for tile_index, cls in class_tiles:
        u0, v0, u1, v1 = tile_outer_rect(tile_index, nx, ny)
        # v=0 is the bottom row of the image
        x0, x1 = int(u0 * size), int(math.ceil(u1 * size))
        y0 = int((1 - v1) * size)
        y1 = int(math.ceil((1 - v0) * size))
        px[y0:y1, x0:x1, :3] = colors[cls]
        px[y0:y1, x0:x1, 3] = 255
    return TextureImage(px)


# Saturated, well-separated oracle colors for the classes the fixtures use.
FIXTURE_COLORS = {
    class_id("metal"): (255, 40, 40),
    class_id("wood"): (40, 255, 40),
    class_id("plastic"): (40, 40, 255),
    class_id("glass"): (255, 255, 40),
    class_id("leather"): (255, 40, 255),
    class_id("fabric"): (40, 255, 255),
}


def fixture_palette(classes) -> OraclePalette:
    return OraclePalette(
        tuple((FIXTURE_COLORS[c], c) for c in sorted(set(classes)))
    )


def make_quad_mesh(subdiv: int = 1, normalize: bool = True) -> TriangleMesh:
    """Unit-ish quad in the x=0 plane facing +x, UVs spanning [0,1]^2."""
    b = MeshBuilder()
    b.add_grid((0, -1, -1), (0, 2, 0), (0, 0, 2), subdiv, (0, 0, 1, 1),
               class_id("metal"))
    mesh, _ = b.build(normalize=normalize)
    return mesh


def make_cube_asset(subdiv: int = 2, cls_name: str = "metal",
                    texture_size: int = 128) -> tuple[Asset, np.ndarray, OraclePalette]:
    """Single-class cube with a 3x2 face atlas, painted in palette color."""
    cls = class_id(cls_name)
    b = MeshBuilder()
    rects = list(atlas_tiles(3, 2))
    b.add_box((0, 0, 0), (1, 1, 1), rects, subdiv, cls)
    mesh, face_class = b.build()
    albedo = paint_atlas([(i, cls) for i in range(6)], 3, 2, FIXTURE_COLORS,
                         size=texture_size)
    return Asset(mesh, albedo, name="cube"), face_class, fixture_palette([cls])


# Cube faces as (axis-direction, tangent-u, tangent-v) triples.
_CUBE_FACES = (
    ((1, 0, 0), (0, 1, 0), (0, 0, 1)),
    ((-1, 0, 0), (0, -1, 0), (0, 0, 1)),
    ((0, 1, 0), (-1, 0, 0), (0, 0, 1)),
    ((0, -1, 0), (1, 0, 0), (0, 0, 1)),
    ((0, 0, 1), (0, 1, 0), (-1, 0, 0)),
    ((0, 0, -1), (0, 1, 0), (1, 0, 0)),
)


def make_sphere_mesh(subdiv: int = 16,
                     cls_name: str = "metal") -> tuple[TriangleMesh, np.ndarray]:
    """Unit cube-sphere: six gnomonic charts in a 3x2 atlas.

    Preferred over a lat-long sphere because texel area per unit of surface
    is nearly uniform, so texture-space statistics are not dominated by the
    poles.
    """
    cls = class_id(cls_name)
    b = MeshBuilder()
    tiles = list(atlas_tiles(3, 2))

    for (axis, tu, tv), (u0, v0, u1, v1) in zip(_CUBE_FACES, tiles):
        axis, tu, tv = np.array(axis, float), np.array(tu, float), np.array(tv, float)

        def point(j, i):
            s = -1.0 + 2.0 * i / subdiv
            t = -1.0 + 2.0 * j / subdiv
            p = axis + s * tu + t * tv
            return tuple(p / np.linalg.norm(p))

        def uv(j, i):
            return (u0 + (u1 - u0) * i / subdiv, v0 + (v1 - v0) * j / subdiv)

        for j in range(subdiv):
            for i in range(subdiv):
                p00, p10 = point(j, i), point(j, i + 1)
                p11, p01 = point(j + 1, i + 1), point(j + 1, i)
                t00, t10 = uv(j, i), uv(j, i + 1)
                t11, t01 = uv(j + 1, i + 1), uv(j + 1, i)
                b.add_triangle([p00, p10, p11], [t00, t10, t11], cls)
                b.add_triangle([p00, p11, p01], [t00, t11, t01], cls)

    mesh, face_class = b.build(normalize=True)
    return mesh, face_class


def make_sphere_asset(subdiv: int = 16, cls_name: str = "metal",
                      texture_size: int = 64) -> Asset:
    mesh, _ = make_sphere_mesh(subdiv, cls_name)
    cls = class_id(cls_name)
    px = np.zeros((texture_size, texture_size, 4), dtype=np.uint8)
    px[..., :3] = FIXTURE_COLORS[cls]
    px[..., 3] = 255
    return Asset(mesh, TextureImage(px), name="sphere")


_KEEP_ALL = (True,) * 6
_NO_TOP = (True, True, True, True, False, True)
_NO_BOTTOM = (True, True, True, True, True, False)
_NO_ENDS_X = (False, False, True, True, True, True)

CHAIR_PARTS = (
    # (name, center, half extents, class, visible faces)
    # Parts leave clearance gaps and omit permanently hidden faces so every
    # surviving surface is reachable by at least one scheduled view.
    ("seat", (0.0, 0.0, 0.0), (0.8, 0.8, 0.12), "fabric", _KEEP_ALL),
    ("back", (0.0, -0.7, 0.82), (0.8, 0.1, 0.65), "leather", _NO_BOTTOM),
    ("leg0", (0.6, 0.6, -0.72), (0.1, 0.1, 0.55), "metal", _NO_TOP),
    ("leg1", (-0.6, 0.6, -0.72), (0.1, 0.1, 0.55), "metal", _NO_TOP),
    ("leg2", (0.6, -0.6, -0.72), (0.1, 0.1, 0.55), "metal", _NO_TOP),
    ("leg3", (-0.6, -0.6, -0.72), (0.1, 0.1, 0.55), "metal", _NO_TOP),
    ("bar", (0.0, 0.6, -0.95), (0.45, 0.07, 0.07), "wood", _NO_ENDS_X),
)


def make_chair_asset(subdiv: int = 3,
                     texture_size: int = 512) -> tuple[Asset, np.ndarray, OraclePalette]:
    """Chair-like fixture: 7 boxes, 4 material classes, ~670 triangles at
    subdiv=3, one UV tile per visible box face."""
    nx, ny = 7, 6
    rects = list(atlas_tiles(nx, ny))
    b = MeshBuilder()
    class_tiles = []
    for k, (_, center, half, cls_name, mask) in enumerate(CHAIR_PARTS):
        cls = class_id(cls_name)
        tile_rects = rects[6 * k: 6 * k + 6]
        b.add_box(center, half, tile_rects, subdiv, cls, face_mask=mask)
        class_tiles.extend(
            (6 * k + f, cls) for f in range(6) if mask[f]
        )
    mesh, face_class = b.build()
    albedo = paint_atlas(class_tiles, nx, ny, FIXTURE_COLORS, size=texture_size)
    palette = fixture_palette(face_class.tolist())
    return Asset(mesh, albedo, name="chair"), face_class, palette
