"""Triangle mesh container, Wavefront OBJ loading, and normalization."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateExtentError,
    EmptyMeshError,
    MissingUVsError,
    ParseError,
)

# Relative area threshold below which a triangle counts as degenerate.
_DEGENERATE_REL_AREA = 1e-12


@dataclass(frozen=True)
class TriangleMesh:
    """Indexed triangle mesh with per-corner UVs.

    positions: (P, 3) float64 vertex positions in object units.
    uvs:       (T, 2) float64 texture coordinates in [0, 1]^2.
    faces_pos: (F, 3) int32 position indices per triangle corner.
    faces_uv:  (F, 3) int32 UV indices per triangle corner.
    normals / faces_nrm: optional per-vertex normals and their indices.
    dropped_faces: number of degenerate faces discarded at load time.
    """

    positions: np.ndarray
    uvs: np.ndarray
    faces_pos: np.ndarray
    faces_uv: np.ndarray
    normals: np.ndarray | None = None
    faces_nrm: np.ndarray | None = None
    dropped_faces: int = 0

    @property
    def num_faces(self) -> int:
        return len(self.faces_pos)

    @property
    def num_vertices(self) -> int:
        return len(self.positions)

    def corner_positions(self) -> np.ndarray:
        """(F, 3, 3) positions of the three corners of every face."""
        return self.positions[self.faces_pos]

    def corner_uvs(self) -> np.ndarray:
        """(F, 3, 2) UVs of the three corners of every face."""
        return self.uvs[self.faces_uv]

    def face_normals(self) -> np.ndarray:
        """(F, 3) unit geometric normals (right-hand rule over corner order)."""
        tri = self.corner_positions()
        n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        length = np.linalg.norm(n, axis=1, keepdims=True)
        length[length == 0] = 1.0
        return n / length

    def validate(self) -> None:
        """Check index ranges and shape invariants; raises ParseError."""
        if self.faces_pos.shape != self.faces_uv.shape or self.faces_pos.ndim != 2 \
                or (self.num_faces and self.faces_pos.shape[1] != 3):
            raise ParseError("face arrays must be (F, 3)")
        if self.num_faces:
            if self.faces_pos.min() < 0 or self.faces_pos.max() >= len(self.positions):
                raise ParseError("position index out of range")
            if self.faces_uv.min() < 0 or self.faces_uv.max() >= len(self.uvs):
                raise ParseError("uv index out of range")
            if self.faces_nrm is not None and self.normals is not None and len(self.faces_nrm):
                if self.faces_nrm.min() < 0 or self.faces_nrm.max() >= len(self.normals):
                    raise ParseError("normal index out of range")


def wrap_uvs(uvs: np.ndarray) -> np.ndarray:
    """Canonicalize UVs into [0, 1]^2 by repeat wrapping.

    Values already inside [0, 1] (including exactly 1.0) are kept as-is so
    meshes that span the full tile stay full-tile.
    """
    uvs = np.asarray(uvs, dtype=np.float64)
    outside = (uvs < 0.0) | (uvs > 1.0)
    wrapped = uvs - np.floor(uvs)
    return np.where(outside, wrapped, uvs)


def _parse_face_corner(token: str, lineno: int) -> tuple[int, int | None, int | None]:
    parts = token.split("/")
    try:
        vi = int(parts[0])
        ti = int(parts[1]) if len(parts) > 1 and parts[1] != "" else None
        ni = int(parts[2]) if len(parts) > 2 and parts[2] != "" else None
    except ValueError:
        raise ParseError(f"bad face corner {token!r}", line=lineno) from None
    return vi, ti, ni


def _resolve_index(idx: int, count: int, lineno: int) -> int:
    # OBJ indices are 1-based; negative indices count from the end.
    resolved = idx - 1 if idx > 0 else count + idx
    if resolved < 0 or resolved >= count:
        raise ParseError(f"index {idx} out of range (have {count})", line=lineno)
    return resolved


def load_mesh(path: str | os.PathLike) -> TriangleMesh:
    """Load a Wavefront OBJ file as a TriangleMesh.

    Polygons are fan-triangulated from corner 0. Faces without vt indices are
    rejected (MissingUVsError). Degenerate (zero-area) triangles are dropped
    and counted in `dropped_faces`.
    """
    positions: list[list[float]] = []
    uvs: list[list[float]] = []
    normals: list[list[float]] = []
    tri_pos: list[list[int]] = []
    tri_uv: list[list[int]] = []
    tri_nrm: list[list[int]] = []
    any_normals = False

    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            tag = tokens[0]
            try:
                if tag == "v":
                    positions.append([float(x) for x in tokens[1:4]])
                elif tag == "vt":
                    uvs.append([float(x) for x in tokens[1:3]])
                elif tag == "vn":
                    normals.append([float(x) for x in tokens[1:4]])
                elif tag == "f":
                    corners = [_parse_face_corner(t, lineno) for t in tokens[1:]]
                    if len(corners) < 3:
                        raise ParseError("face with fewer than 3 corners", line=lineno)
                    if any(c[1] is None for c in corners):
                        raise MissingUVsError(
                            f"face at line {lineno} has no texture-coordinate indices"
                        )
                    resolved = [
                        (
                            _resolve_index(vi, len(positions), lineno),
                            _resolve_index(ti, len(uvs), lineno),
                            _resolve_index(ni, len(normals), lineno) if ni is not None else -1,
                        )
                        for vi, ti, ni in corners
                    ]
                    if any(c[2] >= 0 for c in resolved):
                        any_normals = True
                    for k in range(1, len(resolved) - 1):
                        fan = (resolved[0], resolved[k], resolved[k + 1])
                        tri_pos.append([c[0] for c in fan])
                        tri_uv.append([c[1] for c in fan])
                        tri_nrm.append([c[2] for c in fan])
                # other records (o, g, s, usemtl, mtllib, ...) are ignored
            except (ValueError, IndexError):
                raise ParseError(f"malformed {tag!r} record", line=lineno) from None

    pos = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    uv = wrap_uvs(np.asarray(uvs, dtype=np.float64).reshape(-1, 2))
    fp = np.asarray(tri_pos, dtype=np.int32).reshape(-1, 3)
    fu = np.asarray(tri_uv, dtype=np.int32).reshape(-1, 3)
    fn = np.asarray(tri_nrm, dtype=np.int32).reshape(-1, 3)

    # Drop degenerate triangles (zero area in object space).
    dropped = 0
    if len(fp):
        tri = pos[fp]
        areas2 = np.linalg.norm(
            np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1
        )
        extent = pos.max(axis=0) - pos.min(axis=0)
        diag2 = float(np.dot(extent, extent))
        keep = areas2 > _DEGENERATE_REL_AREA * max(diag2, 1e-300)
        dropped = int((~keep).sum())
        fp, fu, fn = fp[keep], fu[keep], fn[keep]

    mesh = TriangleMesh(
        positions=pos,
        uvs=uv,
        faces_pos=fp,
        faces_uv=fu,
        normals=np.asarray(normals, dtype=np.float64).reshape(-1, 3) if any_normals else None,
        faces_nrm=fn if any_normals else None,
        dropped_faces=dropped,
    )
    mesh.validate()
    return mesh


def normalize_mesh(mesh: TriangleMesh) -> TriangleMesh:
    """Center the bounding box at the origin and scale max vertex norm to 1."""
    if mesh.num_vertices == 0 or mesh.num_faces == 0:
        raise EmptyMeshError("cannot normalize an empty mesh")
    lo = mesh.positions.min(axis=0)
    hi = mesh.positions.max(axis=0)
    centered = mesh.positions - (lo + hi) / 2.0
    radius = float(np.linalg.norm(centered, axis=1).max())
    if radius == 0.0:
        raise DegenerateExtentError("mesh has zero spatial extent")
    return TriangleMesh(
        positions=centered / radius,
        uvs=mesh.uvs,
        faces_pos=mesh.faces_pos,
        faces_uv=mesh.faces_uv,
        normals=mesh.normals,
        faces_nrm=mesh.faces_nrm,
        dropped_faces=mesh.dropped_faces,
    )
