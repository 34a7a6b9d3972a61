"""Asset bundle: a UV-parameterized mesh plus its albedo texture."""

from __future__ import annotations

import os
from dataclasses import dataclass

from .mesh import TriangleMesh, load_mesh, normalize_mesh
from .texture import TextureImage, load_texture


@dataclass(frozen=True)
class Asset:
    mesh: TriangleMesh
    albedo: TextureImage
    name: str = "asset"


def load_asset(mesh_path: str | os.PathLike, albedo_path: str | os.PathLike,
               name: str | None = None, normalize: bool = True) -> Asset:
    """Load mesh + albedo and (by default) normalize the mesh to the unit
    sphere so the fixed-radius camera schedule applies."""
    mesh = load_mesh(mesh_path)
    if normalize:
        mesh = normalize_mesh(mesh)
    albedo = load_texture(albedo_path)
    if name is None:
        name = os.path.splitext(os.path.basename(os.fspath(mesh_path)))[0]
    return Asset(mesh=mesh, albedo=albedo, name=name)
