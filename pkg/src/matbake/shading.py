"""Relit previews: single-scatter GGX metallic-roughness shading with one
directional light plus constant ambient."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assets import Asset
from .camera import CameraPose, camera_basis
from .errors import ShapeMismatchError
from .materials import PBRMaps
from .raster import FACE_NONE, rasterize, sample_bilinear
from .texture import TextureImage

AMBIENT = 0.08
DIELECTRIC_F0 = 0.04
_EPS = 1e-9


@dataclass(frozen=True)
class DirectionalLight:
    direction: tuple[float, float, float] = (-1.0, -1.0, -1.0)
    intensity: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def unit_direction(self) -> np.ndarray:
        d = np.asarray(self.direction, dtype=np.float64)
        return d / np.linalg.norm(d)


def ggx_specular(n, l, v, f0, roughness):
    """Specular microfacet term (reciprocal in l/v). All inputs (N, 3) or
    broadcastable; f0 is (N, 3), roughness (N,). Returns (N, 3)."""
    alpha = np.clip(roughness, 1e-3, 1.0) ** 2
    h = l + v
    h = h / np.maximum(np.linalg.norm(h, axis=-1, keepdims=True), _EPS)
    nl = np.clip((n * l).sum(-1), 0.0, 1.0)
    nv = np.clip((n * v).sum(-1), 0.0, 1.0)
    nh = np.clip((n * h).sum(-1), 0.0, 1.0)
    vh = np.clip((v * h).sum(-1), 0.0, 1.0)

    a2 = alpha * alpha
    denom = nh * nh * (a2 - 1.0) + 1.0
    d = a2 / np.maximum(np.pi * denom * denom, _EPS)

    def g1(nx):
        return 2.0 * nx / np.maximum(nx + np.sqrt(a2 + (1.0 - a2) * nx * nx), _EPS)

    g = g1(nl) * g1(nv)
    fresnel = f0 + (1.0 - f0) * (1.0 - vh[..., None]) ** 5
    spec = (d * g / np.maximum(4.0 * nl * nv, _EPS))[..., None] * fresnel
    return spec


def render_preview(asset: Asset, pbr: PBRMaps, pose: CameraPose,
                   light: DirectionalLight = DirectionalLight(),
                   ambient: float = AMBIENT) -> TextureImage:
    """Render the asset with its baked metallic/roughness maps.

    Diffuse is Lambert scaled by (1 - metallic); specular is GGX with
    F0 = mix(0.04, albedo, metallic). Background pixels have alpha 0.
    """
    mesh = asset.mesh
    res = pbr.metallic.shape[0]
    if pbr.metallic.shape != pbr.roughness.shape:
        raise ShapeMismatchError("metallic and roughness maps disagree in shape")

    gbuf = rasterize(mesh.positions, mesh.faces_pos, pose)
    out = np.zeros((pose.height, pose.width, 4), dtype=np.uint8)
    covered = gbuf.face_id != FACE_NONE
    if not covered.any():
        return TextureImage(out)

    fids = gbuf.face_id[covered]
    bary = gbuf.bary[covered]
    corner_uv = mesh.uvs[mesh.faces_uv[fids]]
    uv = np.einsum("nk,nkc->nc", bary, corner_uv)
    corner_pos = mesh.positions[mesh.faces_pos[fids]]
    world = np.einsum("nk,nkc->nc", bary, corner_pos)

    albedo = sample_bilinear(asset.albedo, uv[:, 0], uv[:, 1]) / 255.0
    # Material parameters are categorical per texel: nearest sampling only.
    tx = np.clip((uv[:, 0] * res).astype(np.int64), 0, res - 1)
    ty = np.clip(((1.0 - uv[:, 1]) * res).astype(np.int64), 0, res - 1)
    metallic = pbr.metallic[ty, tx] / 255.0
    roughness = pbr.roughness[ty, tx] / 255.0

    normals = mesh.face_normals()[fids]
    eye, _, _, _ = camera_basis(pose)
    v = eye - world
    v /= np.maximum(np.linalg.norm(v, axis=1, keepdims=True), _EPS)
    # Shade double-sided: flip normals that face away from the camera.
    flip = (normals * v).sum(-1) < 0.0
    normals = np.where(flip[:, None], -normals, normals)

    l = -light.unit_direction()
    l = np.broadcast_to(l, normals.shape)
    intensity = np.asarray(light.intensity, dtype=np.float64)

    f0 = DIELECTRIC_F0 * (1.0 - metallic[:, None]) + albedo * metallic[:, None]
    diffuse = albedo / np.pi * (1.0 - metallic[:, None])
    spec = ggx_specular(normals, l, v, f0, roughness)
    nl = np.clip((normals * l).sum(-1), 0.0, 1.0)
    radiance = (diffuse + spec) * intensity * nl[:, None] + ambient * albedo

    out[covered, :3] = np.clip(np.rint(radiance * 255.0), 0, 255).astype(np.uint8)
    out[covered, 3] = 255
    return TextureImage(out)
