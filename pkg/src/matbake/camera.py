"""Multi-view camera schedule and projection math.

World convention: Z-up, asset normalized to the unit sphere at the origin.
A pose is a camera on the sphere of the given radius at (elevation, azimuth),
looking at the origin. The schedule is 5 fixed inspection poses plus 12
azimuths x 3 elevations (0 deg and two random draws in the open intervals
(0, 30) and (-30, 0) degrees).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_RADIUS = 2.8
DEFAULT_FOV_Y = 40.0
DEFAULT_RESOLUTION = 1024
NEAR_PLANE = 0.1
FAR_PLANE = 100.0

# Elevation/azimuth pairs of the five fixed inspection views.
MANUAL_ANGLES = ((90.0, 0.0), (15.0, 0.0), (15.0, 90.0), (15.0, 180.0), (15.0, 270.0))

NUM_AZIMUTHS = 12
ELEVATION_SPREAD = 30.0


class SplitMix64:
    """Minimal splitmix64 stream; portable across implementations."""

    MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        self.state = seed & self.MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & self.MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self.MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self.MASK
        return z ^ (z >> 31)

    def uniform_open(self, lo: float, hi: float) -> float:
        # ((x >> 11) + 0.5) / 2^53 is uniform on (0, 1), endpoints excluded.
        u = ((self.next_u64() >> 11) + 0.5) / float(1 << 53)
        return lo + u * (hi - lo)


@dataclass(frozen=True)
class CameraPose:
    elevation: float  # degrees, [-90, 90]
    azimuth: float    # degrees, [0, 360)
    radius: float = DEFAULT_RADIUS
    fov_y: float = DEFAULT_FOV_Y
    width: int = DEFAULT_RESOLUTION
    height: int = DEFAULT_RESOLUTION
    manual: bool = False

    def __post_init__(self):
        if not -90.0 <= self.elevation <= 90.0:
            raise ValueError(f"elevation {self.elevation} outside [-90, 90]")
        if not 0.0 <= self.azimuth < 360.0:
            raise ValueError(f"azimuth {self.azimuth} outside [0, 360)")
        if self.radius <= 1.0:
            raise ValueError("camera radius must exceed the unit asset sphere")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")


@dataclass(frozen=True)
class ViewSchedule:
    poses: tuple[CameraPose, ...]
    seed: int

    def __len__(self) -> int:
        return len(self.poses)

    def __iter__(self):
        return iter(self.poses)

    def weights(self, alpha: float) -> np.ndarray:
        """Per-view vote weights: alpha for manual poses, 1 otherwise."""
        return np.array([alpha if p.manual else 1.0 for p in self.poses])


def build_schedule(seed: int, radius: float = DEFAULT_RADIUS,
                   fov_y: float = DEFAULT_FOV_Y,
                   width: int = DEFAULT_RESOLUTION,
                   height: int = DEFAULT_RESOLUTION) -> ViewSchedule:
    """Build the 41-pose schedule: 5 manual views then, per 30-degree
    azimuth, elevations 0, one draw in (0, 30), one draw in (-30, 0)."""
    common = dict(radius=radius, fov_y=fov_y, width=width, height=height)
    poses = [
        CameraPose(elevation=e, azimuth=a, manual=True, **common)
        for e, a in MANUAL_ANGLES
    ]
    rng = SplitMix64(seed)
    for k in range(NUM_AZIMUTHS):
        azim = k * (360.0 / NUM_AZIMUTHS)
        upper = rng.uniform_open(0.0, ELEVATION_SPREAD)
        lower = rng.uniform_open(-ELEVATION_SPREAD, 0.0)
        poses.append(CameraPose(elevation=0.0, azimuth=azim, **common))
        poses.append(CameraPose(elevation=upper, azimuth=azim, **common))
        poses.append(CameraPose(elevation=lower, azimuth=azim, **common))
    return ViewSchedule(poses=tuple(poses), seed=seed)


def camera_basis(pose: CameraPose) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Return (eye, right, up, forward) world-space unit axes for a pose.

    Near the poles (|elevation| > 89 deg) the world-up reference switches
    from +Z to -Y so the basis stays well defined; top views therefore have
    image-up along -Y.
    """
    el = math.radians(pose.elevation)
    az = math.radians(pose.azimuth)
    eye = pose.radius * np.array(
        [math.cos(el) * math.cos(az), math.cos(el) * math.sin(az), math.sin(el)]
    )
    forward = -eye / np.linalg.norm(eye)
    ref_up = np.array([0.0, -1.0, 0.0]) if abs(pose.elevation) > 89.0 else np.array([0.0, 0.0, 1.0])
    right = np.cross(forward, ref_up)
    right = right / np.linalg.norm(right)
    up = np.cross(right, forward)
    return eye, right, up, forward


def pose_to_matrices(pose: CameraPose) -> tuple[np.ndarray, np.ndarray]:
    """(view, projection) 4x4 matrices.

    The view matrix maps world points to camera space with +z along the view
    direction (depth increases away from the camera). The projection maps the
    frustum to NDC in [-1, 1]^3 with ndc z monotone in depth.
    """
    eye, right, up, forward = camera_basis(pose)
    view = np.eye(4)
    view[0, :3], view[0, 3] = right, -np.dot(right, eye)
    view[1, :3], view[1, 3] = up, -np.dot(up, eye)
    view[2, :3], view[2, 3] = forward, -np.dot(forward, eye)

    f = 1.0 / math.tan(math.radians(pose.fov_y) / 2.0)
    aspect = pose.width / pose.height
    n, fp = NEAR_PLANE, FAR_PLANE
    proj = np.zeros((4, 4))
    proj[0, 0] = f / aspect
    proj[1, 1] = f
    proj[2, 2] = (fp + n) / (fp - n)
    proj[2, 3] = -2.0 * fp * n / (fp - n)
    proj[3, 2] = 1.0
    return view, proj


def project_points(pose: CameraPose, points: np.ndarray):
    """Project world points to pixel coordinates.

    Returns (px, py, depth, in_front): pixel coordinates (origin top-left,
    +y down, pixel centers at half-integers), camera-space depth along the
    view axis, and whether each point lies in front of the near plane.
    Points behind the camera are not projectable; their px/py are undefined.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    eye, right, up, forward = camera_basis(pose)
    rel = pts - eye
    x = rel @ right
    y = rel @ up
    z = rel @ forward
    in_front = z > NEAR_PLANE
    zsafe = np.where(z > 1e-12, z, 1.0)
    t = math.tan(math.radians(pose.fov_y) / 2.0)
    aspect = pose.width / pose.height
    ndc_x = x / (zsafe * t * aspect)
    ndc_y = y / (zsafe * t)
    px = (ndc_x + 1.0) * 0.5 * pose.width
    py = (1.0 - ndc_y) * 0.5 * pose.height
    return px, py, z, in_front
