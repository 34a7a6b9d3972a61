import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from fixtures import make_chair_asset, make_sphere_mesh  # noqa: E402

from matbake.baking import bake_view, rasterize_uv  # noqa: E402
from matbake.camera import build_schedule  # noqa: E402
from matbake.raster import rasterize  # noqa: E402
from matbake.segmentation import BACKGROUND, LabelMap  # noqa: E402


@pytest.fixture(scope="session")
def chair():
    asset, face_class, palette = make_chair_asset()
    return asset, face_class, palette


@pytest.fixture(scope="session")
def sphere_vote_counts():
    """Per-texel count of views that labeled each texel of a unit sphere,
    under the full 41-view schedule at UV 512^2."""
    mesh, _ = make_sphere_mesh(16)
    table = rasterize_uv(mesh, 512)
    schedule = build_schedule(123, width=256, height=256)
    votes = np.zeros((512, 512), dtype=np.int32)
    for i, pose in enumerate(schedule.poses):
        gbuf = rasterize(mesh.positions, mesh.faces_pos, pose)
        # label every covered pixel class 0: we only measure reachability
        labels = LabelMap(
            np.where(gbuf.face_id != -1, 0, BACKGROUND).astype(np.uint8)
        )
        baked = bake_view(table, gbuf, labels, pose, view_index=i)
        votes += baked.labels != BACKGROUND
    return table, votes
