"""matbake: multi-view material segmentation baking for UV-textured meshes."""

__version__ = "0.1.0"

from .assets import Asset, load_asset
from .baking import LabelUV, TexelSampleTable, bake_view, rasterize_uv
from .camera import CameraPose, ViewSchedule, build_schedule, pose_to_matrices
from .fusion import FusionConfig, VoteHistogram, accumulate, region_unify, vote
from .materials import MaterialTable, PBRMaps, emit_pbr, load_material_table
from .mesh import TriangleMesh, load_mesh, normalize_mesh
from .metrics import IoUReport, miou, psnr, ssim
from .pipeline import PipelineConfig, run_bake
from .raster import GBuffer, render_view
from .segmentation import (
    BACKGROUND,
    CLASS_NAMES,
    DirectoryBackend,
    HttpBackend,
    LabelMap,
    OraclePalette,
    PaletteBackend,
)
from .shading import DirectionalLight, render_preview
from .texture import TextureImage, load_texture, write_image
