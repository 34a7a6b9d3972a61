"""Class-label to PBR mapping and metallic/roughness map emission.

The material table ships as an INI file (one section per class, fields
metallic, roughness, display_color) with a [default] section for texels no
view ever labeled. The in-repo defaults are editorial placeholders; every
value is overridable via a user table.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy import ndimage

from .baking import LabelUV
from .errors import MaterialRangeError, MissingClassError, ParseError
from .segmentation import BACKGROUND, CLASS_NAMES, NUM_CLASSES
from .texture import atomic_save

DILATION_TEXELS = 2.0


@dataclass(frozen=True)
class MaterialEntry:
    metallic: float
    roughness: float
    display_color: tuple[int, int, int]


@dataclass(frozen=True)
class MaterialTable:
    """metallic/roughness/display color per class, plus unassigned defaults."""

    entries: tuple[MaterialEntry, ...]   # indexed by class id
    default: MaterialEntry

    def __post_init__(self):
        if len(self.entries) != NUM_CLASSES:
            raise MissingClassError(
                f"table has {len(self.entries)} classes, need {NUM_CLASSES}"
            )

    def metallic_lut(self) -> np.ndarray:
        lut = np.full(256, self.default.metallic)
        for cid, e in enumerate(self.entries):
            lut[cid] = e.metallic
        return lut

    def roughness_lut(self) -> np.ndarray:
        lut = np.full(256, self.default.roughness)
        for cid, e in enumerate(self.entries):
            lut[cid] = e.roughness
        return lut

    def color_lut(self) -> np.ndarray:
        lut = np.zeros((256, 3), dtype=np.uint8)
        lut[BACKGROUND] = self.default.display_color
        for cid, e in enumerate(self.entries):
            lut[cid] = e.display_color
        return lut


def _parse_entry(cp: configparser.ConfigParser, section: str) -> MaterialEntry:
    try:
        metallic = cp.getfloat(section, "metallic")
        roughness = cp.getfloat(section, "roughness")
        color_raw = cp.get(section, "display_color")
        color = tuple(int(c.strip()) for c in color_raw.split(","))
    except (configparser.Error, ValueError) as exc:
        raise ParseError(f"material table section [{section}]: {exc}") from exc
    if not 0.0 <= metallic <= 1.0:
        raise MaterialRangeError(f"[{section}] metallic {metallic} outside [0, 1]")
    if not 0.0 <= roughness <= 1.0:
        raise MaterialRangeError(f"[{section}] roughness {roughness} outside [0, 1]")
    if len(color) != 3 or any(not 0 <= c <= 255 for c in color):
        raise MaterialRangeError(f"[{section}] display_color {color} invalid")
    return MaterialEntry(metallic, roughness, color)


def load_material_table(path: str | os.PathLike) -> MaterialTable:
    """Load and validate a material table; all 14 classes must be present."""
    cp = configparser.ConfigParser()
    with open(path) as fh:
        try:
            cp.read_file(fh)
        except configparser.Error as exc:
            raise ParseError(f"material table: {exc}") from exc
    entries = []
    for name in CLASS_NAMES:
        if not cp.has_section(name):
            raise MissingClassError(name)
        entries.append(_parse_entry(cp, name))
    default = (
        _parse_entry(cp, "default")
        if cp.has_section("default")
        else MaterialEntry(0.0, 0.8, (0, 0, 0))
    )
    return MaterialTable(tuple(entries), default)


def serialize_material_table(table: MaterialTable, path: str | os.PathLike) -> None:
    cp = configparser.ConfigParser()
    for name, e in list(zip(CLASS_NAMES, table.entries)) + [("default", table.default)]:
        cp.add_section(name)
        cp.set(name, "metallic", repr(e.metallic))
        cp.set(name, "roughness", repr(e.roughness))
        cp.set(name, "display_color", ", ".join(str(c) for c in e.display_color))

    def save(p):
        with open(p, "w") as fh:
            cp.write(fh)

    atomic_save(save, path)


def default_material_table() -> MaterialTable:
    """The table shipped with the package (editorial defaults)."""
    ref = resources.files("matbake").joinpath("data/default_materials.ini")
    with resources.as_file(ref) as path:
        return load_material_table(path)


@dataclass
class PBRMaps:
    metallic: np.ndarray    # (R, R) uint8
    roughness: np.ndarray   # (R, R) uint8
    label_vis: np.ndarray   # (R, R, 3) uint8
    labels: np.ndarray      # (R, R) uint8, post-dilation class ids
    unassigned_count: int


def _round_away(values: np.ndarray) -> np.ndarray:
    """round(v * 255), ties away from zero (values are non-negative)."""
    return np.floor(values * 255.0 + 0.5).astype(np.uint8)


def emit_pbr(fused: LabelUV, table: MaterialTable) -> PBRMaps:
    """Emit metallic/roughness/label-color maps from the fused label UV.

    A 2-texel dilation pads chart boundaries (labels spread into adjacent
    unassigned texels only); remaining 255 texels take the table defaults
    and are counted in unassigned_count.
    """
    labels = fused.labels.copy()
    unlabeled = labels == BACKGROUND
    if unlabeled.any() and not unlabeled.all():
        dist, (ri, ci) = ndimage.distance_transform_edt(
            unlabeled, return_indices=True
        )
        pad = unlabeled & (dist <= DILATION_TEXELS)
        labels[pad] = labels[ri[pad], ci[pad]]

    unassigned = int((labels == BACKGROUND).sum())
    metallic = _round_away(table.metallic_lut()[labels])
    roughness = _round_away(table.roughness_lut()[labels])
    label_vis = table.color_lut()[labels]
    return PBRMaps(
        metallic=metallic,
        roughness=roughness,
        label_vis=label_vis,
        labels=labels,
        unassigned_count=unassigned,
    )
