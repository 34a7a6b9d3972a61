"""8-bit texture images, PNG I/O, and atomic file writes."""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeError


@dataclass(frozen=True)
class TextureImage:
    """RGBA raster, 8 bits per channel. Alpha 0 marks empty texels."""

    pixels: np.ndarray  # (H, W, 4) uint8

    def __post_init__(self):
        px = self.pixels
        if px.ndim != 3 or px.shape[2] != 4 or px.dtype != np.uint8:
            raise ValueError("pixels must be (H, W, 4) uint8")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @classmethod
    def blank(cls, width: int, height: int) -> "TextureImage":
        return cls(np.zeros((height, width, 4), dtype=np.uint8))


def atomic_save(save_fn, path: str | os.PathLike) -> None:
    """Run save_fn(tmp_path) then rename, so interrupted runs never leave
    truncated artifacts."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    os.close(fd)
    try:
        save_fn(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def load_texture(path: str | os.PathLike) -> TextureImage:
    """Load an 8-bit PNG as RGBA. Grayscale expands to R=G=B, A=255."""
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode not in ("RGBA", "RGB", "L", "LA", "P"):
                raise DecodeError(f"unsupported image mode {im.mode!r}")
            rgba = im.convert("RGBA")
            arr = np.asarray(rgba, dtype=np.uint8)
    except FileNotFoundError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise DecodeError(f"cannot decode {path}: {exc}") from exc
    return TextureImage(arr.copy())


def write_image(image: TextureImage, path: str | os.PathLike) -> None:
    """Write an RGBA PNG atomically; round-trips byte-exact."""
    pil = Image.fromarray(image.pixels, mode="RGBA")
    atomic_save(lambda p: pil.save(p, format="PNG"), path)


def write_gray(values: np.ndarray, path: str | os.PathLike) -> None:
    """Write a (H, W) uint8 array as an 8-bit grayscale PNG atomically."""
    arr = np.ascontiguousarray(values, dtype=np.uint8)
    pil = Image.fromarray(arr, mode="L")
    atomic_save(lambda p: pil.save(p, format="PNG"), path)


def write_gray16(values: np.ndarray, path: str | os.PathLike) -> None:
    """Write a (H, W) uint16 array as a 16-bit grayscale PNG atomically."""
    arr = np.ascontiguousarray(values, dtype=np.uint16)
    pil = Image.fromarray(arr, mode="I;16")
    atomic_save(lambda p: pil.save(p, format="PNG"), path)


def write_rgb(values: np.ndarray, path: str | os.PathLike) -> None:
    """Write a (H, W, 3) uint8 array as an RGB PNG atomically."""
    arr = np.ascontiguousarray(values, dtype=np.uint8)
    pil = Image.fromarray(arr, mode="RGB")
    atomic_save(lambda p: pil.save(p, format="PNG"), path)


def load_gray(path: str | os.PathLike) -> np.ndarray:
    """Load an 8-bit single-channel PNG as a (H, W) uint8 array.

    Palette-indexed images are read as their raw indices, which is how
    label rasters are stored (index = class id, palette = display color).
    """
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode not in ("L", "P"):
                raise DecodeError(f"expected 8-bit grayscale PNG, got mode {im.mode!r}")
            return np.asarray(im, dtype=np.uint8).copy()
    except FileNotFoundError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise DecodeError(f"cannot decode {path}: {exc}") from exc
