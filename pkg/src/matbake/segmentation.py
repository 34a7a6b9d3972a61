"""Material label space and pluggable segmentation backends.

Three interchangeable backends produce per-view label maps: an HTTP
inference service, a directory of precomputed label PNGs, and a color
palette oracle used for testing and self-verification. A shared validation
wrapper enforces the output contract (dimensions, value range, background
masking) regardless of backend behavior.
"""

from __future__ import annotations

import io
import json
import os
import threading
import time
from dataclasses import dataclass

import numpy as np
import requests
from PIL import Image

from .errors import (
    BackendUnavailableError,
    ProtocolError,
    ShapeMismatchError,
)
from .texture import TextureImage, load_gray

CLASS_NAMES = (
    "metal",
    "wood",
    "plastic",
    "glass",
    "paint",
    "rubber",
    "leather",
    "fabric",
    "fruit&leaf",
    "flower",
    "brick",
    "porcelain",
    "clay_terracotta",
    "concrete",
)
NUM_CLASSES = len(CLASS_NAMES)
BACKGROUND = 255

_VALID_LABELS = frozenset(range(NUM_CLASSES)) | {BACKGROUND}


def class_id(name: str) -> int:
    try:
        return CLASS_NAMES.index(name)
    except ValueError:
        raise KeyError(f"unknown material class {name!r}") from None


@dataclass(frozen=True)
class LabelMap:
    """Screen-space material class raster; 255 = background/ignore."""

    labels: np.ndarray  # (H, W) uint8

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]


def _validate_labels(labels: np.ndarray, image: TextureImage) -> LabelMap:
    """Common contract enforcement: shape, value range, background mask."""
    if labels.shape != (image.height, image.width):
        raise ShapeMismatchError(
            f"label map {labels.shape} does not match image "
            f"{(image.height, image.width)}"
        )
    bad = np.setdiff1d(np.unique(labels), sorted(_VALID_LABELS))
    if bad.size:
        raise ProtocolError(f"label out of range: {bad.tolist()}")
    out = labels.astype(np.uint8).copy()
    out[image.pixels[..., 3] == 0] = BACKGROUND
    return LabelMap(out)


class SegmentationBackend:
    """Interface all backends satisfy: segment(image) -> LabelMap."""

    def segment(self, image: TextureImage, view_index: int = 0) -> LabelMap:
        if image.width == 0 or image.height == 0:
            raise ShapeMismatchError("empty input image")
        raw = self._segment(image, view_index)
        return _validate_labels(np.asarray(raw), image)

    def _segment(self, image: TextureImage, view_index: int) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class OraclePalette:
    """(RGB color, class id) pairs; colors must be pairwise distinct."""

    entries: tuple[tuple[tuple[int, int, int], int], ...]

    def __post_init__(self):
        colors = [c for c, _ in self.entries]
        if len(set(colors)) != len(colors):
            raise ValueError("palette colors must be pairwise distinct")
        for _, cid in self.entries:
            if cid not in _VALID_LABELS or cid == BACKGROUND:
                raise ValueError(f"invalid class id {cid} in palette")

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "OraclePalette":
        """Load a JSON palette: [{"color": [r,g,b], "class": id-or-name}, ...]."""
        with open(path) as fh:
            raw = json.load(fh)
        entries = []
        for item in raw:
            cid = item["class"]
            if isinstance(cid, str):
                cid = class_id(cid)
            entries.append((tuple(int(c) for c in item["color"]), int(cid)))
        return cls(tuple(entries))


class PaletteBackend(SegmentationBackend):
    """Test oracle: each opaque pixel maps to the class of the nearest
    palette color (RGB Euclidean); ties break to the lowest class id."""

    def __init__(self, palette: OraclePalette):
        if not palette.entries:
            raise ValueError("palette must be nonempty")
        # Sorting by class id makes argmin's first-minimum pick realize the
        # documented tie rule, independent of the palette's given order.
        ordered = sorted(palette.entries, key=lambda e: (e[1], e[0]))
        self.colors = np.array([c for c, _ in ordered], dtype=np.float64)
        self.ids = np.array([cid for _, cid in ordered], dtype=np.uint8)

    def _segment(self, image: TextureImage, view_index: int) -> np.ndarray:
        rgb = image.pixels[..., :3].astype(np.float64)
        d2 = ((rgb[..., None, :] - self.colors) ** 2).sum(axis=-1)
        return self.ids[np.argmin(d2, axis=-1)]


class DirectoryBackend(SegmentationBackend):
    """Precomputed labels: files view_{i:03}.png, 8-bit grayscale class ids."""

    def __init__(self, directory: str | os.PathLike):
        self.directory = os.fspath(directory)

    def _segment(self, image: TextureImage, view_index: int) -> np.ndarray:
        path = os.path.join(self.directory, f"view_{view_index:03}.png")
        if not os.path.exists(path):
            raise BackendUnavailableError(
                f"no precomputed labels for view {view_index}: {path} missing"
            )
        return load_gray(path)


class HttpBackend(SegmentationBackend):
    """Remote inference service.

    Wire protocol: POST {endpoint}/segment with an RGBA PNG body
    (Content-Type: image/png); the service answers 200 with an 8-bit
    grayscale PNG of identical dimensions, values in {0..13, 255}.
    Transient failures are retried with exponential backoff.
    """

    def __init__(self, endpoint: str, retries: int = 3,
                 backoff_base: float = 0.5, timeout: float = 30.0,
                 max_concurrency: int = 4):
        self.endpoint = endpoint.rstrip("/")
        self.retries = retries
        self.backoff_base = backoff_base
        self.timeout = timeout
        self.last_retry_count = 0
        self._gate = threading.Semaphore(max_concurrency)
        self._session = requests.Session()

    def _post(self, body: bytes):
        return self._session.post(
            f"{self.endpoint}/segment",
            data=body,
            headers={"Content-Type": "image/png"},
            timeout=self.timeout,
        )

    def _segment(self, image: TextureImage, view_index: int) -> np.ndarray:
        buf = io.BytesIO()
        Image.fromarray(image.pixels, mode="RGBA").save(buf, format="PNG")
        body = buf.getvalue()

        resp = None
        last_failure = None
        retry_count = 0
        with self._gate:
            for attempt in range(self.retries + 1):
                if attempt > 0:
                    time.sleep(self.backoff_base * (2 ** (attempt - 1)))
                    retry_count += 1
                try:
                    resp = self._post(body)
                except requests.RequestException as exc:
                    last_failure = str(exc)
                    resp = None
                    continue
                if resp.status_code == 200:
                    break
                last_failure = f"HTTP {resp.status_code}"
                resp = None
        self.last_retry_count = retry_count
        if resp is None:
            raise BackendUnavailableError(
                f"segmentation service failed after {retry_count} retries: "
                f"{last_failure}"
            )

        ctype = resp.headers.get("Content-Type", "")
        if ctype.split(";")[0].strip() != "image/png":
            raise ProtocolError(f"wrong content type: {ctype!r}")
        try:
            with Image.open(io.BytesIO(resp.content)) as im:
                im.load()
                if im.mode != "L":
                    raise ProtocolError(f"expected grayscale labels, got mode {im.mode!r}")
                labels = np.asarray(im, dtype=np.uint8)
        except ProtocolError:
            raise
        except Exception as exc:
            raise ProtocolError(f"undecodable response body: {exc}") from exc
        if labels.shape != (image.height, image.width):
            raise ProtocolError(
                f"wrong dimensions: got {labels.shape}, "
                f"expected {(image.height, image.width)}"
            )
        bad = np.setdiff1d(np.unique(labels), sorted(_VALID_LABELS))
        if bad.size:
            raise ProtocolError(f"label out of range: {bad.tolist()}")
        return labels
