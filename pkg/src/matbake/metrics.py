"""Evaluation metrics: mIoU over label UVs, PSNR and SSIM over renders."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import convolve2d

from .baking import LabelUV
from .errors import EmptyOverlapError, ShapeMismatchError, TooSmallError
from .segmentation import BACKGROUND, NUM_CLASSES
from .texture import TextureImage

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_L = 255.0


@dataclass(frozen=True)
class IoUReport:
    per_class: dict[int, float]      # classes with ground-truth support
    mean: float
    pixel_counts: dict[int, int]     # ground-truth texels per class

    def format_table(self) -> str:
        from .segmentation import CLASS_NAMES
        lines = [f"{'class':<18}{'IoU':>8}{'gt texels':>12}"]
        for cid in sorted(self.per_class):
            lines.append(
                f"{CLASS_NAMES[cid]:<18}{self.per_class[cid]:>8.4f}"
                f"{self.pixel_counts[cid]:>12}"
            )
        lines.append(f"{'mean':<18}{self.mean:>8.4f}")
        return "\n".join(lines)


def miou(pred: LabelUV, gt: LabelUV) -> IoUReport:
    """Per-class intersection over union, texels with gt == 255 excluded;
    the mean runs over classes present in the ground truth."""
    if pred.labels.shape != gt.labels.shape:
        raise ShapeMismatchError("prediction and ground truth disagree in shape")
    valid = gt.labels != BACKGROUND
    if not valid.any():
        raise EmptyOverlapError("ground truth is entirely unassigned")
    p = pred.labels[valid].astype(np.int64)
    g = gt.labels[valid].astype(np.int64)
    p[p == BACKGROUND] = NUM_CLASSES  # distinct bin, never matches gt

    per_class: dict[int, float] = {}
    counts: dict[int, int] = {}
    for c in np.unique(g):
        c = int(c)
        inter = int(((p == c) & (g == c)).sum())
        union = int(((p == c) | (g == c)).sum())
        per_class[c] = inter / union if union else 0.0
        counts[c] = int((g == c).sum())
    mean = sum(per_class.values()) / len(per_class)
    return IoUReport(per_class=per_class, mean=mean, pixel_counts=counts)


def psnr(a: TextureImage, b: TextureImage) -> float:
    """Peak signal-to-noise ratio over RGB channels in dB; inf when equal."""
    if a.pixels.shape != b.pixels.shape:
        raise ShapeMismatchError("images disagree in shape")
    x = a.pixels[..., :3].astype(np.float64)
    y = b.pixels[..., :3].astype(np.float64)
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0 ** 2 / mse)


def _luma(image: TextureImage) -> np.ndarray:
    rgb = image.pixels[..., :3].astype(np.float64)
    return rgb @ np.array([0.299, 0.587, 0.114])


def _gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    r = np.arange(size) - (size - 1) / 2.0
    k = np.exp(-(r ** 2) / (2.0 * sigma ** 2))
    k2 = np.outer(k, k)
    return k2 / k2.sum()


def ssim(a: TextureImage, b: TextureImage) -> float:
    """Mean local SSIM on luma, 11x11 Gaussian window sigma=1.5,
    K1=0.01, K2=0.03, L=255 (windows fully inside the image)."""
    if a.pixels.shape != b.pixels.shape:
        raise ShapeMismatchError("images disagree in shape")
    if a.width < SSIM_WINDOW or a.height < SSIM_WINDOW:
        raise TooSmallError(f"images must be at least {SSIM_WINDOW}px per side")
    x = _luma(a)
    y = _luma(b)
    win = _gaussian_kernel(SSIM_WINDOW, SSIM_SIGMA)

    def filt(img):
        return convolve2d(img, win, mode="valid")

    mu_x = filt(x)
    mu_y = filt(y)
    sxx = filt(x * x) - mu_x * mu_x
    syy = filt(y * y) - mu_y * mu_y
    sxy = filt(x * y) - mu_x * mu_y

    c1 = (SSIM_K1 * SSIM_L) ** 2
    c2 = (SSIM_K2 * SSIM_L) ** 2
    num = (2 * mu_x * mu_y + c1) * (2 * sxy + c2)
    den = (mu_x ** 2 + mu_y ** 2 + c1) * (sxx + syy + c2)
    return float(np.mean(num / den))
