"""Image-quality metrics (PSNR, SSIM) and the stroke-adherence measure."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .strokes import StrokeKeypoints

PSNR_CAP_DB = 100.0

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_L = 1.0


@dataclass
class MetricSeries:
    """Per-time-step values of one metric plus aggregates."""

    name: str
    values: np.ndarray

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def std(self) -> float:
        return float(np.std(self.values))


def _as_image(frame) -> np.ndarray:
    a = np.asarray(frame, dtype=np.float64)
    if a.ndim == 2:
        a = a[None]
    if a.ndim != 3:
        raise InputError(f"frame must be (C, H, W) or (H, W), got {a.shape}")
    return a


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio in dB for frames in [0,1]; capped at 100."""
    a, b = _as_image(a), _as_image(b)
    if a.shape != b.shape:
        raise InputError(f"shape mismatch {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(10.0 * math.log10(1.0 / mse), PSNR_CAP_DB)


def _gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    r = size // 2
    x = np.arange(-r, r + 1, dtype=np.float64)
    k = np.exp(-(x ** 2) / (2.0 * sigma ** 2))
    k /= k.sum()
    return np.outer(k, k)


def _windowed(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Valid-mode weighted local mean of img under the kernel."""
    from scipy.signal import fftconvolve

    out = fftconvolve(img, kernel, mode="valid")
    return out


def ssim(a, b) -> float:
    """Mean local SSIM: 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03,
    dynamic range 1. Multi-channel frames are averaged to one channel."""
    a, b = _as_image(a), _as_image(b)
    if a.shape != b.shape:
        raise InputError(f"shape mismatch {a.shape} vs {b.shape}")
    x = a.mean(axis=0)
    y = b.mean(axis=0)
    if min(x.shape) < SSIM_WINDOW:
        raise InputError(
            f"image {x.shape} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window"
        )
    kernel = _gaussian_kernel(SSIM_WINDOW, SSIM_SIGMA)
    mu_x = _windowed(x, kernel)
    mu_y = _windowed(y, kernel)
    sxx = _windowed(x * x, kernel) - mu_x ** 2
    syy = _windowed(y * y, kernel) - mu_y ** 2
    sxy = _windowed(x * y, kernel) - mu_x * mu_y
    c1 = (SSIM_K1 * SSIM_L) ** 2
    c2 = (SSIM_K2 * SSIM_L) ** 2
    num = (2 * mu_x * mu_y + c1) * (2 * sxy + c2)
    den = (mu_x ** 2 + mu_y ** 2 + c1) * (sxx + syy + c2)
    return float(np.mean(num / den))


def intensity_centroid(frame) -> tuple[float, float] | None:
    """(x, y) intensity centroid of a frame, or None if it is all black."""
    img = _as_image(frame).mean(axis=0)
    total = float(img.sum())
    if total <= 0.0:
        return None
    yy, xx = np.mgrid[0:img.shape[0], 0:img.shape[1]]
    return float((xx * img).sum() / total), float((yy * img).sum() / total)


@dataclass
class AdherenceResult:
    """Stroke adherence: how far the object sits from its commanded keypoint."""

    mean_px: float
    per_step: np.ndarray       # NaN where the frame was all black
    missing_steps: int

    def __float__(self):
        return self.mean_px


def stroke_adherence(frames, kp: StrokeKeypoints) -> AdherenceResult:
    """Mean distance between each frame's intensity centroid and the keypoint
    it should have reached (frame t pairs with keypoint t+1).

    All-black frames are excluded from the mean and counted as missing.
    """
    n = len(frames)
    if len(kp) < n + 1:
        raise InputError(
            f"{n} frames need at least {n + 1} keypoints, got {len(kp)}"
        )
    dists = np.full(n, np.nan)
    missing = 0
    for t in range(n):
        c = intensity_centroid(frames[t])
        if c is None:
            missing += 1
            continue
        tx, ty = kp.points[t + 1]
        dists[t] = math.hypot(c[0] - tx, c[1] - ty)
    valid = dists[~np.isnan(dists)]
    mean = float(valid.mean()) if valid.size else float("nan")
    return AdherenceResult(mean, dists, missing)


def evaluate_clips(model, clips, max_frames=None):
    """Roll the model out on each clip's input frame and stroke and score it.

    Returns (psnr_series, ssim_series, adherence_results, rollouts).
    """
    if not clips:
        raise InputError("empty evaluation set")
    psnr_rows, ssim_rows, adherences, rollouts = [], [], [], []
    for clip in clips:
        T = len(clip) - 1 if max_frames is None else min(max_frames, len(clip) - 1)
        pred = model.rollout(clip.frames[0], clip.keypoints, T)
        rollouts.append(pred)
        psnr_rows.append([psnr(pred[t], clip.frames[t + 1]) for t in range(T)])
        ssim_rows.append([ssim(pred[t], clip.frames[t + 1]) for t in range(T)])
        adherences.append(stroke_adherence(pred, clip.keypoints))
    psnr_series = MetricSeries("psnr", np.mean(np.asarray(psnr_rows), axis=0))
    ssim_series = MetricSeries("ssim", np.mean(np.asarray(ssim_rows), axis=0))
    return psnr_series, ssim_series, adherences, rollouts
