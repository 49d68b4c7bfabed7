"""Synthetic moving-glyph video data: glyph sources (procedural shapes or
IDX digit files), clip synthesis, the on-disk dataset format and batching.

Frames are single-object videos on a black canvas; the glyph is pasted so
that its intensity centroid lands on the commanded keypoint (nearest-integer
placement, per-axis error <= 0.51 px). All pixel values live on the k/255
grid so PNG round-trips are bit-exact.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import FormatError, InputError
from .strokes import (
    StrokeKeypoints,
    instant_stroke,
    load_keypoints,
    rasterize_stroke,
    save_keypoints,
)

MANIFEST_NAME = "manifest.json"
DATASET_FORMAT = "strokevid-dataset-v1"


@dataclass(frozen=True)
class Glyph:
    """A small grayscale sprite in [0,1], values on the k/255 grid."""

    pixels: np.ndarray  # (g, g) float32
    name: str = "glyph"

    def __post_init__(self):
        if self.pixels.ndim != 2 or self.pixels.shape[0] != self.pixels.shape[1]:
            raise InputError("glyph must be a square 2D array")
        if not (self.pixels > 0.1).any():
            raise InputError("glyph is effectively empty (no pixel > 0.1)")

    @property
    def size(self) -> int:
        return self.pixels.shape[0]


def _quantize(a: np.ndarray) -> np.ndarray:
    return (np.round(np.clip(a, 0.0, 1.0) * 255.0) / 255.0).astype(np.float32)


def procedural_glyphs(size: int = 15) -> list[Glyph]:
    """Disk, cross and L-shape sprites; no external files needed."""
    c = (size - 1) / 2.0
    yy, xx = np.mgrid[0:size, 0:size]
    r = np.hypot(yy - c, xx - c)
    disk = np.clip(size * 0.42 - r, 0.0, 1.0)

    cross = np.zeros((size, size), dtype=np.float32)
    arm = max(1, size // 5)
    cross[int(c) - arm // 2:int(c) + arm // 2 + 1, :] = 1.0
    cross[:, int(c) - arm // 2:int(c) + arm // 2 + 1] = 1.0

    lshape = np.zeros((size, size), dtype=np.float32)
    lshape[:, :arm + 1] = 1.0
    lshape[size - arm - 1:, :] = 1.0

    return [
        Glyph(_quantize(disk), "disk"),
        Glyph(_quantize(cross), "cross"),
        Glyph(_quantize(lshape), "lshape"),
    ]


def glyph_centroid(pixels: np.ndarray) -> tuple[float, float]:
    """Intensity centroid as (x, y) in glyph coordinates."""
    total = float(pixels.sum())
    yy, xx = np.mgrid[0:pixels.shape[0], 0:pixels.shape[1]]
    return float((xx * pixels).sum() / total), float((yy * pixels).sum() / total)


@dataclass(frozen=True)
class VideoClip:
    """Frames plus the keypoint path they follow; len(frames) == len(keypoints)."""

    frames: np.ndarray  # (T+1, C, H, W) float32 in [0, 1]
    keypoints: StrokeKeypoints

    def __post_init__(self):
        if self.frames.ndim != 4:
            raise InputError("clip frames must be a (T+1, C, H, W) array")
        if len(self.frames) != len(self.keypoints):
            raise InputError("clip must have one frame per keypoint")

    def __len__(self) -> int:
        return len(self.frames)


def make_moving_glyph_clip(
    glyph: Glyph, kp: StrokeKeypoints, canvas: tuple[int, int]
) -> VideoClip:
    """Paste the glyph on a black canvas at each keypoint.

    Placement is chosen so the glyph's intensity centroid sits on the
    keypoint, at integer resolution (no resampling), clamped to the canvas.
    """
    h, w = canvas
    g = glyph.size
    if g > min(h, w):
        raise InputError(f"glyph of size {g} does not fit canvas {canvas}")
    if kp.canvas != canvas:
        raise InputError("keypoints canvas differs from clip canvas")
    cx, cy = glyph_centroid(glyph.pixels)
    frames = np.zeros((len(kp), 1, h, w), dtype=np.float32)
    for t, (x, y) in enumerate(kp.points):
        px = min(max(round(x - cx), 0), w - g)
        py = min(max(round(y - cy), 0), h - g)
        frames[t, 0, py:py + g, px:px + g] = glyph.pixels
    return VideoClip(frames, kp)


IDX_IMAGES_MAGIC = 0x00000803


def load_digit_bitmaps(path) -> list[Glyph]:
    """Read glyphs from an IDX ubyte image file (the MNIST container)."""
    raw = Path(path).read_bytes()
    if len(raw) < 16:
        raise FormatError("IDX file truncated before header")
    magic, count, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != IDX_IMAGES_MAGIC:
        raise FormatError(f"bad IDX magic 0x{magic:08x}")
    need = 16 + count * rows * cols
    if len(raw) < need:
        raise FormatError(f"IDX file truncated: {len(raw)} bytes, need {need}")
    data = np.frombuffer(raw, dtype=np.uint8, offset=16, count=count * rows * cols)
    data = data.reshape(count, rows, cols).astype(np.float32) / 255.0
    return [Glyph(img, f"digit{i}") for i, img in enumerate(data)]


# -- on-disk dataset ----------------------------------------------------------

def _frame_to_image(frame: np.ndarray) -> Image.Image:
    u8 = np.round(np.clip(frame, 0.0, 1.0) * 255.0).astype(np.uint8)
    if u8.shape[0] == 1:
        return Image.fromarray(u8[0], mode="L")
    return Image.fromarray(np.moveaxis(u8, 0, 2), mode="RGB")


def _image_to_frame(img: Image.Image) -> np.ndarray:
    a = np.asarray(img, dtype=np.uint8)
    if a.ndim == 2:
        a = a[None, :, :]
    else:
        a = np.moveaxis(a, 2, 0)
    return (a.astype(np.float32) / 255.0)


def write_dataset(clips, path) -> None:
    """Write clips as one directory each: numbered PNGs + keypoints.txt."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    clips = list(clips)
    for i, clip in enumerate(clips):
        cdir = root / f"clip_{i:05d}"
        cdir.mkdir(exist_ok=True)
        for t, frame in enumerate(clip.frames):
            _frame_to_image(frame).save(cdir / f"frame_{t:03d}.png")
        save_keypoints(clip.keypoints, cdir / "keypoints.txt")
    manifest = {"format": DATASET_FORMAT, "clips": len(clips)}
    if clips:
        manifest["canvas"] = list(clips[0].keypoints.canvas)
    (root / MANIFEST_NAME).write_text(json.dumps(manifest, sort_keys=True) + "\n")


def read_dataset(path) -> list[VideoClip]:
    root = Path(path)
    manifest_path = root / MANIFEST_NAME
    if not manifest_path.exists():
        raise FormatError(f"no {MANIFEST_NAME} in {root}")
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("format") != DATASET_FORMAT:
        raise FormatError(f"unexpected dataset format {manifest.get('format')!r}")
    n = manifest["clips"]
    clips = []
    for i in range(n):
        cdir = root / f"clip_{i:05d}"
        if not cdir.is_dir():
            raise FormatError(f"missing clip directory {cdir}")
        kp = load_keypoints(cdir / "keypoints.txt")
        frame_paths = sorted(cdir.glob("frame_*.png"))
        if len(frame_paths) != len(kp):
            raise FormatError(
                f"{cdir}: {len(frame_paths)} frames but {len(kp)} keypoints"
            )
        frames = np.stack([_image_to_frame(Image.open(p)) for p in frame_paths])
        clips.append(VideoClip(frames, kp))
    return clips


def frame_to_png_bytes(frame: np.ndarray) -> bytes:
    import io

    buf = io.BytesIO()
    _frame_to_image(frame).save(buf, format="PNG")
    return buf.getvalue()


def frame_from_png_bytes(data: bytes) -> np.ndarray:
    import io

    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except Exception as exc:
        raise FormatError(f"not a decodable image: {exc}") from exc
    return _image_to_frame(img)


def make_synthetic_dataset(
    n_clips: int,
    canvas: tuple[int, int],
    glyphs,
    frames_per_clip: int = 17,
    seed: int = 0,
    step_range: tuple[float, float] = (2.0, 6.0),
) -> list[VideoClip]:
    """Moving-glyph clips on random trajectories, deterministic per seed.

    Keypoints are snapped to integers so glyph placement is exact and the
    centroid trajectory equals the keypoint trajectory.
    """
    from .strokes import gen_random_trajectory

    if frames_per_clip < 2:
        raise InputError("clips need at least 2 frames")
    clips = []
    for i in range(n_clips):
        glyph = glyphs[i % len(glyphs)]
        margin = glyph.size / 2 + 1
        kp = gen_random_trajectory(
            frames_per_clip - 1, canvas, step_range, rng_seed=[seed, i],
            margin=margin,
        ).rounded()
        clips.append(make_moving_glyph_clip(glyph, kp, canvas))
    return clips


# -- batching -----------------------------------------------------------------

@dataclass(frozen=True)
class TrainingBatch:
    """One optimizer step's worth of clips with precomputed stroke rasters."""

    frames: np.ndarray        # (B, T+1, C, H, W)
    full_raster: np.ndarray   # (B, 1, H, W) — S for the sampled window
    instant_rasters: np.ndarray  # (B, T, 1, H, W) — S_t per step
    keypoints: tuple[StrokeKeypoints, ...]


def _clip_window_batch(clips, indices, clip_len, rng) -> TrainingBatch:
    frames, fulls, instants, kps = [], [], [], []
    for idx in indices:
        clip = clips[idx]
        n = len(clip)
        start = int(rng.integers(0, n - clip_len + 1)) if n > clip_len else 0
        kp = clip.keypoints.window(start, clip_len)
        frames.append(clip.frames[start:start + clip_len])
        fulls.append(rasterize_stroke(kp).pixels[None])
        instants.append(
            np.stack([instant_stroke(kp, t).pixels[None] for t in range(clip_len - 1)])
        )
        kps.append(kp)
    return TrainingBatch(
        frames=np.stack(frames),
        full_raster=np.stack(fulls),
        instant_rasters=np.stack(instants),
        keypoints=tuple(kps),
    )


def batch_for_step(clips, batch_size, clip_len, rng_seed, step) -> TrainingBatch:
    """Deterministic batch for a given global step (epoch-shuffled order).

    A pure function of (dataset, seed, step) so interrupted training can
    resume bit-exactly without iterator state.
    """
    n = len(clips)
    if n == 0:
        raise InputError("dataset is empty")
    if batch_size > n:
        raise InputError(f"batch_size {batch_size} exceeds dataset size {n}")
    shortest = min(len(c) for c in clips)
    if clip_len > shortest:
        raise InputError(f"clip_len {clip_len} exceeds shortest clip ({shortest})")
    per_epoch = n // batch_size
    epoch, k = divmod(step, per_epoch)
    perm = np.random.default_rng([rng_seed, epoch]).permutation(n)
    indices = perm[k * batch_size:(k + 1) * batch_size]
    rng = np.random.default_rng([rng_seed, epoch, k])
    return _clip_window_batch(clips, indices, clip_len, rng)


def batch_iterator(clips, batch_size, clip_len, rng_seed, start_step: int = 0):
    """Endless stream of deterministic training batches starting at a step."""
    step = start_step
    while True:
        yield batch_for_step(clips, batch_size, clip_len, rng_seed, step)
        step += 1
