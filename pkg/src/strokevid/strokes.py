"""Motion strokes: keypoint paths, rasterization with grayscale time encoding,
random trajectory sampling and the plain-text keypoint wire format.

Raster conventions: background is white (1.0); the stroke is drawn dark to
light, intensity 0.0 at the first keypoint up to 0.75 at the last, so earlier
time is darker. Where the path self-overlaps the later (lighter) value wins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, InputError

BACKGROUND = 1.0
MAX_STROKE_INTENSITY = 0.75


@dataclass(frozen=True)
class StrokeKeypoints:
    """An ordered 2D path over the canvas, one point per time step.

    Points are (x, y) = (column, row) pixel coordinates.
    """

    points: tuple[tuple[float, float], ...]
    canvas: tuple[int, int]  # (H, W)

    def __post_init__(self):
        h, w = self.canvas
        if len(self.points) < 1:
            raise InputError("a stroke needs at least one keypoint")
        pts = tuple((float(x), float(y)) for x, y in self.points)
        object.__setattr__(self, "points", pts)
        for x, y in pts:
            if not (math.isfinite(x) and math.isfinite(y)):
                raise InputError("keypoint coordinates must be finite")
            if not (0.0 <= x <= w - 1 and 0.0 <= y <= h - 1):
                raise InputError(
                    f"keypoint ({x}, {y}) outside canvas [0, {w - 1}] x [0, {h - 1}]"
                )

    def __len__(self) -> int:
        return len(self.points)

    def shifted(self, dx: float, dy: float) -> "StrokeKeypoints":
        return StrokeKeypoints(
            tuple((x + dx, y + dy) for x, y in self.points), self.canvas
        )

    def rounded(self) -> "StrokeKeypoints":
        return StrokeKeypoints(
            tuple((round(x), round(y)) for x, y in self.points), self.canvas
        )

    def window(self, start: int, length: int) -> "StrokeKeypoints":
        return StrokeKeypoints(self.points[start:start + length], self.canvas)


@dataclass(frozen=True)
class StrokeRaster:
    """Grayscale raster of a stroke; role is 'full' (S) or 'instant' (S_t)."""

    pixels: np.ndarray  # (H, W) float32 in [0, 1]
    role: str = "full"

    def __post_init__(self):
        if self.role not in ("full", "instant"):
            raise InputError(f"bad raster role {self.role!r}")


def keypoint_intensity(index: int, n_points: int) -> float:
    """Grayscale value of keypoint `index` in a stroke of `n_points` points."""
    if n_points <= 1:
        return 0.0
    return MAX_STROKE_INTENSITY * index / (n_points - 1)


def _draw_segment(canvas: np.ndarray, p0, p1, v0: float, v1: float) -> None:
    """Overwrite a 1-px line from p0 to p1 with intensity ramping v0 -> v1.

    Each pixel takes the value of the line sample closest to its center, so
    the endpoints keep exactly v0 and v1; across segments drawn in order the
    later (lighter) segment wins where the path overlaps itself.
    """
    x0, y0 = p0
    x1, y1 = p1
    dist = math.hypot(x1 - x0, y1 - y0)
    n = max(2, int(math.ceil(dist * 2)) + 1)
    best: dict[tuple[int, int], tuple[float, float]] = {}
    for i in range(n):
        s = i / (n - 1)
        fx = x0 + s * (x1 - x0)
        fy = y0 + s * (y1 - y0)
        px, py = round(fx), round(fy)
        d = math.hypot(fx - px, fy - py)
        prev = best.get((py, px))
        if prev is None or d < prev[0]:
            best[(py, px)] = (d, v0 + s * (v1 - v0))
    for (py, px), (_, v) in best.items():
        canvas[py, px] = v


def rasterize_stroke(kp: StrokeKeypoints) -> StrokeRaster:
    """Render the full stroke S with time encoded as grayscale intensity."""
    h, w = kp.canvas
    canvas = np.full((h, w), BACKGROUND, dtype=np.float32)
    n = len(kp)
    if n == 1:
        x, y = kp.points[0]
        canvas[round(y), round(x)] = keypoint_intensity(0, n)
    else:
        for t in range(n - 1):
            _draw_segment(
                canvas, kp.points[t], kp.points[t + 1],
                keypoint_intensity(t, n), keypoint_intensity(t + 1, n),
            )
    return StrokeRaster(canvas, role="full")


def instant_stroke(kp: StrokeKeypoints, t: int) -> StrokeRaster:
    """Render only segment t -> t+1 (S_t), same intensity convention as S."""
    n = len(kp)
    if not 0 <= t < n - 1:
        raise InputError(f"segment index {t} out of range for {n} keypoints")
    h, w = kp.canvas
    canvas = np.full((h, w), BACKGROUND, dtype=np.float32)
    _draw_segment(
        canvas, kp.points[t], kp.points[t + 1],
        keypoint_intensity(t, n), keypoint_intensity(t + 1, n),
    )
    return StrokeRaster(canvas, role="instant")


def _reflect(v: float, lo: float, hi: float) -> tuple[float, bool]:
    """Mirror v into [lo, hi]; returns (value, whether parity flipped)."""
    flipped = False
    while v < lo or v > hi:
        if v < lo:
            v = 2 * lo - v
        else:
            v = 2 * hi - v
        flipped = not flipped
    return v, flipped


def gen_random_trajectory(
    T: int,
    bounds: tuple[int, int],
    step_range: tuple[float, float],
    rng_seed,
    margin: float = 0.0,
) -> StrokeKeypoints:
    """Sample a smooth random path of T+1 keypoints inside `bounds`.

    Each step turns by at most +-45 degrees from the previous direction with
    a length uniform in `step_range`; the path reflects off the borders.
    Fully determined by `rng_seed`.
    """
    if T < 1:
        raise InputError("T must be >= 1")
    h, w = bounds
    lo, hi = step_range
    x_lo, x_hi = margin, w - 1 - margin
    y_lo, y_hi = margin, h - 1 - margin
    if not (0 < lo <= hi):
        raise InputError(f"bad step_range {step_range}")
    if hi >= min(x_hi - x_lo, y_hi - y_lo):
        raise InputError(f"step_range {step_range} infeasible for bounds {bounds}")
    rng = np.random.default_rng(rng_seed)
    x = rng.uniform(x_lo, x_hi)
    y = rng.uniform(y_lo, y_hi)
    angle = rng.uniform(0.0, 2 * math.pi)
    points = [(x, y)]
    for _ in range(T):
        angle += rng.uniform(-math.pi / 4, math.pi / 4)
        length = rng.uniform(lo, hi)
        nx = x + length * math.cos(angle)
        ny = y + length * math.sin(angle)
        nx, flip_x = _reflect(nx, x_lo, x_hi)
        ny, flip_y = _reflect(ny, y_lo, y_hi)
        if flip_x:
            angle = math.pi - angle
        if flip_y:
            angle = -angle
        x, y = nx, ny
        points.append((x, y))
    return StrokeKeypoints(tuple(points), bounds)


def track_to_keypoints(boxes, canvas: tuple[int, int]) -> StrokeKeypoints:
    """Keypoints from an ordered list of (x0, y0, x1, y1) bounding boxes."""
    if len(boxes) == 0:
        raise InputError("need at least one bounding box")
    points = tuple(((x0 + x1) / 2.0, (y0 + y1) / 2.0) for x0, y0, x1, y1 in boxes)
    return StrokeKeypoints(points, canvas)


# -- plain-text wire format (shared with the browser editor) -----------------

def keypoints_to_text(kp: StrokeKeypoints) -> str:
    h, w = kp.canvas
    lines = [f"canvas {h} {w}"]
    for t, (x, y) in enumerate(kp.points):
        lines.append(f"{t} {x!r} {y!r}")
    return "\n".join(lines) + "\n"


def keypoints_from_text(text: str) -> StrokeKeypoints:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("canvas "):
        raise FormatError("keypoints document must start with a 'canvas H W' header")
    try:
        _, h, w = lines[0].split()
        canvas = (int(h), int(w))
        points = []
        for expected_t, line in enumerate(lines[1:]):
            t, x, y = line.split()
            if int(t) != expected_t:
                raise FormatError(f"keypoint indices out of order at line {line!r}")
            points.append((float(x), float(y)))
    except FormatError:
        raise
    except ValueError as exc:
        raise FormatError(f"malformed keypoints document: {exc}") from exc
    if not points:
        raise FormatError("keypoints document contains no points")
    return StrokeKeypoints(tuple(points), canvas)


def save_keypoints(kp: StrokeKeypoints, path) -> None:
    with open(path, "w") as fh:
        fh.write(keypoints_to_text(kp))


def load_keypoints(path) -> StrokeKeypoints:
    with open(path) as fh:
        return keypoints_from_text(fh.read())
