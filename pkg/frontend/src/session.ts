/**
 * Editor session state: the keypoint list being sketched, the last response's
 * frames and the playback cursor. Pure state + transitions, no DOM — the
 * canvas layer renders from this and the tests drive it directly.
 */

import type { Keypoints } from "./wire.js";

export interface PlaybackState {
  /** current scrubber position, in [0, frameCount-1]; -1 when no frames */
  frameIndex: number;
  fps: number;
  playing: boolean;
}

export class SessionError extends Error {}

const clamp = (v: number, lo: number, hi: number) =>
  Math.min(hi, Math.max(lo, v));

export class EditorSession {
  readonly width: number;
  readonly height: number;
  /** base64 PNG of the initial frame, or null before an image is loaded */
  image: string | null = null;
  private points: Array<[number, number]> = [];
  /** base64 PNG frames from the last successful generation */
  frames: string[] = [];
  playback: PlaybackState = { frameIndex: -1, fps: 8, playing: false };
  lastError: string | null = null;

  constructor(width: number, height: number) {
    if (!Number.isInteger(width) || !Number.isInteger(height) || width <= 0 || height <= 0) {
      throw new SessionError(`bad canvas size ${width}x${height}`);
    }
    this.width = width;
    this.height = height;
  }

  get keypoints(): ReadonlyArray<readonly [number, number]> {
    return this.points;
  }

  /** in-bounds check for a coordinate on this session's canvas */
  inBounds(x: number, y: number): boolean {
    return x >= 0 && x <= this.width - 1 && y >= 0 && y <= this.height - 1;
  }

  /** click: append a keypoint, clamped into bounds */
  appendKeypoint(x: number, y: number): void {
    if (!Number.isFinite(x) || !Number.isFinite(y)) {
      throw new SessionError(`non-finite keypoint (${x}, ${y})`);
    }
    this.points.push([
      clamp(x, 0, this.width - 1),
      clamp(y, 0, this.height - 1),
    ]);
  }

  /** drag: move keypoint k without touching any other point */
  moveKeypoint(k: number, x: number, y: number): void {
    if (k < 0 || k >= this.points.length) {
      throw new SessionError(`no keypoint ${k}`);
    }
    if (!Number.isFinite(x) || !Number.isFinite(y)) {
      throw new SessionError(`non-finite keypoint (${x}, ${y})`);
    }
    this.points[k] = [
      clamp(x, 0, this.width - 1),
      clamp(y, 0, this.height - 1),
    ];
  }

  deleteLastKeypoint(): void {
    this.points.pop();
  }

  clearKeypoints(): void {
    this.points = [];
  }

  /**
   * Freehand convenience: resample a drawn polyline to n equidistant points
   * (arc length), which then behave exactly like n clicks.
   */
  resampleFreehand(path: Array<[number, number]>, n: number): void {
    if (path.length < 2 || n < 2) {
      throw new SessionError("freehand resampling needs >=2 samples and n>=2");
    }
    const cum = [0];
    for (let i = 1; i < path.length; i++) {
      const [x0, y0] = path[i - 1]!;
      const [x1, y1] = path[i]!;
      cum.push(cum[i - 1]! + Math.hypot(x1 - x0, y1 - y0));
    }
    const total = cum[cum.length - 1]!;
    this.clearKeypoints();
    for (let k = 0; k < n; k++) {
      const target = total === 0 ? 0 : (total * k) / (n - 1);
      let i = 1;
      while (i < cum.length - 1 && cum[i]! < target) i++;
      const seg = cum[i]! - cum[i - 1]!;
      const s = seg === 0 ? 0 : (target - cum[i - 1]!) / seg;
      const [x0, y0] = path[i - 1]!;
      const [x1, y1] = path[i]!;
      this.appendKeypoint(x0 + s * (x1 - x0), y0 + s * (y1 - y0));
    }
  }

  /** grey shade for keypoint t of n: black (first) to light grey (last) */
  keypointShade(t: number, n: number): number {
    if (n <= 1) return 0;
    return Math.round((0.75 * t * 255) / (n - 1));
  }

  get canGenerate(): boolean {
    return this.image !== null && this.points.length >= 2;
  }

  /** payload for POST /generate; T = len(keypoints) - 1 frames */
  generatePayload(): {
    image: string;
    keypoints: Array<[number, number]>;
    frame_count: number;
  } {
    if (this.image === null) {
      throw new SessionError("no image loaded");
    }
    if (this.points.length < 2) {
      throw new SessionError("need at least 2 keypoints to generate");
    }
    return {
      image: this.image,
      keypoints: this.points.map(([x, y]) => [x, y]),
      frame_count: this.points.length - 1,
    };
  }

  asKeypoints(): Keypoints {
    return {
      canvas: [this.height, this.width],
      points: this.points.map(([x, y]) => [x, y]),
    };
  }

  loadKeypoints(kp: Keypoints): void {
    const [h, w] = kp.canvas;
    if (h !== this.height || w !== this.width) {
      throw new SessionError(
        `keypoints canvas ${h}x${w} does not match session ${this.height}x${this.width}`,
      );
    }
    this.points = kp.points.map(([x, y]) => {
      if (!this.inBounds(x, y)) {
        throw new SessionError(`keypoint (${x}, ${y}) out of bounds`);
      }
      return [x, y];
    });
  }

  /** install a successful response; scrubber spans exactly the T frames */
  setFrames(frames: string[]): void {
    this.frames = [...frames];
    this.playback.frameIndex = frames.length > 0 ? 0 : -1;
    this.playback.playing = false;
    this.lastError = null;
  }

  setError(message: string): void {
    // session (image + keypoints + old frames) is preserved on error
    this.lastError = message;
    this.playback.playing = false;
  }

  /** valid scrubber positions: one per returned frame */
  get scrubberPositions(): number[] {
    return this.frames.map((_, i) => i);
  }

  scrubTo(index: number): void {
    if (this.frames.length === 0) {
      throw new SessionError("no frames to scrub");
    }
    if (!Number.isInteger(index) || index < 0 || index >= this.frames.length) {
      throw new SessionError(
        `scrubber index ${index} outside [0, ${this.frames.length - 1}]`,
      );
    }
    this.playback.frameIndex = index;
  }

  /** advance looped playback by one tick */
  tick(): void {
    if (!this.playback.playing || this.frames.length === 0) return;
    this.playback.frameIndex =
      (this.playback.frameIndex + 1) % this.frames.length;
  }
}
