import { describe, expect, it } from "vitest";

import { EditorSession, SessionError } from "./session.js";
import { keypointsFromText, keypointsToText } from "./wire.js";

const IMAGE = "aGVsbG8="; // stand-in base64 payload

function sessionWithImage(): EditorSession {
  const s = new EditorSession(64, 64);
  s.image = IMAGE;
  return s;
}

describe("keypoint editing", () => {
  it("click appends in order", () => {
    const s = sessionWithImage();
    s.appendKeypoint(1, 2);
    s.appendKeypoint(3, 4);
    s.appendKeypoint(5, 6);
    expect(s.keypoints).toEqual([
      [1, 2],
      [3, 4],
      [5, 6],
    ]);
  });

  it("clicks outside the canvas are clamped in bounds", () => {
    const s = sessionWithImage();
    s.appendKeypoint(-5, 200);
    expect(s.keypoints[0]).toEqual([0, 63]);
    expect(s.inBounds(...s.keypoints[0]!)).toBe(true);
  });

  it("drag moves only point k", () => {
    const s = sessionWithImage();
    s.appendKeypoint(1, 1);
    s.appendKeypoint(2, 2);
    s.appendKeypoint(3, 3);
    s.moveKeypoint(1, 30, 40);
    expect(s.keypoints).toEqual([
      [1, 1],
      [30, 40],
      [3, 3],
    ]);
  });

  it("moving a missing point raises", () => {
    const s = sessionWithImage();
    s.appendKeypoint(1, 1);
    expect(() => s.moveKeypoint(1, 5, 5)).toThrow(SessionError);
    expect(() => s.moveKeypoint(-1, 5, 5)).toThrow(SessionError);
  });

  it("delete last removes exactly the most recent point", () => {
    const s = sessionWithImage();
    s.appendKeypoint(1, 1);
    s.appendKeypoint(2, 2);
    s.deleteLastKeypoint();
    expect(s.keypoints).toEqual([[1, 1]]);
    s.deleteLastKeypoint();
    s.deleteLastKeypoint(); // no-op on empty
    expect(s.keypoints).toEqual([]);
  });

  it("clear removes everything", () => {
    const s = sessionWithImage();
    s.appendKeypoint(1, 1);
    s.appendKeypoint(2, 2);
    s.clearKeypoints();
    expect(s.keypoints).toEqual([]);
  });

  it("shades run from black to light grey", () => {
    const s = sessionWithImage();
    const n = 5;
    const shades = Array.from({ length: n }, (_, t) => s.keypointShade(t, n));
    expect(shades[0]).toBe(0);
    expect(shades[n - 1]!).toBeLessThan(255); // light grey, never white
    for (let i = 1; i < n; i++) expect(shades[i]!).toBeGreaterThan(shades[i - 1]!);
  });
});

describe("freehand resampling", () => {
  it("produces n points with equal arc-length spacing", () => {
    const s = sessionWithImage();
    const path: Array<[number, number]> = [];
    for (let i = 0; i <= 40; i++) path.push([10 + i, 20]);
    s.resampleFreehand(path, 5);
    expect(s.keypoints).toEqual([
      [10, 20],
      [20, 20],
      [30, 20],
      [40, 20],
      [50, 20],
    ]);
  });

  it("spacing is uniform on an irregular path", () => {
    const s = sessionWithImage();
    const path: Array<[number, number]> = [
      [0, 0],
      [1, 0],
      [10, 0],
      [10, 20],
    ];
    s.resampleFreehand(path, 7);
    const pts = s.keypoints;
    expect(pts.length).toBe(7);
    const gaps = [];
    for (let i = 1; i < pts.length; i++) {
      gaps.push(Math.hypot(pts[i]![0] - pts[i - 1]![0], pts[i]![1] - pts[i - 1]![1]));
    }
    const mean = gaps.reduce((a, b) => a + b) / gaps.length;
    gaps.forEach((g) => expect(Math.abs(g - mean)).toBeLessThan(1e-9));
  });

  it("rejects degenerate input", () => {
    const s = sessionWithImage();
    expect(() => s.resampleFreehand([[1, 1]], 5)).toThrow(SessionError);
    expect(() =>
      s.resampleFreehand(
        [
          [1, 1],
          [2, 2],
        ],
        1,
      ),
    ).toThrow(SessionError);
  });
});

describe("generation payload (acceptance: N points -> ordered in-bounds payload)", () => {
  it("N drawn keypoints produce a payload with N ordered in-bounds points", () => {
    const s = sessionWithImage();
    const drawn: Array<[number, number]> = [
      [5, 5],
      [90, 10], // clamps to 63
      [20.5, 30.25],
      [-3, 40], // clamps to 0
      [60, 60],
    ];
    drawn.forEach(([x, y]) => s.appendKeypoint(x, y));
    const payload = s.generatePayload();
    expect(payload.image).toBe(IMAGE);
    expect(payload.keypoints.length).toBe(drawn.length);
    expect(payload.frame_count).toBe(drawn.length - 1);
    payload.keypoints.forEach(([x, y], i) => {
      expect(s.inBounds(x, y)).toBe(true);
      // order preserved: each payload point is the clamp of the i-th click
      const [cx, cy] = drawn[i]!;
      expect(x).toBe(Math.min(63, Math.max(0, cx)));
      expect(y).toBe(Math.min(63, Math.max(0, cy)));
    });
  });

  it("generation needs an image and at least 2 keypoints", () => {
    const s = new EditorSession(64, 64);
    expect(s.canGenerate).toBe(false);
    s.appendKeypoint(1, 1);
    s.appendKeypoint(2, 2);
    expect(s.canGenerate).toBe(false); // no image yet
    expect(() => s.generatePayload()).toThrow(SessionError);
    s.image = IMAGE;
    expect(s.canGenerate).toBe(true);
    s.clearKeypoints();
    s.appendKeypoint(1, 1);
    expect(s.canGenerate).toBe(false); // one point is not enough
    expect(() => s.generatePayload()).toThrow(SessionError);
  });
});

describe("frames and scrubber (acceptance: T frames -> T positions)", () => {
  it("a T-frame response yields a scrubber with exactly T positions", () => {
    const s = sessionWithImage();
    for (const t of [1, 3, 24]) {
      s.setFrames(Array.from({ length: t }, (_, i) => `frame${i}`));
      expect(s.scrubberPositions).toEqual(Array.from({ length: t }, (_, i) => i));
      expect(s.playback.frameIndex).toBe(0);
      s.scrubTo(t - 1);
      expect(s.playback.frameIndex).toBe(t - 1);
      expect(() => s.scrubTo(t)).toThrow(SessionError);
      expect(() => s.scrubTo(-1)).toThrow(SessionError);
    }
  });

  it("playback loops over the frames", () => {
    const s = sessionWithImage();
    s.setFrames(["a", "b", "c"]);
    s.playback.playing = true;
    const seen = [s.playback.frameIndex];
    for (let i = 0; i < 5; i++) {
      s.tick();
      seen.push(s.playback.frameIndex);
    }
    expect(seen).toEqual([0, 1, 2, 0, 1, 2]);
  });

  it("errors preserve the session", () => {
    const s = sessionWithImage();
    s.appendKeypoint(1, 1);
    s.appendKeypoint(2, 2);
    s.setFrames(["a", "b"]);
    s.setError("service unreachable");
    expect(s.lastError).toBe("service unreachable");
    expect(s.image).toBe(IMAGE);
    expect(s.keypoints.length).toBe(2);
    expect(s.frames).toEqual(["a", "b"]);
    expect(s.playback.playing).toBe(false);
  });
});

describe("keypoint text round-trip through a session (acceptance)", () => {
  it("drawn keypoints survive export -> import losslessly", () => {
    const s = sessionWithImage();
    s.appendKeypoint(1 / 3, 2 / 7);
    s.appendKeypoint(10, 20);
    s.appendKeypoint(63, 63);
    const text = keypointsToText(s.asKeypoints());

    const other = sessionWithImage();
    other.loadKeypoints(keypointsFromText(text));
    expect(other.keypoints.length).toBe(3);
    other.keypoints.forEach(([x, y], i) => {
      expect(Object.is(x, s.keypoints[i]![0])).toBe(true);
      expect(Object.is(y, s.keypoints[i]![1])).toBe(true);
    });
  });

  it("import rejects out-of-bounds or mismatched-canvas keypoints", () => {
    const s = sessionWithImage();
    expect(() => s.loadKeypoints(keypointsFromText("canvas 64 64\n0 70.0 1.0\n"))).toThrow(
      SessionError,
    );
    expect(() => s.loadKeypoints(keypointsFromText("canvas 32 32\n0 1.0 1.0\n"))).toThrow(
      SessionError,
    );
  });
});
