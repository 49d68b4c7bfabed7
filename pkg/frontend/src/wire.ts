/**
 * Shared plain-text keypoint format, mirroring the Python side:
 *
 *   canvas H W
 *   0 x0 y0
 *   1 x1 y1
 *   ...
 *
 * Coordinates are written with shortest round-trip float formatting, so
 * parse(format(kp)) reproduces every coordinate bit-exactly.
 */

export interface Keypoints {
  /** [height, width] of the canvas the coordinates live on */
  canvas: [number, number];
  /** ordered (x, y) pairs, one per time index */
  points: Array<[number, number]>;
}

export class WireFormatError extends Error {}

function formatCoord(v: number): string {
  if (!Number.isFinite(v)) {
    throw new WireFormatError(`non-finite coordinate ${v}`);
  }
  // String(n) is the shortest representation that round-trips a float64;
  // add ".0" to integral values to match the Python writer exactly
  const s = String(v);
  return Number.isInteger(v) && !s.includes("e") && !s.includes("E")
    ? `${s}.0`
    : s;
}

export function keypointsToText(kp: Keypoints): string {
  const [h, w] = kp.canvas;
  if (!Number.isInteger(h) || !Number.isInteger(w) || h <= 0 || w <= 0) {
    throw new WireFormatError(`bad canvas ${h}x${w}`);
  }
  const lines = [`canvas ${h} ${w}`];
  kp.points.forEach(([x, y], t) => {
    lines.push(`${t} ${formatCoord(x)} ${formatCoord(y)}`);
  });
  return lines.join("\n") + "\n";
}

export function keypointsFromText(text: string): Keypoints {
  const lines = text.split("\n").filter((ln) => ln.trim().length > 0);
  const header = lines[0];
  if (header === undefined || !header.startsWith("canvas ")) {
    throw new WireFormatError("keypoints document must start with 'canvas H W'");
  }
  const headerParts = header.split(/\s+/);
  if (headerParts.length !== 3) {
    throw new WireFormatError(`malformed header ${JSON.stringify(header)}`);
  }
  const h = Number(headerParts[1]);
  const w = Number(headerParts[2]);
  if (!Number.isInteger(h) || !Number.isInteger(w)) {
    throw new WireFormatError(`malformed canvas size in ${JSON.stringify(header)}`);
  }
  const points: Array<[number, number]> = [];
  lines.slice(1).forEach((line, expected) => {
    const parts = line.trim().split(/\s+/);
    if (parts.length !== 3) {
      throw new WireFormatError(`malformed keypoint line ${JSON.stringify(line)}`);
    }
    const [t, x, y] = [Number(parts[0]), Number(parts[1]), Number(parts[2])];
    if (t !== expected) {
      throw new WireFormatError(`keypoint indices out of order at ${JSON.stringify(line)}`);
    }
    if (!Number.isFinite(x) || !Number.isFinite(y)) {
      throw new WireFormatError(`non-finite coordinates in ${JSON.stringify(line)}`);
    }
    points.push([x, y]);
  });
  if (points.length === 0) {
    throw new WireFormatError("keypoints document contains no points");
  }
  return { canvas: [h, w], points };
}
