/**
 * DOM controller: wires an EditorSession and ServiceClient to the canvas,
 * buttons, and scrubber in index.html. All state transitions live in
 * EditorSession; this layer only translates events and repaints.
 */

import { ServiceClient, ServiceError } from "./api.js";
import { EditorSession } from "./session.js";
import { keypointsFromText, keypointsToText, WireFormatError } from "./wire.js";

const HIT_RADIUS = 6;

export interface EditorElements {
  canvas: HTMLCanvasElement;
  generateButton: HTMLButtonElement;
  deleteButton: HTMLButtonElement;
  clearButton: HTMLButtonElement;
  scrubber: HTMLInputElement;
  playButton: HTMLButtonElement;
  statusLine: HTMLElement;
  imageInput: HTMLInputElement;
  keypointText: HTMLTextAreaElement;
  exportButton: HTMLButtonElement;
  importButton: HTMLButtonElement;
  freehandToggle: HTMLInputElement;
  freehandCount: HTMLInputElement;
}

export class Editor {
  private dragIndex: number | null = null;
  private freehandPath: Array<[number, number]> = [];
  private drawing = false;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    readonly session: EditorSession,
    readonly client: ServiceClient,
    readonly el: EditorElements,
  ) {
    el.canvas.width = session.width;
    el.canvas.height = session.height;
    el.canvas.addEventListener("pointerdown", (e) => this.onPointerDown(e));
    el.canvas.addEventListener("pointermove", (e) => this.onPointerMove(e));
    el.canvas.addEventListener("pointerup", (e) => this.onPointerUp(e));
    el.generateButton.addEventListener("click", () => void this.generate());
    el.deleteButton.addEventListener("click", () => {
      session.deleteLastKeypoint();
      this.render();
    });
    el.clearButton.addEventListener("click", () => {
      session.clearKeypoints();
      this.render();
    });
    el.scrubber.addEventListener("input", () => {
      const idx = Number(el.scrubber.value);
      if (session.frames.length > 0) session.scrubTo(idx);
      this.render();
    });
    el.playButton.addEventListener("click", () => this.togglePlayback());
    el.imageInput.addEventListener("change", () => void this.loadImageFile());
    el.exportButton.addEventListener("click", () => {
      el.keypointText.value = keypointsToText(session.asKeypoints());
    });
    el.importButton.addEventListener("click", () => {
      try {
        session.loadKeypoints(keypointsFromText(el.keypointText.value));
        session.lastError = null;
      } catch (err) {
        if (err instanceof WireFormatError || err instanceof Error) {
          session.setError(err.message);
        }
      }
      this.render();
    });
    this.render();
  }

  /** canvas-pixel coordinates of a pointer event */
  private eventPoint(e: PointerEvent): [number, number] {
    const rect = this.el.canvas.getBoundingClientRect();
    const sx = this.el.canvas.width / rect.width;
    const sy = this.el.canvas.height / rect.height;
    return [(e.clientX - rect.left) * sx, (e.clientY - rect.top) * sy];
  }

  private hitTest(x: number, y: number): number | null {
    const pts = this.session.keypoints;
    for (let i = pts.length - 1; i >= 0; i--) {
      const [px, py] = pts[i]!;
      if (Math.hypot(px - x, py - y) <= HIT_RADIUS) return i;
    }
    return null;
  }

  private onPointerDown(e: PointerEvent): void {
    const [x, y] = this.eventPoint(e);
    if (this.el.freehandToggle.checked) {
      this.drawing = true;
      this.freehandPath = [[x, y]];
      return;
    }
    const hit = this.hitTest(x, y);
    if (hit !== null) {
      this.dragIndex = hit;
    } else {
      this.session.appendKeypoint(x, y);
      this.render();
    }
  }

  private onPointerMove(e: PointerEvent): void {
    const [x, y] = this.eventPoint(e);
    if (this.drawing) {
      this.freehandPath.push([x, y]);
      return;
    }
    if (this.dragIndex !== null) {
      this.session.moveKeypoint(this.dragIndex, x, y);
      this.render();
    }
  }

  private onPointerUp(e: PointerEvent): void {
    if (this.drawing) {
      this.drawing = false;
      const [x, y] = this.eventPoint(e);
      this.freehandPath.push([x, y]);
      const n = Math.max(2, Number(this.el.freehandCount.value) || 2);
      if (this.freehandPath.length >= 2) {
        this.session.resampleFreehand(this.freehandPath, n);
      }
      this.freehandPath = [];
      this.render();
      return;
    }
    this.dragIndex = null;
  }

  private async loadImageFile(): Promise<void> {
    const file = this.el.imageInput.files?.[0];
    if (!file) return;
    const bytes = new Uint8Array(await file.arrayBuffer());
    let bin = "";
    for (const b of bytes) bin += String.fromCharCode(b);
    this.session.image = btoa(bin);
    this.render();
  }

  async generate(): Promise<void> {
    if (!this.session.canGenerate || this.client.busy) return;
    this.el.statusLine.textContent = "generating…";
    try {
      const response = await this.client.generate(this.session.generatePayload());
      this.session.setFrames(response.frames);
      this.el.statusLine.textContent = `${response.frames.length} frames in ${response.timing.seconds.toFixed(2)}s`;
    } catch (err) {
      const msg =
        err instanceof ServiceError
          ? err.message
          : `service unreachable: ${String(err)}`;
      this.session.setError(msg);
    }
    this.render();
  }

  private togglePlayback(): void {
    const pb = this.session.playback;
    pb.playing = !pb.playing && this.session.frames.length > 0;
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
    if (pb.playing) {
      this.timer = setInterval(() => {
        this.session.tick();
        this.render();
      }, 1000 / pb.fps);
    }
    this.render();
  }

  render(): void {
    const { canvas, scrubber, generateButton, statusLine, playButton } = this.el;
    const ctx = canvas.getContext("2d");
    if (ctx !== null) {
      ctx.fillStyle = "#202020";
      ctx.fillRect(0, 0, canvas.width, canvas.height);
      const pb = this.session.playback;
      const shown =
        pb.frameIndex >= 0 ? this.session.frames[pb.frameIndex] : this.session.image;
      if (shown) this.drawPng(ctx, shown);
      this.drawKeypoints(ctx);
    }
    generateButton.disabled = !this.session.canGenerate || this.client.busy;
    const positions = this.session.scrubberPositions;
    scrubber.min = "0";
    scrubber.max = String(Math.max(0, positions.length - 1));
    scrubber.disabled = positions.length === 0;
    scrubber.value = String(Math.max(0, this.session.playback.frameIndex));
    playButton.textContent = this.session.playback.playing ? "Pause" : "Play";
    if (this.session.lastError !== null) {
      statusLine.textContent = `error: ${this.session.lastError}`;
      statusLine.classList.add("error");
    } else {
      statusLine.classList.remove("error");
    }
  }

  private drawPng(ctx: CanvasRenderingContext2D, b64: string): void {
    const img = new Image();
    img.onload = () => {
      ctx.drawImage(img, 0, 0);
      this.drawKeypoints(ctx);
    };
    img.src = `data:image/png;base64,${b64}`;
  }

  private drawKeypoints(ctx: CanvasRenderingContext2D): void {
    const pts = this.session.keypoints;
    pts.forEach(([x, y], t) => {
      const shade = this.session.keypointShade(t, pts.length);
      ctx.fillStyle = `rgb(${shade}, ${shade}, ${shade})`;
      ctx.strokeStyle = "#ffffff";
      ctx.beginPath();
      ctx.arc(x, y, 3, 0, 2 * Math.PI);
      ctx.fill();
      ctx.stroke();
    });
  }
}
