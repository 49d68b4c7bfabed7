import { ServiceClient } from "./api.js";
import { Editor, type EditorElements } from "./editor.js";
import { EditorSession } from "./session.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (el === null) throw new Error(`missing element #${id}`);
  return el as T;
}

const params = new URLSearchParams(window.location.search);
const serviceUrl = params.get("service") ?? "http://127.0.0.1:8000";
const width = Number(params.get("width") ?? 64);
const height = Number(params.get("height") ?? 64);

const elements: EditorElements = {
  canvas: byId<HTMLCanvasElement>("editor-canvas"),
  generateButton: byId<HTMLButtonElement>("generate"),
  deleteButton: byId<HTMLButtonElement>("delete-last"),
  clearButton: byId<HTMLButtonElement>("clear"),
  scrubber: byId<HTMLInputElement>("scrubber"),
  playButton: byId<HTMLButtonElement>("play"),
  statusLine: byId<HTMLElement>("status"),
  imageInput: byId<HTMLInputElement>("image-input"),
  keypointText: byId<HTMLTextAreaElement>("keypoint-text"),
  exportButton: byId<HTMLButtonElement>("export-kp"),
  importButton: byId<HTMLButtonElement>("import-kp"),
  freehandToggle: byId<HTMLInputElement>("freehand"),
  freehandCount: byId<HTMLInputElement>("freehand-count"),
};

new Editor(new EditorSession(width, height), new ServiceClient(serviceUrl), elements);
