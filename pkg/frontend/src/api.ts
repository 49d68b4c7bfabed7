/**
 * Typed client for the inference service. Only the documented HTTP surface
 * is used: GET /health and POST /generate. One generation request is in
 * flight at a time; a submission made while one is active queues behind it
 * (latest wins) and the queue state is observable for the UI.
 */

import { z } from "zod";

export const GenerateRequestSchema = z.object({
  image: z.string().min(1),
  keypoints: z.array(z.tuple([z.number(), z.number()])).min(1),
  frame_count: z.number().int().min(0),
});

export const GenerateResponseSchema = z.object({
  frames: z.array(z.string()),
  timing: z.object({
    seconds: z.number(),
    frame_count: z.number().int(),
  }),
});

export const HealthSchema = z.object({
  status: z.string(),
  model_config: z.record(z.string(), z.unknown()).optional(),
});

export type GenerateRequest = z.infer<typeof GenerateRequestSchema>;
export type GenerateResponse = z.infer<typeof GenerateResponseSchema>;

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(`service error ${status}: ${detail}`);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceClient {
  private inFlight: Promise<GenerateResponse> | null = null;
  private queued: {
    request: GenerateRequest;
    resolve: (r: GenerateResponse) => void;
    reject: (e: unknown) => void;
  } | null = null;

  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  get busy(): boolean {
    return this.inFlight !== null;
  }

  get queueLength(): number {
    return this.queued === null ? 0 : 1;
  }

  async health(): Promise<z.infer<typeof HealthSchema>> {
    const res = await this.fetchImpl(`${this.baseUrl}/health`);
    return HealthSchema.parse(await res.json());
  }

  /**
   * Submit a generation request. While one is active, the newest submission
   * waits for it and replaces any previously queued one (whose promise is
   * rejected, so the UI can show "superseded").
   */
  generate(request: GenerateRequest): Promise<GenerateResponse> {
    GenerateRequestSchema.parse(request);
    if (this.inFlight !== null) {
      if (this.queued !== null) {
        this.queued.reject(new ServiceError(0, "superseded by a newer request"));
      }
      return new Promise<GenerateResponse>((resolve, reject) => {
        this.queued = { request, resolve, reject };
      });
    }
    const run = this.post(request).finally(() => {
      this.inFlight = null;
      const next = this.queued;
      this.queued = null;
      if (next !== null) {
        this.generate(next.request).then(next.resolve, next.reject);
      }
    });
    this.inFlight = run;
    return run;
  }

  private async post(request: GenerateRequest): Promise<GenerateResponse> {
    const res = await this.fetchImpl(`${this.baseUrl}/generate`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(request),
    });
    const body: unknown = await res.json();
    if (!res.ok) {
      const detail =
        typeof body === "object" && body !== null && "detail" in body
          ? JSON.stringify((body as { detail: unknown }).detail)
          : res.statusText;
      throw new ServiceError(res.status, detail);
    }
    return GenerateResponseSchema.parse(body);
  }
}
