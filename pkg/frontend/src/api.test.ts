import { describe, expect, it } from "vitest";

import {
  GenerateResponseSchema,
  ServiceClient,
  ServiceError,
  type GenerateRequest,
} from "./api.js";

const REQUEST: GenerateRequest = {
  image: "aGVsbG8=",
  keypoints: [
    [1, 2],
    [3, 4],
  ],
  frame_count: 1,
};

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function okBody(frames: number) {
  return {
    frames: Array.from({ length: frames }, (_, i) => `f${i}`),
    timing: { seconds: 0.5, frame_count: frames },
  };
}

describe("response schema", () => {
  it("accepts the service shape", () => {
    expect(() => GenerateResponseSchema.parse(okBody(3))).not.toThrow();
  });

  it("rejects missing fields", () => {
    expect(() => GenerateResponseSchema.parse({ frames: [] })).toThrow();
  });
});

describe("ServiceClient", () => {
  it("posts the payload and returns parsed frames", async () => {
    const calls: Array<{ url: string; body: unknown }> = [];
    const client = new ServiceClient("http://svc", async (url, init) => {
      calls.push({ url, body: JSON.parse(String(init?.body)) });
      return jsonResponse(200, okBody(2));
    });
    const res = await client.generate(REQUEST);
    expect(res.frames).toEqual(["f0", "f1"]);
    expect(calls).toEqual([{ url: "http://svc/generate", body: REQUEST }]);
  });

  it("raises ServiceError with the server's detail on 4xx", async () => {
    const client = new ServiceClient("http://svc", async () =>
      jsonResponse(400, { detail: "keypoint out of bounds" }),
    );
    await expect(client.generate(REQUEST)).rejects.toThrow(ServiceError);
    await expect(client.generate(REQUEST)).rejects.toThrow(/keypoint out of bounds/);
  });

  it("propagates network failures", async () => {
    const client = new ServiceClient("http://svc", async () => {
      throw new TypeError("fetch failed");
    });
    await expect(client.generate(REQUEST)).rejects.toThrow("fetch failed");
  });

  it("allows only one request in flight; later submissions queue", async () => {
    let active = 0;
    let maxActive = 0;
    let release: () => void = () => {};
    const gate = new Promise<void>((r) => (release = r));
    const client = new ServiceClient("http://svc", async () => {
      active++;
      maxActive = Math.max(maxActive, active);
      await gate;
      active--;
      return jsonResponse(200, okBody(1));
    });

    const first = client.generate(REQUEST);
    const second = client.generate({ ...REQUEST, frame_count: 2 });
    expect(client.busy).toBe(true);
    expect(client.queueLength).toBe(1);
    release();
    await expect(first).resolves.toBeTruthy();
    await expect(second).resolves.toBeTruthy();
    expect(maxActive).toBe(1);
    expect(client.busy).toBe(false);
  });

  it("a newer queued submission supersedes the previous one", async () => {
    let release: () => void = () => {};
    const gate = new Promise<void>((r) => (release = r));
    let served = 0;
    const client = new ServiceClient("http://svc", async () => {
      served++;
      if (served === 1) await gate;
      return jsonResponse(200, okBody(served));
    });

    const first = client.generate(REQUEST);
    const stale = client.generate({ ...REQUEST, frame_count: 5 });
    const fresh = client.generate({ ...REQUEST, frame_count: 9 });
    await expect(stale).rejects.toThrow(/superseded/);
    release();
    await expect(first).resolves.toBeTruthy();
    const freshRes = await fresh;
    expect(freshRes.frames.length).toBe(2); // only two requests reached the service
    expect(served).toBe(2);
  });

  it("recovers after a failed request", async () => {
    let attempt = 0;
    const client = new ServiceClient("http://svc", async () => {
      attempt++;
      if (attempt === 1) throw new TypeError("fetch failed");
      return jsonResponse(200, okBody(1));
    });
    await expect(client.generate(REQUEST)).rejects.toThrow();
    await expect(client.generate(REQUEST)).resolves.toBeTruthy();
    expect(client.busy).toBe(false);
  });

  it("rejects locally-invalid payloads without calling the service", async () => {
    let called = 0;
    const client = new ServiceClient("http://svc", async () => {
      called++;
      return jsonResponse(200, okBody(1));
    });
    expect(() => client.generate({ ...REQUEST, image: "" })).toThrow();
    expect(() =>
      client.generate({ ...REQUEST, frame_count: -1 }),
    ).toThrow();
    expect(called).toBe(0);
  });

  it("parses /health", async () => {
    const client = new ServiceClient("http://svc", async (url) => {
      expect(url).toBe("http://svc/health");
      return jsonResponse(200, { status: "ready", model_config: { height: 64 } });
    });
    const h = await client.health();
    expect(h.status).toBe("ready");
  });
});
