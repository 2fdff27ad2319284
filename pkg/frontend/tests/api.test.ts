import { describe, expect, it, vi } from "vitest";

import { ApiError, Client, parseNdjson } from "../src/api.js";
import { makeRun } from "./fixtures.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

function fakeFetch(handler: (url: string, init?: RequestInit) => Response) {
  const calls: { url: string; init?: RequestInit }[] = [];
  const fn = async (url: string, init?: RequestInit): Promise<Response> => {
    calls.push({ url, init });
    return handler(url, init);
  };
  return { fn, calls };
}

describe("Client", () => {
  it("prefixes every path with the base URL", async () => {
    const { fn, calls } = fakeFetch(() => jsonResponse([]));
    const c = new Client("http://127.0.0.1:8000", fn);
    await c.scenarios();
    expect(calls[0].url).toBe("http://127.0.0.1:8000/scenarios");
    expect(c.frameUrl("run-0001", 7)).toBe("http://127.0.0.1:8000/runs/run-0001/frames/7");
  });

  it("posts run requests as JSON", async () => {
    const { fn, calls } = fakeFetch(() => jsonResponse(makeRun(), 201));
    const c = new Client("", fn);
    const handle = await c.createRun({
      scenario_id: "truck_turn_crash",
      params: { truck_speed: 12 },
      seed: 3,
      sweep: { param: "truck_speed", values: [5, 10] },
    });
    expect(handle.run_id).toBe("run-0001");
    expect(calls[0].url).toBe("/runs");
    expect(calls[0].init?.method).toBe("POST");
    expect((calls[0].init?.headers as Record<string, string>)["content-type"]).toBe(
      "application/json",
    );
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({
      scenario_id: "truck_turn_crash",
      params: { truck_speed: 12 },
      seed: 3,
      sweep: { param: "truck_speed", values: [5, 10] },
    });
  });

  it("surfaces the server's rejection detail", async () => {
    const detail = "ego_speed=99 outside [10, 35]";
    const { fn } = fakeFetch(() => jsonResponse({ detail }, 400));
    const c = new Client("", fn);
    const err = await c.createRun({ scenario_id: "x", params: {}, seed: 0 }).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(400);
    expect(err.detail).toBe(detail);
  });

  it("falls back to the raw body for non-JSON errors", async () => {
    const { fn } = fakeFetch(() => new Response("boom", { status: 500 }));
    const c = new Client("", fn);
    const err = await c.runs().catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.detail).toBe("boom");
  });

  it("parses NDJSON traces line by line", async () => {
    const body =
      JSON.stringify({ sample: 0, t: 0, actors: [] }) +
      "\n" +
      JSON.stringify({ sample: 1, t: 0.25, actors: [] }) +
      "\n";
    const { fn } = fakeFetch(() => new Response(body, { status: 200 }));
    const c = new Client("", fn);
    const frames = await c.trace("run-0001");
    expect(frames).toHaveLength(2);
    expect(frames[1].t).toBe(0.25);
  });

  it("polls until the run finishes", async () => {
    const statuses = ["pending", "running", "done"] as const;
    let n = 0;
    const { fn, calls } = fakeFetch(() => jsonResponse(makeRun({ status: statuses[n++] })));
    const c = new Client("", fn);
    const detail = await c.waitForRun("run-0001", 1);
    expect(detail.status).toBe("done");
    expect(calls).toHaveLength(3);
    expect(calls.every((call) => call.url === "/runs/run-0001")).toBe(true);
  });

  it("treats failed as terminal", async () => {
    const { fn } = fakeFetch(() => jsonResponse(makeRun({ status: "failed", error: "nope" })));
    const c = new Client("", fn);
    const detail = await c.waitForRun("run-0001", 1);
    expect(detail.status).toBe("failed");
    expect(detail.error).toBe("nope");
  });

  it("gives up after the timeout", async () => {
    const { fn } = fakeFetch(() => jsonResponse(makeRun({ status: "pending" })));
    const c = new Client("", fn);
    await expect(c.waitForRun("run-0001", 1, -1)).rejects.toThrow(/still pending/);
  });

  it("polls on a 250 ms default interval", async () => {
    vi.useFakeTimers();
    try {
      let n = 0;
      const { fn } = fakeFetch(() => {
        n++;
        return jsonResponse(makeRun({ status: n >= 2 ? "done" : "pending" }));
      });
      const c = new Client("", fn);
      const pending = c.waitForRun("run-0001");
      await vi.advanceTimersByTimeAsync(0);
      expect(n).toBe(1);
      await vi.advanceTimersByTimeAsync(249);
      expect(n).toBe(1);
      await vi.advanceTimersByTimeAsync(2);
      const detail = await pending;
      expect(n).toBe(2);
      expect(detail.status).toBe("done");
    } finally {
      vi.useRealTimers();
    }
  });
});

describe("parseNdjson", () => {
  it("ignores blank lines and trailing newlines", () => {
    expect(parseNdjson("")).toEqual([]);
    expect(parseNdjson("\n\n")).toEqual([]);
    expect(parseNdjson('{"sample": 0}\n\n{"sample": 1}\n')).toHaveLength(2);
  });
});
