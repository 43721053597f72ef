import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("ApiClient", () => {
  it("lists records with a status filter", async () => {
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse(200, [{ id: "a" }]));
    vi.stubGlobal("fetch", fetchMock);
    const result = await new ApiClient("http://x").listRecords("raw");
    expect(fetchMock).toHaveBeenCalledWith("http://x/api/records?status=raw");
    expect(result).toEqual({ ok: true, value: [{ id: "a" }] });
  });

  it("maps 409 to a conflict result", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn().mockResolvedValue(
        jsonResponse(409, { error: "version_conflict", message: "stale" }),
      ),
    );
    const result = await new ApiClient().submitAnnotation("a", {
      nl: "x",
      annotator: "dana",
      version: 1,
    });
    expect(result.ok).toBe(false);
    if (!result.ok) {
      expect(result.kind).toBe("conflict");
      expect(result.message).toContain("stale");
      expect(result.status).toBe(409);
    }
  });

  it("maps other HTTP errors to rejected", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn().mockResolvedValue(jsonResponse(400, { error: "self_review", message: "no" })),
    );
    const result = await new ApiClient().submitCrosscheck("a", {
      verdict: "accept",
      reviewer: "alice",
      version: 2,
    });
    expect(result.ok).toBe(false);
    if (!result.ok) expect(result.kind).toBe("rejected");
  });

  it("maps network failure to offline", async () => {
    vi.stubGlobal("fetch", vi.fn().mockRejectedValue(new TypeError("fetch failed")));
    const result = await new ApiClient().listRecords();
    expect(result.ok).toBe(false);
    if (!result.ok) expect(result.kind).toBe("offline");
  });

  it("posts crosscheck bodies verbatim", async () => {
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse(200, { id: "a" }));
    vi.stubGlobal("fetch", fetchMock);
    await new ApiClient().submitCrosscheck("a", { verdict: "reject", reviewer: "bob", version: 4 });
    const [url, init] = fetchMock.mock.calls[0];
    expect(url).toBe("/api/records/a/crosscheck");
    expect(JSON.parse(init.body)).toEqual({ verdict: "reject", reviewer: "bob", version: 4 });
  });
});
