import { describe, expect, it } from "vitest";

import { ApiError, FaregridClient } from "../src/api";
import uberFixture from "./fixtures/estimate_uber.json";
import outOfGrid from "./fixtures/error_out_of_grid.json";

function stubFetch(status: number, body: unknown) {
  const calls: Array<{ url: string; init?: RequestInit }> = [];
  const fetchFn = (async (input: RequestInfo | URL, init?: RequestInit) => {
    calls.push({ url: String(input), init });
    return new Response(JSON.stringify(body), {
      status,
      headers: { "content-type": "application/json" },
    });
  }) as typeof fetch;
  return { fetchFn, calls };
}

describe("estimate calls", () => {
  it("posts both endpoints and the user id", async () => {
    const { fetchFn, calls } = stubFetch(200, uberFixture);
    const client = new FaregridClient("/v1", fetchFn);
    await client.estimate({ name: "harbor_gate" }, { lat: 40.63, lon: -74.0 }, "u9");

    expect(calls).toHaveLength(1);
    expect(calls[0].url).toBe("/v1/estimate");
    expect(calls[0].init?.method).toBe("POST");
    expect(JSON.parse(calls[0].init?.body as string)).toEqual({
      origin: { name: "harbor_gate" },
      destination: { lat: 40.63, lon: -74.0 },
      user_id: "u9",
    });
  });

  it("keeps dollar amounts as the exact strings the server sent", async () => {
    const { fetchFn } = stubFetch(200, uberFixture);
    const client = new FaregridClient("/v1", fetchFn);
    const result = await client.estimate({ name: "a" }, { name: "b" }, "u1");

    expect(result.savings).toBe(uberFixture.savings);
    expect(typeof result.savings).toBe("string");
    expect(result.yellow.mean).toBe(uberFixture.yellow.mean);
    expect(result.uber.min).toBe(uberFixture.uber.min);
  });

  it("turns error bodies into ApiError with the server's code", async () => {
    const { fetchFn } = stubFetch(422, outOfGrid);
    const client = new FaregridClient("/v1", fetchFn);
    const err = await client
      .estimate({ lat: 40.95, lon: -74.02 }, { name: "b" }, "u1")
      .then(() => null, (e) => e as ApiError);

    expect(err).toBeInstanceOf(ApiError);
    expect(err!.status).toBe(422);
    expect(err!.code).toBe("out_of_grid");
    expect(err!.message).toContain("outside 400x400 grid");
  });

  it("copes with non-JSON error bodies", async () => {
    const fetchFn = (async () =>
      new Response("<html>bad gateway</html>", { status: 502, statusText: "Bad Gateway" })
    ) as typeof fetch;
    const client = new FaregridClient("/v1", fetchFn);
    const err = await client
      .estimate({ name: "a" }, { name: "b" }, "u1")
      .then(() => null, (e) => e as ApiError);

    expect(err!.code).toBe("unknown");
    expect(err!.status).toBe(502);
  });
});

describe("heatmap calls", () => {
  it("fetches the surge heatmap", async () => {
    const payload = { cells: [], count: 0 };
    const { fetchFn, calls } = stubFetch(200, payload);
    const client = new FaregridClient("/v1", fetchFn);
    expect(await client.heatmap()).toEqual(payload);
    expect(calls[0].url).toBe("/v1/surge/heatmap");
  });

  it("maps a 404 to ApiError", async () => {
    const { fetchFn } = stubFetch(404, {
      detail: { code: "no_surge_stats", message: "no surge statistics loaded" },
    });
    const client = new FaregridClient("/v1", fetchFn);
    const err = await client.heatmap().then(() => null, (e) => e as ApiError);
    expect(err!.code).toBe("no_surge_stats");
  });
});
