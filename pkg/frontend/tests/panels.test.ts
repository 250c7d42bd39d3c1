import { describe, expect, it } from "vitest";

import { ApiError, EstimateResponse } from "../src/api";
import { offendingEndpoint, renderErrorBanner, renderVerdict } from "../src/panels";
import tieFixture from "./fixtures/estimate_tie.json";
import uberFixture from "./fixtures/estimate_uber.json";
import yellowFixture from "./fixtures/estimate_yellow.json";
import outOfGrid from "./fixtures/error_out_of_grid.json";
import unknownPlace from "./fixtures/error_unknown_place.json";

const uber = uberFixture as EstimateResponse;
const yellow = yellowFixture as EstimateResponse;
const tie = tieFixture as EstimateResponse;

describe("verdict panels", () => {
  it("renders the black panel for an uber win", () => {
    const html = renderVerdict(uber);
    expect(html).toContain("verdict-uber");
    expect(html).toContain("Take Uber");
    expect(html).not.toContain("verdict-yellow");
    expect(html).not.toContain("Take a Yellow Cab");
    expect(html).toMatchSnapshot();
  });

  it("renders the yellow panel for a yellow win", () => {
    const html = renderVerdict(yellow);
    expect(html).toContain("verdict-yellow");
    expect(html).toContain("Take a Yellow Cab");
    expect(html).not.toContain("verdict-uber");
    expect(html).toMatchSnapshot();
  });

  it("renders a neutral panel with $0.00 for a tie", () => {
    const html = renderVerdict(tie);
    expect(html).toContain("verdict-tie");
    expect(html).toContain("$0.00");
    expect(html).not.toContain("verdict-uber");
    expect(html).not.toContain("verdict-yellow");
    expect(html).toMatchSnapshot();
  });

  it("shows the API savings string verbatim", () => {
    expect(renderVerdict(uber)).toContain(`You save $${uber.savings}`);
    expect(renderVerdict(yellow)).toContain(`You save $${yellow.savings}`);
    // quote strings pass through untouched as well
    expect(renderVerdict(uber)).toContain(`$${uber.yellow.mean}`);
    expect(renderVerdict(uber)).toContain(`$${uber.uber.mean}`);
  });

  it("keys the panel on the winner field alone", () => {
    for (const winner of ["uber", "yellow", "tie"] as const) {
      const html = renderVerdict({ ...uber, winner });
      expect(html).toContain(`verdict-${winner}`);
    }
  });
});

describe("error banners", () => {
  const origin = { lat: 40.95, lon: -74.02 };
  const destination = { lat: 40.634624, lon: -74.000845 };

  it("maps out_of_grid to a human message and blames the origin", () => {
    const err = new ApiError(422, outOfGrid.detail.code, outOfGrid.detail.message);
    const html = renderErrorBanner(err, origin, destination);
    expect(html).toContain("outside the covered area");
    expect(html).toContain('data-blame="origin"');
    expect(html).toMatchSnapshot();
  });

  it("blames the destination when its coordinates are echoed", () => {
    const message = "(40.634624, -74.000845) outside 400x400 grid";
    expect(offendingEndpoint(message, origin, { lat: 40.634624, lon: -74.000845 }))
      .toBe("destination");
  });

  it("blames nobody for name endpoints", () => {
    expect(offendingEndpoint(outOfGrid.detail.message, { name: "harbor_gate" }, null))
      .toBeNull();
  });

  it("maps unknown_place to a human message", () => {
    const err = new ApiError(422, unknownPlace.detail.code, unknownPlace.detail.message);
    const html = renderErrorBanner(err);
    expect(html).toContain("not in the gazetteer");
    expect(html).not.toContain("data-blame");
    expect(html).toMatchSnapshot();
  });

  it("falls back to a generic line for unmapped codes", () => {
    const html = renderErrorBanner(new ApiError(500, "boom", "kaput"));
    expect(html).toContain("Request failed (500).");
    expect(html).toContain("kaput");
  });
});
