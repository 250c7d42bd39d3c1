import { ApiError, Endpoint, EstimateResponse } from "./api";

// Panel look is a pure function of the winner field and nothing else.
const PANELS = {
  uber: { cls: "verdict-uber", headline: "Take Uber" },
  yellow: { cls: "verdict-yellow", headline: "Take a Yellow Cab" },
  tie: { cls: "verdict-tie", headline: "Either works" },
} as const;

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Full-screen verdict panel. All dollar strings are shown verbatim. */
export function renderVerdict(r: EstimateResponse): string {
  const p = PANELS[r.winner];
  const surge =
    r.uber.multiplier > 1
      ? `<p class="surge-note">Uber surge x${r.uber.multiplier}</p>`
      : "";
  return `<section class="verdict ${p.cls}">
  <h1>${p.headline}</h1>
  <p class="savings">You save $${esc(r.savings)}</p>
  <dl class="quotes">
    <dt>Yellow cab</dt><dd>$${esc(r.yellow.mean)}</dd>
    <dt>Uber</dt><dd>$${esc(r.uber.mean)}</dd>
  </dl>
  ${surge}</section>`;
}

const ERROR_TEXT: Record<string, string> = {
  out_of_grid: "That location is outside the covered area.",
  unknown_place: "That place name is not in the gazetteer.",
  provider_unavailable: "No price is available for this route right now.",
  no_surge_stats: "Surge statistics are not loaded on the server.",
};

/**
 * Which submitted endpoint an out-of-grid message points at. The server
 * echoes the rejected coordinates with six decimals, so match on that.
 */
export function offendingEndpoint(
  message: string,
  origin: Endpoint | null,
  destination: Endpoint | null,
): "origin" | "destination" | null {
  const stamp = (e: Endpoint | null): string | null =>
    e && "lat" in e ? `(${e.lat.toFixed(6)}, ${e.lon.toFixed(6)})` : null;
  const o = stamp(origin);
  if (o && message.includes(o)) return "origin";
  const d = stamp(destination);
  if (d && message.includes(d)) return "destination";
  return null;
}

export function renderErrorBanner(
  err: ApiError,
  origin: Endpoint | null = null,
  destination: Endpoint | null = null,
): string {
  const human = ERROR_TEXT[err.code] ?? `Request failed (${err.status}).`;
  let blame = "";
  if (err.code === "out_of_grid") {
    const which = offendingEndpoint(err.message, origin, destination);
    if (which) blame = ` data-blame="${which}"`;
  }
  return `<div class="banner banner-${esc(err.code)}"${blame}>
  <strong>${esc(human)}</strong>
  <span class="detail">${esc(err.message)}</span>
</div>`;
}
