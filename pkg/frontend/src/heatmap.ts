import { ApiError, HeatmapCell, HeatmapResponse } from "./api";

/**
 * Monotone color scale over [1.0, cap]: fixed hue, lightness falling with
 * the multiplier. A flat map (cap == 1.0) collapses to the single floor
 * color.
 */
export function colorFor(multiplier: number, cap: number): string {
  const span = cap - 1;
  const t = span > 0 ? Math.min(1, Math.max(0, (multiplier - 1) / span)) : 0;
  const lightness = 92 - Math.round(57 * t);
  return `hsl(18, 85%, ${lightness}%)`;
}

function gridBounds(data: HeatmapResponse) {
  if (data.bounds) return data.bounds;
  const rows = data.cells.map((c) => c.row);
  const cols = data.cells.map((c) => c.col);
  const row0 = Math.min(...rows);
  const col0 = Math.min(...cols);
  return {
    row0,
    col0,
    n_rows: Math.max(...rows) - row0 + 1,
    n_cols: Math.max(...cols) - col0 + 1,
  };
}

/** SVG overlay: one rect per cell, south row at the bottom, plus legend. */
export function renderHeatmap(data: HeatmapResponse, cellPx = 12): string {
  const b = gridBounds(data);
  const cap = Math.max(1, ...data.cells.map((c) => c.avg_multiplier));
  const width = b.n_cols * cellPx;
  const height = b.n_rows * cellPx;
  const legendH = 28;

  const rect = (c: HeatmapCell): string => {
    const x = (c.col - b.col0) * cellPx;
    const y = (b.n_rows - 1 - (c.row - b.row0)) * cellPx;
    return `<rect x="${x}" y="${y}" width="${cellPx}" height="${cellPx}" ` +
      `fill="${colorFor(c.avg_multiplier, cap)}" data-row="${c.row}" data-col="${c.col}">` +
      `<title>cell (${c.row}, ${c.col}): x${c.avg_multiplier.toFixed(4)}</title></rect>`;
  };

  const cells = data.cells.map(rect).join("\n    ");
  return `<svg class="heatmap" xmlns="http://www.w3.org/2000/svg" ` +
    `viewBox="0 0 ${width} ${height + legendH}" role="img">
  <g class="cells">
    ${cells}
  </g>
  <g class="legend" transform="translate(0, ${height + 8})">
    <defs>
      <linearGradient id="surge-scale">
        <stop offset="0" stop-color="${colorFor(1, cap)}"/>
        <stop offset="1" stop-color="${colorFor(cap, cap)}"/>
      </linearGradient>
    </defs>
    <rect x="0" y="0" width="${width}" height="8" fill="url(#surge-scale)"/>
    <text x="0" y="18" class="legend-lo">x1.00</text>
    <text x="${width}" y="18" text-anchor="end" class="legend-hi">x${cap.toFixed(2)}</text>
  </g>
</svg>`;
}

export function renderHeatmapEmpty(err: ApiError): string {
  const note =
    err.status === 404
      ? "No surge statistics are loaded."
      : `Heatmap unavailable (${err.status}).`;
  return `<div class="heatmap-empty"><p>${note}</p></div>`;
}
