// Typed client for the /v1 JSON API. Dollar amounts stay strings end to
// end: the engine already formatted them and the UI must not redo the math.

export interface CellRef {
  row: number;
  col: number;
}

export interface QuoteView {
  min: string;
  max: string;
  mean: string;
  multiplier: number;
  source: string;
}

export interface EstimateResponse {
  origin: { lat: number; lon: number; cell: CellRef };
  destination: { lat: number; lon: number; cell: CellRef };
  yellow: QuoteView;
  uber: QuoteView;
  winner: "uber" | "yellow" | "tie";
  delta: string;
  savings: string;
}

export interface HeatmapCell {
  row: number;
  col: number;
  avg_multiplier: number;
  route_count: number;
}

export interface HeatmapResponse {
  cells: HeatmapCell[];
  count: number;
  bounds?: { row0: number; col0: number; n_rows: number; n_cols: number };
}

export type Endpoint = { lat: number; lon: number } | { name: string };

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function toApiError(resp: Response): Promise<ApiError> {
  try {
    const body = await resp.json();
    const detail = body && body.detail;
    if (detail && typeof detail.code === "string") {
      return new ApiError(resp.status, detail.code, detail.message ?? "");
    }
  } catch {
    // non-JSON error body, fall through
  }
  return new ApiError(resp.status, "unknown", resp.statusText);
}

export class FaregridClient {
  constructor(
    private base: string = "/v1",
    private fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {}

  async estimate(
    origin: Endpoint,
    destination: Endpoint,
    userId: string,
    when?: string,
  ): Promise<EstimateResponse> {
    const body: Record<string, unknown> = { origin, destination, user_id: userId };
    if (when) body.when = when;
    const resp = await this.fetchFn(`${this.base}/estimate`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!resp.ok) throw await toApiError(resp);
    return resp.json();
  }

  async heatmap(): Promise<HeatmapResponse> {
    const resp = await this.fetchFn(`${this.base}/surge/heatmap`);
    if (!resp.ok) throw await toApiError(resp);
    return resp.json();
  }
}
