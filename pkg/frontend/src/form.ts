import { ApiError, Endpoint, EstimateResponse } from "./api";
import { renderErrorBanner, renderVerdict } from "./panels";

export interface EstimateApi {
  estimate(
    origin: Endpoint,
    destination: Endpoint,
    userId: string,
    when?: string,
  ): Promise<EstimateResponse>;
}

export interface JourneyForm {
  origin: Endpoint | null;
  destination: Endpoint | null;
}

export function canSubmit(form: JourneyForm): boolean {
  return form.origin !== null && form.destination !== null;
}

/** "40.62, -74.01" becomes coordinates; any other text is a place name. */
export function parseEndpoint(text: string): Endpoint | null {
  const trimmed = text.trim();
  if (!trimmed) return null;
  const m = trimmed.match(/^(-?\d+(?:\.\d+)?)\s*,\s*(-?\d+(?:\.\d+)?)$/);
  if (m) return { lat: Number(m[1]), lon: Number(m[2]) };
  return { name: trimmed };
}

/**
 * One in-flight estimate at a time: each submit takes a ticket and a
 * response is only presented while its ticket is still the latest, so a
 * slow early answer can never overwrite a later one.
 */
export class EstimateFlow {
  private seq = 0;

  constructor(
    private client: EstimateApi,
    private present: (html: string) => void,
  ) {}

  async submit(form: JourneyForm, userId: string): Promise<void> {
    if (!canSubmit(form)) return;
    const ticket = ++this.seq;
    const origin = form.origin!;
    const destination = form.destination!;
    try {
      const response = await this.client.estimate(origin, destination, userId);
      if (ticket !== this.seq) return;
      this.present(renderVerdict(response));
    } catch (err) {
      if (ticket !== this.seq) return;
      if (err instanceof ApiError) {
        this.present(renderErrorBanner(err, origin, destination));
      } else {
        throw err;
      }
    }
  }
}
