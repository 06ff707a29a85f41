// Thin typed client for the analysis service. All numbers shown anywhere
// in the UI come straight out of these responses; nothing is recomputed
// client-side.

export interface DaySummary {
  day: string;
  n: number;
  kemeny: number;
  dropped_fraction: number;
}

export interface StationRow {
  id: string;
  name: string;
  lat: number | null;
  lon: number | null;
  missing_coordinates: boolean;
  pi: number;
  cluster: number;
}

export interface DisruptStation {
  id: string;
  pi: number;
  pi_tilde: number;
  rel_delta: number;
}

export interface DisruptResponse {
  target: string;
  t: number;
  stations: DisruptStation[];
  summary: { max_gain: number; max_loss: number };
}

export interface AggregateEntry {
  min: number;
  max: number;
  median: number;
  std: number;
  presence: number;
  name: string;
}

export type AggregateResponse = Record<string, AggregateEntry>;

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string
  ) {
    super(message);
  }
}

async function getJson<T>(url: string): Promise<T> {
  const res = await fetch(url);
  if (!res.ok) {
    throw new ApiError(res.status, await errorDetail(res));
  }
  return (await res.json()) as T;
}

async function errorDetail(res: Response): Promise<string> {
  try {
    const body = await res.json();
    return typeof body.detail === "string" ? body.detail : res.statusText;
  } catch {
    return res.statusText;
  }
}

export class ApiClient {
  constructor(private base: string = "") {}

  days(): Promise<DaySummary[]> {
    return getJson(`${this.base}/api/days`);
  }

  stationary(day: string): Promise<StationRow[]> {
    return getJson(`${this.base}/api/day/${day}/stationary`);
  }

  aggregate(measure: string): Promise<AggregateResponse> {
    return getJson(`${this.base}/api/aggregate/${measure}`);
  }

  async disrupt(day: string, stationId: string, t: number): Promise<DisruptResponse> {
    const res = await fetch(`${this.base}/api/day/${day}/disrupt`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ station_id: stationId, t }),
    });
    if (!res.ok) {
      throw new ApiError(res.status, await errorDetail(res));
    }
    return (await res.json()) as DisruptResponse;
  }
}
