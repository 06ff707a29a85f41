import { AggregateResponse, DisruptResponse, StationRow } from "../src/api.js";

export function toyStations(): StationRow[] {
  return [
    { id: "H", name: "Hub Central", lat: 47.0, lon: 8.0, missing_coordinates: false, pi: 0.3, cluster: 1 },
    { id: "L0", name: "Leaf Nord", lat: 47.1, lon: 8.0, missing_coordinates: false, pi: 0.1, cluster: -1 },
    { id: "L1", name: "Leaf Ost", lat: 47.0, lon: 8.1, missing_coordinates: false, pi: 0.08, cluster: -1 },
    { id: "L2", name: "Leaf Sued", lat: null, lon: null, missing_coordinates: true, pi: 0.05, cluster: 1 },
  ];
}

export function toyDisruption(): DisruptResponse {
  return {
    target: "H",
    t: 0.95,
    stations: [
      { id: "H", pi: 0.3, pi_tilde: 0.12, rel_delta: -0.6 },
      { id: "L0", pi: 0.1, pi_tilde: 0.13, rel_delta: 0.3 },
      { id: "L1", pi: 0.08, pi_tilde: 0.088, rel_delta: 0.1 },
      { id: "L2", pi: 0.05, pi_tilde: 0.05, rel_delta: 0.0 },
    ],
    summary: { max_gain: 0.3, max_loss: -0.6 },
  };
}

export function toyAggregate(values: Record<string, number>): AggregateResponse {
  const out: AggregateResponse = {};
  for (const [id, median] of Object.entries(values)) {
    out[id] = { min: median / 2, max: median * 2, median, std: 0.01, presence: 2, name: `Station ${id}` };
  }
  return out;
}
