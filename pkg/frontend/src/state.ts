// View state for the what-if explorer: one day, one layer, one slider,
// one in-flight disruption at a time, and a history of completed runs.

import { ApiClient, DisruptResponse } from "./api.js";

export type LayerKind =
  | { kind: "stationary" }
  | { kind: "clusters" }
  | { kind: "aggregate"; measure: string }
  | { kind: "disruption"; index: number }; // index into the history

export interface DisruptionRecord {
  station: string;
  t: number;
  maxGain: number;
  maxLoss: number;
  response: DisruptResponse;
}

export class ViewState {
  day: string | null = null;
  layer: LayerKind = { kind: "stationary" };
  intensity = 0.95; // the slider default
  history: DisruptionRecord[] = [];
  private inflight: Promise<DisruptResponse> | null = null;

  constructor(private api: ApiClient) {}

  setIntensity(t: number): void {
    if (!(t > 0 && t <= 1)) {
      throw new RangeError(`intensity must be in (0, 1], got ${t}`);
    }
    this.intensity = t;
  }

  get busy(): boolean {
    return this.inflight !== null;
  }

  /**
   * Run a disruption against the selected day. At most one request is in
   * flight: a click while busy returns the pending promise instead of
   * issuing another request.
   */
  runDisruption(station: string): Promise<DisruptResponse> {
    if (this.inflight) {
      return this.inflight;
    }
    if (!this.day) {
      return Promise.reject(new Error("no day selected"));
    }
    const request = this.api
      .disrupt(this.day, station, this.intensity)
      .then((response) => {
        this.history.push({
          station,
          t: response.t,
          maxGain: response.summary.max_gain,
          maxLoss: response.summary.max_loss,
          response,
        });
        this.layer = { kind: "disruption", index: this.history.length - 1 };
        return response;
      })
      .finally(() => {
        this.inflight = null;
      });
    this.inflight = request;
    return request;
  }

  /** Switch the overlay to an earlier disruption from the history. */
  showHistory(index: number): DisruptionRecord {
    const record = this.history[index];
    if (!record) {
      throw new RangeError(`no disruption #${index} in history`);
    }
    this.layer = { kind: "disruption", index };
    return record;
  }
}
