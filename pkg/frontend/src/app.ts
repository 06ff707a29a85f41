// Browser wiring: day picker, layer picker, intensity slider, map clicks,
// disruption history and the rankings table. All logic that computes or
// transforms values lives in the pure modules; this file only moves DOM.

import { ApiClient, StationRow } from "./api.js";
import {
  DEFAULT_VIEWPORT,
  clusterLayer,
  disruptionLayer,
  layerToSvg,
  stationaryLayer,
} from "./map.js";
import { ViewState } from "./state.js";
import { MeasureTables, rankingRows, tableToHtml } from "./table.js";

const api = new ApiClient();
const state = new ViewState(api);

let stations: StationRow[] = [];
const aggregates: MeasureTables = {};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function banner(message: string | null): void {
  const box = el<HTMLDivElement>("banner");
  box.textContent = message ?? "";
  box.style.display = message ? "block" : "none";
}

function renderLayer(): void {
  const map = el<HTMLDivElement>("map");
  const panel = el<HTMLDivElement>("missing");
  let layer;
  if (state.layer.kind === "disruption") {
    const record = state.history[state.layer.index];
    layer = disruptionLayer(stations, record.response.stations);
    el<HTMLDivElement>("summary").textContent =
      `${record.station} @ t=${record.t}: ` +
      `max gain ${record.maxGain}, max loss ${record.maxLoss}`;
  } else if (state.layer.kind === "clusters") {
    layer = clusterLayer(stations);
  } else {
    layer = stationaryLayer(stations);
  }
  map.innerHTML = layerToSvg(layer, DEFAULT_VIEWPORT);
  el<HTMLSpanElement>("legend").textContent = layer.legend;
  panel.textContent = layer.missing.length
    ? `no coordinates: ${layer.missing.join(", ")}`
    : "";
  if (layer.notice) {
    banner(layer.notice);
  }
  for (const circle of map.querySelectorAll("circle")) {
    circle.addEventListener("click", () => {
      const id = circle.getAttribute("data-id");
      if (id) {
        void disrupt(id);
      }
    });
  }
}

function renderHistory(): void {
  const list = el<HTMLUListElement>("history");
  list.innerHTML = "";
  state.history.forEach((record, i) => {
    const item = document.createElement("li");
    item.textContent = `${record.station} (t=${record.t})`;
    item.addEventListener("click", () => {
      state.showHistory(i);
      renderLayer();
    });
    list.appendChild(item);
  });
}

async function disrupt(stationId: string): Promise<void> {
  if (state.busy) {
    return;
  }
  banner(null);
  try {
    await state.runDisruption(stationId);
    renderLayer();
    renderHistory();
  } catch (err) {
    banner(`disruption failed: ${(err as Error).message}`);
  }
}

async function selectDay(day: string): Promise<void> {
  state.day = day;
  try {
    stations = await api.stationary(day);
    banner(null);
  } catch (err) {
    banner(`could not load ${day}: ${(err as Error).message}`);
    return; // keep the stale layer
  }
  renderLayer();
}

async function loadRankings(measure: keyof MeasureTables): Promise<void> {
  const box = el<HTMLDivElement>("rankings");
  try {
    for (const m of ["pi", "remoteness", "influence", "fragility"] as const) {
      if (!aggregates[m]) {
        aggregates[m] = await api.aggregate(m);
      }
    }
  } catch {
    box.innerHTML = "<p>no aggregate available yet</p>";
    return;
  }
  box.innerHTML = tableToHtml(rankingRows(measure, aggregates));
  for (const row of box.querySelectorAll("tr[data-id]")) {
    row.addEventListener("click", () => {
      const id = row.getAttribute("data-id");
      const marker = document.querySelector(`#map circle[data-id="${id}"]`);
      marker?.dispatchEvent(new Event("focus"));
    });
  }
}

async function init(): Promise<void> {
  const slider = el<HTMLInputElement>("intensity");
  slider.value = String(state.intensity);
  slider.addEventListener("input", () => {
    state.setIntensity(Number(slider.value));
    el<HTMLSpanElement>("intensity-value").textContent = slider.value;
  });
  el<HTMLSpanElement>("intensity-value").textContent = slider.value;

  el<HTMLSelectElement>("layer").addEventListener("change", (ev) => {
    const value = (ev.target as HTMLSelectElement).value;
    state.layer = value === "clusters" ? { kind: "clusters" } : { kind: "stationary" };
    renderLayer();
  });

  el<HTMLSelectElement>("measure").addEventListener("change", (ev) => {
    void loadRankings((ev.target as HTMLSelectElement).value as keyof MeasureTables);
  });

  try {
    const days = await api.days();
    const picker = el<HTMLSelectElement>("day");
    for (const d of days) {
      const option = document.createElement("option");
      option.value = d.day;
      option.textContent = `${d.day} (n=${d.n}, K=${d.kemeny})`;
      picker.appendChild(option);
    }
    picker.addEventListener("change", () => void selectDay(picker.value));
    if (days.length) {
      await selectDay(days[0].day);
    }
    await loadRankings("influence");
  } catch (err) {
    banner(`service unreachable: ${(err as Error).message}`);
  }
}

void init();
