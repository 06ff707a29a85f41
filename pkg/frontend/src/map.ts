// SVG station-marker layer. Rendering is pure: it turns API rows into a
// list of positioned, colored markers (plus a list of stations that have
// no coordinates), which the app then serializes to SVG.

import { DisruptStation, StationRow } from "./api.js";
import {
  CLUSTER_COLORS,
  divergingColor,
  sequentialColor,
  symmetricExtent,
} from "./color.js";

export interface Marker {
  id: string;
  name: string;
  x: number;
  y: number;
  r: number;
  color: string;
  value: number;
}

export interface Layer {
  markers: Marker[];
  missing: string[]; // station ids without coordinates, for the side panel
  legend: string;
  notice?: string;
}

export interface Viewport {
  width: number;
  height: number;
  pad: number;
}

export const DEFAULT_VIEWPORT: Viewport = { width: 720, height: 520, pad: 24 };

interface Projection {
  (lat: number, lon: number): { x: number; y: number };
}

/** Equirectangular fit of the stations' bounding box into the viewport. */
export function makeProjection(stations: StationRow[], vp: Viewport): Projection {
  const placed = stations.filter((s) => !s.missing_coordinates);
  const lats = placed.map((s) => s.lat as number);
  const lons = placed.map((s) => s.lon as number);
  const latMin = Math.min(...lats, 90);
  const latMax = Math.max(...lats, -90);
  const lonMin = Math.min(...lons, 180);
  const lonMax = Math.max(...lons, -180);
  const latSpan = Math.max(latMax - latMin, 1e-9);
  const lonSpan = Math.max(lonMax - lonMin, 1e-9);
  const w = vp.width - 2 * vp.pad;
  const h = vp.height - 2 * vp.pad;
  return (lat, lon) => ({
    x: vp.pad + ((lon - lonMin) / lonSpan) * w,
    y: vp.pad + ((latMax - lat) / latSpan) * h, // north is up
  });
}

function baseMarkers(
  stations: StationRow[],
  vp: Viewport,
  value: (s: StationRow) => number,
  color: (s: StationRow) => string,
  radius: (s: StationRow) => number
): Layer {
  const project = makeProjection(stations, vp);
  const markers: Marker[] = [];
  const missing: string[] = [];
  for (const s of stations) {
    if (s.missing_coordinates) {
      missing.push(s.id);
      continue;
    }
    const { x, y } = project(s.lat as number, s.lon as number);
    markers.push({ id: s.id, name: s.name, x, y, r: radius(s), color: color(s), value: value(s) });
  }
  return { markers, missing, legend: "" };
}

/** Fig 3 style: circles sized and colored by stationary occupancy. */
export function stationaryLayer(stations: StationRow[], vp = DEFAULT_VIEWPORT): Layer {
  const pis = stations.map((s) => s.pi);
  const min = Math.min(...pis);
  const max = Math.max(...pis);
  const layer = baseMarkers(
    stations,
    vp,
    (s) => s.pi,
    (s) => sequentialColor(s.pi, min, max),
    (s) => (max > min ? 3 + 9 * ((s.pi - min) / (max - min)) : 5)
  );
  layer.legend = `pi in [${min}, ${max}]`;
  return layer;
}

/** Fig 4 style: two-color rendering by cluster sign. */
export function clusterLayer(stations: StationRow[], vp = DEFAULT_VIEWPORT): Layer {
  const degenerate = stations.every((s) => s.cluster === 0);
  const layer = baseMarkers(
    stations,
    vp,
    (s) => s.cluster,
    (s) => CLUSTER_COLORS[s.cluster] ?? CLUSTER_COLORS[0],
    () => 5
  );
  layer.legend = "second-eigenvector sign";
  if (degenerate) {
    layer.notice = "clustering degenerate for this day";
  }
  return layer;
}

/** Fig 5 style: diverging red/blue overlay of relative occupancy change. */
export function disruptionLayer(
  stations: StationRow[],
  impact: DisruptStation[],
  vp = DEFAULT_VIEWPORT
): Layer {
  const byId = new Map(impact.map((s) => [s.id, s.rel_delta]));
  const extent = symmetricExtent(impact.map((s) => s.rel_delta));
  const layer = baseMarkers(
    stations,
    vp,
    (s) => byId.get(s.id) ?? 0,
    (s) => divergingColor(byId.get(s.id) ?? 0, extent),
    (s) => (extent > 0 ? 3 + 9 * (Math.abs(byId.get(s.id) ?? 0) / extent) : 3)
  );
  layer.legend = `rel_delta in [-${extent}, ${extent}]`;
  return layer;
}

/** Serialize a layer to an SVG fragment (one circle per marker). */
export function layerToSvg(layer: Layer, vp = DEFAULT_VIEWPORT): string {
  const circles = layer.markers
    .map(
      (m) =>
        `<circle cx="${m.x.toFixed(1)}" cy="${m.y.toFixed(1)}" r="${m.r.toFixed(1)}" ` +
        `fill="${m.color}" data-id="${m.id}"><title>${m.name}: ${m.value}</title></circle>`
    )
    .join("");
  return `<svg viewBox="0 0 ${vp.width} ${vp.height}" xmlns="http://www.w3.org/2000/svg">${circles}</svg>`;
}
