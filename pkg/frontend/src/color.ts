// Color scales: a sequential ramp for occupancy-like measures and a
// red/blue diverging scale, symmetric about zero, for disruption deltas
// (red = gain, blue = loss).

function lerp(a: number, b: number, t: number): number {
  return a + (b - a) * t;
}

function rgb(r: number, g: number, b: number): string {
  return `rgb(${Math.round(r)},${Math.round(g)},${Math.round(b)})`;
}

/** Sequential light-yellow -> dark-red ramp over [min, max]. */
export function sequentialColor(value: number, min: number, max: number): string {
  const span = max - min;
  const t = span > 0 ? Math.max(0, Math.min(1, (value - min) / span)) : 0;
  return rgb(lerp(255, 165, t), lerp(237, 15, t), lerp(160, 21, t));
}

/**
 * Diverging scale for a signed value. The scale is symmetric: the color
 * depends only on value / extent where extent = max(|all values|), so
 * +x and -x always sit at mirrored intensities.
 */
export function divergingColor(value: number, extent: number): string {
  if (extent <= 0) {
    return rgb(245, 245, 245);
  }
  const t = Math.max(-1, Math.min(1, value / extent));
  if (t >= 0) {
    // white -> red
    return rgb(lerp(245, 215, t), lerp(245, 25, t), lerp(245, 28, t));
  }
  // white -> blue
  return rgb(lerp(245, 33, -t), lerp(245, 102, -t), lerp(245, 172, -t));
}

/** Largest absolute value, used as the symmetric extent of the scale. */
export function symmetricExtent(values: number[]): number {
  return values.reduce((m, v) => Math.max(m, Math.abs(v)), 0);
}

export const CLUSTER_COLORS: Record<number, string> = {
  [-1]: "#3366ac",
  0: "#999999",
  1: "#d7191c",
};
