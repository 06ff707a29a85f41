// Monthly rankings table in the classic layout:
// rank | name | pi | remoteness | influence | fragility.
// Every cell is an API value; this module only sorts and formats.

import { AggregateResponse } from "./api.js";

export const RANKING_COLUMNS = [
  "rank",
  "name",
  "pi",
  "remoteness",
  "influence",
  "fragility",
] as const;

export interface RankingRow {
  rank: number;
  id: string;
  name: string;
  pi: number | null;
  remoteness: number | null;
  influence: number | null;
  fragility: number | null;
  value: number; // the ranked measure's median
}

export interface MeasureTables {
  pi?: AggregateResponse;
  remoteness?: AggregateResponse;
  influence?: AggregateResponse;
  fragility?: AggregateResponse;
}

function median(table: AggregateResponse | undefined, id: string): number | null {
  const entry = table?.[id];
  return entry ? entry.median : null;
}

/**
 * Rows sorted by descending median of `measure`; ties keep ascending
 * station-id order so re-renders are stable.
 */
export function rankingRows(measure: keyof MeasureTables, tables: MeasureTables): RankingRow[] {
  const ranked = tables[measure];
  if (!ranked) {
    return [];
  }
  const ids = Object.keys(ranked).sort();
  ids.sort((a, b) => {
    const diff = ranked[b].median - ranked[a].median;
    return diff !== 0 ? diff : a < b ? -1 : 1;
  });
  return ids.map((id, i) => ({
    rank: i + 1,
    id,
    name: ranked[id].name,
    pi: median(tables.pi, id),
    remoteness: median(tables.remoteness, id),
    influence: median(tables.influence, id),
    fragility: median(tables.fragility, id),
    value: ranked[id].median,
  }));
}

function fmt(x: number | null): string {
  return x === null ? "—" : x.toFixed(6);
}

/** HTML rendering; each row carries its station id for map linking. */
export function tableToHtml(rows: RankingRow[]): string {
  const head = RANKING_COLUMNS.map((c) => `<th>${c}</th>`).join("");
  const body = rows
    .map(
      (r) =>
        `<tr data-id="${r.id}"><td>${r.rank}</td><td>${r.name}</td>` +
        `<td>${fmt(r.pi)}</td><td>${fmt(r.remoteness)}</td>` +
        `<td>${fmt(r.influence)}</td><td>${fmt(r.fragility)}</td></tr>`
    )
    .join("");
  return `<table><thead><tr>${head}</tr></thead><tbody>${body}</tbody></table>`;
}
