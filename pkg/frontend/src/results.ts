// Confusion heatmap and per-pattern rate bars from a session report.

import { Report } from "./types.js";

export interface HeatCell {
  row: string; // actual
  col: string; // perceived
  value: number; // row-normalized rate
  count: number;
}

export interface HeatmapModel {
  patterns: string[];
  cells: HeatCell[];
  diagonalOnly: boolean;
}

export function heatmapModel(report: Report): HeatmapModel {
  const ps = report.patterns;
  const cells: HeatCell[] = [];
  let offDiag = 0;
  ps.forEach((row, i) => {
    ps.forEach((col, j) => {
      const value = report.confusion[i]?.[j] ?? 0;
      const count = report.confusion_counts[i]?.[j] ?? 0;
      if (i !== j) offDiag += count;
      cells.push({ row, col, value, count });
    });
  });
  return { patterns: ps, cells, diagonalOnly: offDiag === 0 };
}

export interface RateBar {
  id: string;
  rate: number;
}

export function rateBars(report: Report): RateBar[] {
  return report.patterns.map((id) => ({
    id,
    rate: report.per_pattern_rate[id] ?? 0,
  }));
}

function shade(v: number): string {
  // white -> deep blue, linear on the row-normalized rate
  const g = Math.round(255 - v * 200);
  const b = Math.round(255 - v * 80);
  return `rgb(${g},${g},${b})`;
}

export function renderHeatmapHtml(model: HeatmapModel): string {
  const ps = model.patterns;
  const head = ps.map((p) => `<th>${p}</th>`).join("");
  const rows = ps
    .map((row, i) => {
      const tds = ps
        .map((_, j) => {
          const cell = model.cells[i * ps.length + j];
          if (!cell) return "<td></td>";
          const pct = (cell.value * 100).toFixed(0);
          return (
            `<td class="heat" style="background:${shade(cell.value)}" ` +
            `title="${cell.row}->${cell.col}: ${cell.count}">${pct}</td>`
          );
        })
        .join("");
      return `<tr><th>${row}</th>${tds}</tr>`;
    })
    .join("");
  return (
    `<table class="heatmap"><thead><tr><th></th>${head}</tr></thead>` +
    `<tbody>${rows}</tbody></table>`
  );
}

export function renderRateBarsHtml(bars: RateBar[]): string {
  const items = bars
    .map((b) => {
      const pct = (b.rate * 100).toFixed(0);
      return (
        `<div class="bar-row"><span class="bar-label">${b.id}</span>` +
        `<div class="bar"><div class="bar-fill" style="width:${pct}%"></div></div>` +
        `<span class="bar-pct">${pct}%</span></div>`
      );
    })
    .join("");
  return `<div class="rate-bars">${items}</div>`;
}
