// Visual guides for the two pattern catalogs: nine contact dots and eight
// stretch arrows with start dots. Every position is scaled straight from
// the server's /patterns payload; nothing about the layout lives here.

import { PatternsDoc } from "./types.js";

export interface GuideDot {
  id: string;
  x: number; // px in the guide viewbox
  y: number;
}

export interface GuideArrow {
  id: string;
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

export interface GuideModel {
  size: number; // square viewbox edge, px
  padRadius: number; // workspace disc, px
  dots: GuideDot[];
  arrows: GuideArrow[];
}

// mm -> px, y flipped so +y (the "U" direction) points up on screen
function project(size: number, scale: number, x: number, y: number) {
  return { x: size / 2 + x * scale, y: size / 2 - y * scale };
}

export function buildGuideModel(doc: PatternsDoc, size = 240): GuideModel {
  const padRadiusMm = doc.workspace.radius;
  const scale = (size / 2 - 16) / padRadiusMm;
  const dots = (doc.contact ?? []).map((c) => {
    const p = project(size, scale, c.position[0], c.position[1]);
    return { id: c.id, x: p.x, y: p.y };
  });
  const arrows = (doc.stretch ?? []).map((s) => {
    const a = project(size, scale, s.start[0], s.start[1]);
    const b = project(size, scale, s.end[0], s.end[1]);
    return { id: s.id, x1: a.x, y1: a.y, x2: b.x, y2: b.y };
  });
  return { size, padRadius: padRadiusMm * scale, dots, arrows };
}

export function renderGuideSvg(model: GuideModel, highlight?: string): string {
  const c = model.size / 2;
  const parts: string[] = [];
  parts.push(
    `<svg class="guide" viewBox="0 0 ${model.size} ${model.size}" ` +
      `width="${model.size}" height="${model.size}">`,
  );
  parts.push(
    `<circle class="pad" cx="${c}" cy="${c}" r="${model.padRadius.toFixed(1)}"/>`,
  );
  for (const d of model.dots) {
    const hl = d.id === highlight ? " hl" : "";
    parts.push(
      `<g class="dot${hl}" data-id="${d.id}">` +
        `<circle cx="${d.x.toFixed(1)}" cy="${d.y.toFixed(1)}" r="7"/>` +
        `<text x="${d.x.toFixed(1)}" y="${(d.y - 11).toFixed(1)}">${d.id}</text>` +
        `</g>`,
    );
  }
  for (const a of model.arrows) {
    const hl = a.id === highlight ? " hl" : "";
    parts.push(
      `<g class="arrow${hl}" data-id="${a.id}">` +
        `<circle cx="${a.x1.toFixed(1)}" cy="${a.y1.toFixed(1)}" r="4"/>` +
        `<line x1="${a.x1.toFixed(1)}" y1="${a.y1.toFixed(1)}" ` +
        `x2="${a.x2.toFixed(1)}" y2="${a.y2.toFixed(1)}" ` +
        `marker-end="url(#arrowhead)"/>` +
        `<text x="${a.x2.toFixed(1)}" y="${(a.y2 - 8).toFixed(1)}">${a.id}</text>` +
        `</g>`,
    );
  }
  parts.push(
    `<defs><marker id="arrowhead" markerWidth="8" markerHeight="8" ` +
      `refX="6" refY="3" orient="auto">` +
      `<path d="M0,0 L6,3 L0,6 z"/></marker></defs>`,
  );
  parts.push("</svg>");
  return parts.join("");
}
