// Live device view: top-down tactor position inside the working disc plus
// a z gauge between the hover band and the contact plane.

import { PatternsDoc, Snapshot } from "./types.js";

export interface LivePoint {
  x: number; // px
  y: number;
  zFrac: number; // 0 = top of travel, 1 = contact plane
  inContact: boolean;
}

export class LiveModel {
  readonly size: number;
  readonly padRadius: number;
  private readonly scale: number;
  private readonly zTop: number;
  private readonly zPlane: number;
  trail: LivePoint[] = [];
  last: Snapshot | null = null;

  constructor(doc: PatternsDoc, size = 240, readonly trailLen = 40) {
    this.size = size;
    this.scale = (size / 2 - 16) / doc.workspace.radius;
    this.padRadius = doc.workspace.radius * this.scale;
    this.zPlane = doc.workspace.contact_plane_z;
    this.zTop = this.zPlane - doc.workspace.z_travel;
  }

  push(snap: Snapshot): LivePoint {
    const [x, y, z] = snap.pose;
    const zFrac = Math.min(
      1, Math.max(0, (z - this.zTop) / (this.zPlane - this.zTop)));
    const pt = {
      x: this.size / 2 + x * this.scale,
      y: this.size / 2 - y * this.scale,
      zFrac,
      inContact: snap.in_contact,
    };
    this.trail.push(pt);
    if (this.trail.length > this.trailLen) this.trail.shift();
    this.last = snap;
    return pt;
  }
}

export function renderLiveSvg(model: LiveModel): string {
  const c = model.size / 2;
  const parts: string[] = [];
  parts.push(
    `<svg class="live" viewBox="0 0 ${model.size + 30} ${model.size}" ` +
      `width="${model.size + 30}" height="${model.size}">`,
  );
  parts.push(`<circle class="pad" cx="${c}" cy="${c}" r="${model.padRadius.toFixed(1)}"/>`);
  const n = model.trail.length;
  model.trail.forEach((p, i) => {
    const cls = i === n - 1 ? (p.inContact ? "tip contact" : "tip") : "trail";
    const r = i === n - 1 ? 6 : 2;
    parts.push(
      `<circle class="${cls}" cx="${p.x.toFixed(1)}" cy="${p.y.toFixed(1)}" r="${r}"/>`,
    );
  });
  // z gauge on the right edge, contact plane at the bottom
  const gx = model.size + 10;
  parts.push(`<rect class="gauge" x="${gx}" y="10" width="10" height="${model.size - 20}"/>`);
  const tip = model.trail[n - 1];
  if (tip) {
    const gy = 10 + tip.zFrac * (model.size - 20);
    parts.push(
      `<rect class="gauge-fill${tip.inContact ? " contact" : ""}" ` +
        `x="${gx}" y="${gy.toFixed(1)}" width="10" ` +
        `height="${(model.size - 10 - gy).toFixed(1)}"/>`,
    );
  }
  parts.push("</svg>");
  return parts.join("");
}
