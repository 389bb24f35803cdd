// View model to SVG/HTML strings. Kept DOM-free so the pipeline is
// testable headless; main.ts assigns the strings into live elements.

import { ViewModel, Zone } from "./layout.js";

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function zoneSvg(z: Zone): string {
  if (z.kind === "marker") {
    return `<ellipse cx="${z.x}" cy="${z.y}" rx="${z.w}" ry="${z.h}" `
      + `fill="${z.color}" fill-opacity="0.45" stroke="${z.color}" data-id="${esc(z.id)}">`
      + `</ellipse>`
      + `<circle cx="${z.x}" cy="${z.y}" r="0.8" fill="${z.color}"/>`;
  }
  const rx = z.kind === "badge" ? 3 : 1;
  return `<rect x="${z.x}" y="${z.y}" width="${z.w}" height="${z.h}" rx="${rx}" `
    + `fill="${z.color}" stroke="#222" stroke-width="0.3" data-id="${esc(z.id)}" `
    + `data-band="${esc(z.band)}"></rect>`
    + `<text x="${z.x + z.w / 2}" y="${z.y + z.h / 2 + 1.3}" font-size="3" `
    + `text-anchor="middle">${esc(z.label)}</text>`;
}

export function renderShadowSvg(vm: ViewModel): string {
  const zones = vm.zones.map(zoneSvg).join("");
  const warn = vm.rebaselineRecommended
    ? `<text x="50" y="58" font-size="3" text-anchor="middle" fill="#b00">`
      + `re-baseline recommended</text>`
    : "";
  return `<svg viewBox="0 0 100 60" xmlns="http://www.w3.org/2000/svg">`
    + `${zones}${warn}</svg>`;
}

export function renderStatusHtml(vm: ViewModel): string {
  const lines = vm.statusLines.map((l) => `<div>${esc(l)}</div>`).join("");
  const flag = vm.degraded ? `<div class="degraded">posterior degraded</div>` : "";
  return `<div class="clock">t = ${vm.clock.toFixed(1)} s (step ${vm.t})</div>`
    + lines + flag;
}

export interface RenderedFrame {
  svg: string;
  status: string;
  session: string;
  t: number;
}

export function renderFrame(vm: ViewModel): RenderedFrame {
  return {
    svg: renderShadowSvg(vm),
    status: renderStatusHtml(vm),
    session: vm.session,
    t: vm.t,
  };
}
