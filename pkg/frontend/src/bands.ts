// Risk band color map. The server is authoritative (every reading carries
// its own rgb); this table is used to cross-check bit-exactness and to
// paint legends before the first frame arrives.

export interface Band {
  name: string;
  minBeta: number;
  rgb: [number, number, number];
}

export const RISK_BANDS: Band[] = [
  { name: "Safe", minBeta: 3.7, rgb: [124, 252, 0] },
  { name: "Low", minBeta: 3.2, rgb: [255, 255, 0] },
  { name: "Medium", minBeta: 2.7, rgb: [240, 150, 110] },
  { name: "High", minBeta: -Infinity, rgb: [255, 0, 0] },
];

export function bandForBeta(beta: number): Band {
  for (const band of RISK_BANDS) {
    if (beta >= band.minBeta) return band;
  }
  return RISK_BANDS[RISK_BANDS.length - 1];
}

export function cssColor(rgb: [number, number, number]): string {
  return `rgb(${rgb[0]},${rgb[1]},${rgb[2]})`;
}

/** Display convention: capped indices read as ">=10", else one decimal. */
export function betaLabel(beta: number): string {
  return beta >= 10 ? "≥10" : beta.toFixed(1);
}
