import { describe, expect, it } from "vitest";

import { RISK_BANDS, bandForBeta, betaLabel, cssColor } from "../src/bands.js";

describe("risk band table", () => {
  it("carries the four configured colors", () => {
    expect(RISK_BANDS.map((b) => b.rgb)).toEqual([
      [124, 252, 0], [255, 255, 0], [240, 150, 110], [255, 0, 0],
    ]);
  });

  it("maps boundaries half-open", () => {
    expect(bandForBeta(3.7).name).toBe("Safe");
    expect(bandForBeta(3.69).name).toBe("Low");
    expect(bandForBeta(3.2).name).toBe("Low");
    expect(bandForBeta(2.7).name).toBe("Medium");
    expect(bandForBeta(2.69).name).toBe("High");
    expect(bandForBeta(-5).name).toBe("High");
  });

  it("renders css colors bit-exactly", () => {
    expect(cssColor([124, 252, 0])).toBe("rgb(124,252,0)");
    expect(cssColor([240, 150, 110])).toBe("rgb(240,150,110)");
  });

  it("labels capped indices as >=10", () => {
    expect(betaLabel(10)).toBe("≥10");
    expect(betaLabel(12)).toBe("≥10");
    expect(betaLabel(2.2)).toBe("2.2");
  });
});
