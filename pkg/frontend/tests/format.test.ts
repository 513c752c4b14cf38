import { describe, expect, it } from "vitest";

import {
  contributionColor,
  efficiencyFill,
  formatAngle,
  formatEfficiency,
  formatTimeScale,
  lightColor,
} from "../src/format.js";

describe("performance display", () => {
  it('renders efficiency 1.0 as a full bar and the number "1.00"', () => {
    expect(formatEfficiency(1.0)).toBe("1.00");
    expect(efficiencyFill(1.0)).toBe(1);
  });

  it("shows a placeholder before the first step", () => {
    expect(formatEfficiency(null)).toBe("--");
    expect(efficiencyFill(null)).toBe(0);
  });

  it("clamps the bar on out-of-range efficiency", () => {
    expect(efficiencyFill(-1)).toBe(0);
    expect(efficiencyFill(2)).toBe(1);
    expect(formatEfficiency(-0.125)).toBe("-0.13");
  });
});

describe("indicator colors", () => {
  it("maps the three server lights to distinct colors", () => {
    const colors = new Set([lightColor("green"), lightColor("yellow"), lightColor("red")]);
    expect(colors.size).toBe(3);
  });

  it("tints penalised turbines red (contribution at or below 0.5)", () => {
    expect(contributionColor(-1)).toBe("#cc3a2f");
    expect(contributionColor(0.5)).toBe("#cc3a2f");
  });

  it("ramps green to yellow over (1.0 -> 0.5]", () => {
    expect(contributionColor(1.0)).toBe("rgb(46, 158, 79)");
    // just above the threshold is still on the ramp (≈ yellow), not red
    expect(contributionColor(0.5000001)).toBe("rgb(217, 165, 20)");
    expect(contributionColor(0.5000001)).not.toBe(contributionColor(0.5));
    const mid = contributionColor(0.75);
    expect(mid).toMatch(/^rgb\(\d+, \d+, \d+\)$/);
    expect(mid).not.toBe(contributionColor(1.0));
  });
});

describe("labels", () => {
  it("formats angles with one decimal and a degree sign", () => {
    expect(formatAngle(269.96)).toBe("270.0°");
  });

  it("formats time scales compactly", () => {
    expect(formatTimeScale(1)).toBe("1.0x");
    expect(formatTimeScale(0.1)).toBe("0.1x");
    expect(formatTimeScale(100)).toBe("100x");
  });
});
