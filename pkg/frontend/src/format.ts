/** Small display helpers shared by the scene builder and the DOM shell. */

/** Performance number next to the bar, e.g. 1.0 -> "1.00". */
export function formatEfficiency(efficiency: number | null): string {
  return efficiency === null ? "--" : efficiency.toFixed(2);
}

/** Bar fill in [0, 1]; negative efficiency shows an empty bar. */
export function efficiencyFill(efficiency: number | null): number {
  if (efficiency === null) return 0;
  return Math.min(1, Math.max(0, efficiency));
}

/** CSS color for the server-reported indicator light. */
export function lightColor(light: "green" | "yellow" | "red"): string {
  switch (light) {
    case "green":
      return "#2e9e4f";
    case "yellow":
      return "#d9a514";
    case "red":
      return "#cc3a2f";
  }
}

/**
 * Arrow tint over the turbine's contribution: green fading to yellow
 * across (1.0 -> 0.5], red at or below 0.5 (a penalised turbine
 * reports contribution -1).
 */
export function contributionColor(contribution: number): string {
  if (contribution <= 0.5) return "#cc3a2f";
  const t = Math.min(1, Math.max(0, (1 - contribution) / 0.5)); // 0 green .. 1 yellow
  const mix = (a: number, b: number) => Math.round(a + (b - a) * t);
  return `rgb(${mix(46, 217)}, ${mix(158, 165)}, ${mix(79, 20)})`;
}

export function formatAngle(deg: number): string {
  return `${deg.toFixed(1)}°`;
}

export function formatTimeScale(scale: number): string {
  return `${scale >= 10 ? scale.toFixed(0) : scale.toFixed(1)}x`;
}
