/**
 * Pure scene construction: (view model, canvas size) -> draw commands.
 *
 * Everything the canvas shows is derived here with no hidden inputs —
 * no clocks, no randomness, no incremental state — so replaying the
 * same frames yields byte-identical command lists, which is what the
 * round-trip tests assert and what makes rendering debuggable.
 */

import type { ViewModel } from "./state.js";
import type { TurbineView } from "./protocol.js";
import {
  contributionColor,
  efficiencyFill,
  formatAngle,
  formatEfficiency,
  formatTimeScale,
  lightColor,
} from "./format.js";

export type DrawCommand =
  | { op: "clear"; color: string }
  | { op: "rect"; x: number; y: number; w: number; h: number; fill?: string; stroke?: string }
  | { op: "line"; x1: number; y1: number; x2: number; y2: number; color: string; width: number; dash?: number[] }
  | { op: "circle"; x: number; y: number; r: number; fill?: string; stroke?: string; width?: number }
  | { op: "arrow"; x: number; y: number; angle: number; length: number; color: string; width: number }
  | { op: "text"; x: number; y: number; text: string; color: string; size: number; align: "left" | "center" | "right" };

const BACKGROUND = "#10141a";
const PANEL = "#1a212c";
const GRID = "#242e3d";
const INK = "#d5dde8";
const MUTED = "#8292a6";
const ACCENT = "#5aa2e0";
const PINNED = "#d9a514";

export interface SceneLayout {
  farm: { x: number; y: number; size: number };
  compass: { x: number; y: number; r: number };
  bar: { x: number; y: number; w: number; h: number };
}

/** Deterministic layout for a given canvas size. */
export function sceneLayout(width: number, height: number): SceneLayout {
  const margin = 24;
  const side = 180; // right-hand instrument column
  const size = Math.max(80, Math.min(width - side - 3 * margin, height - 2 * margin));
  const colX = margin + size + margin;
  return {
    farm: { x: margin, y: margin, size },
    compass: { x: colX + 70, y: margin + 70, r: 54 },
    bar: { x: colX, y: margin + 170, w: 150, h: 16 },
  };
}

function toScreen(
  position: [number, number],
  farm: SceneLayout["farm"],
): { x: number; y: number } {
  // farm coordinates are [0,1]^2 with y up; canvas y grows downward
  return {
    x: farm.x + position[0] * farm.size,
    y: farm.y + (1 - position[1]) * farm.size,
  };
}

/** Canvas angle for a simulation angle (degrees, 0 = +x, CCW). */
function screenAngle(deg: number): number {
  return -deg;
}

function turbineCommands(
  t: TurbineView,
  at: { x: number; y: number },
  hovered: boolean,
): DrawCommand[] {
  const cmds: DrawCommand[] = [];
  if (hovered) {
    cmds.push({ op: "circle", x: at.x, y: at.y, r: 17, stroke: ACCENT, width: 2 });
  }
  // local wind needle (thin, behind the body)
  cmds.push({
    op: "arrow",
    x: at.x,
    y: at.y,
    angle: screenAngle(t.wind_angle),
    length: 26,
    color: MUTED,
    width: 1,
  });
  // orientation arrow tinted by contribution
  cmds.push({
    op: "arrow",
    x: at.x,
    y: at.y,
    angle: screenAngle(t.orientation_angle),
    length: 20,
    color: contributionColor(t.contribution),
    width: 3,
  });
  // body and indicator light
  cmds.push({ op: "circle", x: at.x, y: at.y, r: 7, fill: PANEL, stroke: INK, width: 1 });
  cmds.push({ op: "circle", x: at.x, y: at.y, r: 3.5, fill: lightColor(t.light) });
  if (t.sent) {
    cmds.push({ op: "circle", x: at.x + 9, y: at.y - 9, r: 2.5, fill: ACCENT });
  }
  cmds.push({
    op: "text",
    x: at.x,
    y: at.y + 24,
    text: String(t.index),
    color: MUTED,
    size: 10,
    align: "center",
  });
  return cmds;
}

function compassCommands(
  layout: SceneLayout,
  mainAngle: number,
  pinned: boolean,
): DrawCommand[] {
  const { x, y, r } = layout.compass;
  const needle = pinned ? PINNED : ACCENT;
  const rad = (screenAngle(mainAngle) * Math.PI) / 180;
  return [
    { op: "circle", x, y, r, fill: PANEL, stroke: GRID, width: 2 },
    { op: "text", x, y: y - r - 8, text: "wind", color: MUTED, size: 11, align: "center" },
    { op: "arrow", x, y, angle: screenAngle(mainAngle), length: r - 10, color: needle, width: 3 },
    {
      op: "circle",
      x: x + Math.cos(rad) * (r - 10),
      y: y + Math.sin(rad) * (r - 10),
      r: 3,
      fill: needle,
    },
    {
      op: "text",
      x,
      y: y + r + 16,
      text: formatAngle(mainAngle) + (pinned ? " (pinned)" : ""),
      color: pinned ? PINNED : INK,
      size: 12,
      align: "center",
    },
  ];
}

function performanceCommands(layout: SceneLayout, efficiency: number | null): DrawCommand[] {
  const { x, y, w, h } = layout.bar;
  return [
    { op: "text", x, y: y - 8, text: "performance", color: MUTED, size: 11, align: "left" },
    { op: "rect", x, y, w, h, stroke: GRID },
    { op: "rect", x, y, w: w * efficiencyFill(efficiency), h, fill: "#2e9e4f" },
    {
      op: "text",
      x: x + w,
      y: y + h + 14,
      text: formatEfficiency(efficiency),
      color: INK,
      size: 13,
      align: "right",
    },
  ];
}

function hoverPanel(layout: SceneLayout, t: TurbineView): DrawCommand[] {
  const x = layout.bar.x;
  const y = layout.bar.y + 60;
  const line = (dy: number, text: string, color = INK): DrawCommand => ({
    op: "text",
    x,
    y: y + dy,
    text,
    color,
    size: 11,
    align: "left",
  });
  const prediction =
    t.predicted_angle === null
      ? "prediction: --"
      : `prediction: ${formatAngle(t.predicted_angle)} vs ${formatAngle(t.wind_angle)}`;
  return [
    line(0, `turbine ${t.index}`, ACCENT),
    line(16, `orientation: ${formatAngle(t.orientation_angle)}`),
    line(32, `local wind: ${formatAngle(t.wind_angle)}`),
    line(48, `contribution: ${t.contribution.toFixed(3)}`),
    line(64, `inbox: ${t.inbox_size}  sent: ${t.sent ? "yes" : "no"}`),
    line(80, prediction, MUTED),
  ];
}

export function buildScene(view: ViewModel, width: number, height: number): DrawCommand[] {
  const layout = sceneLayout(width, height);
  const cmds: DrawCommand[] = [{ op: "clear", color: BACKGROUND }];
  const farm = layout.farm;
  cmds.push({ op: "rect", x: farm.x, y: farm.y, w: farm.size, h: farm.size, fill: PANEL, stroke: GRID });

  if (view.connection !== "connected") {
    cmds.push({
      op: "text",
      x: width / 2,
      y: height / 2,
      text: view.connection === "connecting" ? "connecting…" : "disconnected — retrying",
      color: "#e0b341",
      size: 16,
      align: "center",
    });
  }

  const frame = view.frame;
  if (frame === null) {
    return cmds;
  }

  const spots = frame.turbines.map((t) => toScreen(t.position, farm));
  for (const [from, to] of frame.edges) {
    const a = spots[from];
    const b = spots[to];
    if (a === undefined || b === undefined) continue;
    cmds.push({ op: "line", x1: a.x, y1: a.y, x2: b.x, y2: b.y, color: GRID, width: 1, dash: [4, 4] });
  }
  frame.turbines.forEach((t, i) => {
    const at = spots[i];
    if (at !== undefined) {
      cmds.push(...turbineCommands(t, at, view.hover === i));
    }
  });

  cmds.push(...compassCommands(layout, frame.main_angle, frame.wind_pinned));
  cmds.push(...performanceCommands(layout, frame.efficiency));

  const statusX = layout.bar.x;
  const statusY = layout.bar.y + 170;
  const status = [
    `step ${frame.step}  episode ${frame.episode}`,
    `reward ${frame.cumulative_reward.toFixed(2)}`,
    `speed ${formatTimeScale(frame.time_scale)}${frame.paused ? "  paused" : ""}`,
  ];
  status.forEach((text, i) => {
    cmds.push({ op: "text", x: statusX, y: statusY + i * 16, text, color: MUTED, size: 11, align: "left" });
  });

  if (view.hover !== null) {
    const t = frame.turbines[view.hover];
    if (t !== undefined) {
      cmds.push(...hoverPanel(layout, t));
    }
  }
  if (view.notice !== null) {
    cmds.push({ op: "text", x: width / 2, y: height - 12, text: view.notice, color: "#e0b341", size: 12, align: "center" });
  }
  return cmds;
}

/** Nearest turbine within pick radius, for pointer hover. */
export function pickTurbine(
  view: ViewModel,
  width: number,
  height: number,
  px: number,
  py: number,
): number | null {
  if (view.frame === null) return null;
  const farm = sceneLayout(width, height).farm;
  let best: number | null = null;
  let bestDist = 18;
  view.frame.turbines.forEach((t, i) => {
    const at = toScreen(t.position, farm);
    const d = Math.hypot(at.x - px, at.y - py);
    if (d < bestDist) {
      best = i;
      bestDist = d;
    }
  });
  return best;
}
