/**
 * The view model: one plain object fully determined by the last server
 * frame plus widget state. Events funnel through reduce(), which
 * returns a new state and never simulates anything client-side.
 */

import type { FrameMessage } from "./protocol.js";

export type ConnectionState = "connecting" | "connected" | "disconnected";

export interface WidgetState {
  /** Slider position; mirrors the last committed set_time_scale. */
  timeScale: number;
  /** Dial angle in degrees while the user is adjusting it. */
  windDial: number;
  /** Whether the pause toggle is down. */
  pauseDown: boolean;
}

export interface ViewModel {
  connection: ConnectionState;
  frame: FrameMessage | null;
  /** Turbine index under the pointer, or null. */
  hover: number | null;
  widgets: WidgetState;
  /** Last server error message, shown until the next frame. */
  notice: string | null;
}

export type ViewEvent =
  | { kind: "socket"; connection: ConnectionState }
  | { kind: "frame"; frame: FrameMessage }
  | { kind: "error"; message: string }
  | { kind: "hover"; turbine: number | null }
  | { kind: "widget"; widgets: Partial<WidgetState> }
  | { kind: "notice"; message: string | null };

export function initialViewModel(): ViewModel {
  return {
    connection: "connecting",
    frame: null,
    hover: null,
    widgets: { timeScale: 1, windDial: 0, pauseDown: false },
    notice: null,
  };
}

export function reduce(state: ViewModel, event: ViewEvent): ViewModel {
  switch (event.kind) {
    case "socket":
      return { ...state, connection: event.connection };
    case "frame":
      return {
        ...state,
        frame: event.frame,
        notice: null,
        // the pause toggle tracks the server's actual paused flag so a
        // second client pausing the shared session stays visible here
        widgets: { ...state.widgets, pauseDown: event.frame.paused },
      };
    case "error":
      return { ...state, notice: event.message };
    case "hover": {
      const count = state.frame === null ? 0 : state.frame.turbines.length;
      const valid = event.turbine !== null && event.turbine >= 0 && event.turbine < count;
      return { ...state, hover: valid ? event.turbine : null };
    }
    case "widget":
      return { ...state, widgets: { ...state.widgets, ...event.widgets } };
    case "notice":
      return { ...state, notice: event.message };
  }
}
