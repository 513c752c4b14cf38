/**
 * Browser shell: wires the socket client, the view-model store and the
 * canvas to the control widgets in index.html. All drawing goes
 * through the pure scene builder; all mutation goes through reduce().
 */

import { DashboardClient, type SocketLike } from "./client.js";
import { paint } from "./canvas.js";
import { buildScene, pickTurbine } from "./scene.js";
import { DEFAULT_SERVER_URL, type ControlKind } from "./protocol.js";
import { initialViewModel, reduce, type ViewEvent } from "./state.js";
import { formatTimeScale } from "./format.js";

function must<T extends Element>(selector: string): T {
  const el = document.querySelector<T>(selector);
  if (el === null) throw new Error(`missing element ${selector}`);
  return el;
}

function context2d(element: HTMLCanvasElement): CanvasRenderingContext2D {
  const drawing = element.getContext("2d");
  if (drawing === null) throw new Error("canvas 2d context unavailable");
  return drawing;
}

/** Narrow the browser WebSocket to the shape the client expects. */
function browserSocket(url: string): SocketLike {
  const ws = new WebSocket(url);
  const adapter: SocketLike = {
    send: (data) => ws.send(data),
    close: () => ws.close(),
    onopen: null,
    onclose: null,
    onerror: null,
    onmessage: null,
  };
  ws.onopen = () => adapter.onopen?.();
  ws.onclose = () => adapter.onclose?.();
  ws.onerror = () => adapter.onerror?.();
  ws.onmessage = (event) => adapter.onmessage?.({ data: event.data });
  return adapter;
}

const canvas = must<HTMLCanvasElement>("#farm");
const ctx = context2d(canvas);

const pauseButton = must<HTMLButtonElement>("#pause");
const resetButton = must<HTMLButtonElement>("#reset");
const speedSlider = must<HTMLInputElement>("#speed");
const speedLabel = must<HTMLSpanElement>("#speed-label");
const windDial = must<HTMLInputElement>("#wind-dial");
const windLabel = must<HTMLSpanElement>("#wind-label");
const windAuto = must<HTMLButtonElement>("#wind-auto");
const connectionBadge = must<HTMLSpanElement>("#connection");

let view = initialViewModel();
let dirty = true;

function dispatch(event: ViewEvent): void {
  view = reduce(view, event);
  dirty = true;
}

const serverUrl =
  new URLSearchParams(window.location.search).get("server") ?? DEFAULT_SERVER_URL;

const client = new DashboardClient(
  serverUrl,
  {
    onFrame: (frame) => dispatch({ kind: "frame", frame }),
    onServerError: (message) => dispatch({ kind: "error", message: `server: ${message}` }),
    onConnection: (connection) => {
      connectionBadge.textContent = connection;
      connectionBadge.dataset.state = connection;
      dispatch({ kind: "socket", connection });
    },
    onDiscarded: (kinds) =>
      dispatch({ kind: "notice", message: `dropped stale controls: ${kinds.join(", ")}` }),
  },
  {
    socketFactory: browserSocket,
    setTimer: (fn, ms) => window.setTimeout(fn, ms),
    clearTimer: (handle) => window.clearTimeout(handle as number),
    now: () => Date.now(),
  },
);
client.connect();

/** One committed user gesture -> exactly one control message. */
function gesture(kind: ControlKind, value?: number): void {
  client.sendControl(kind, value);
}

pauseButton.addEventListener("click", () => {
  const paused = view.frame?.paused ?? view.widgets.pauseDown;
  gesture(paused ? "resume" : "pause");
  dispatch({ kind: "widget", widgets: { pauseDown: !paused } });
});
resetButton.addEventListener("click", () => gesture("reset"));

// slider: live label while dragging, one control on release
speedSlider.addEventListener("input", () => {
  const scale = sliderScale(speedSlider.valueAsNumber);
  speedLabel.textContent = formatTimeScale(scale);
  dispatch({ kind: "widget", widgets: { timeScale: scale } });
});
speedSlider.addEventListener("change", () => {
  gesture("set_time_scale", sliderScale(speedSlider.valueAsNumber));
});

/** Map the linear slider [-10, 20] to 0.1x..100x logarithmically. */
function sliderScale(position: number): number {
  return Number((10 ** (position / 10)).toFixed(position >= 10 ? 0 : 1));
}

windDial.addEventListener("input", () => {
  windLabel.textContent = `${windDial.valueAsNumber}°`;
  dispatch({ kind: "widget", widgets: { windDial: windDial.valueAsNumber } });
});
windDial.addEventListener("change", () => {
  gesture("set_wind_direction", windDial.valueAsNumber);
});
windAuto.addEventListener("click", () => gesture("release_wind"));

canvas.addEventListener("mousemove", (event) => {
  const rect = canvas.getBoundingClientRect();
  const turbine = pickTurbine(
    view,
    canvas.width,
    canvas.height,
    event.clientX - rect.left,
    event.clientY - rect.top,
  );
  if (turbine !== view.hover) dispatch({ kind: "hover", turbine });
});
canvas.addEventListener("mouseleave", () => dispatch({ kind: "hover", turbine: null }));

function tick(): void {
  if (dirty) {
    dirty = false;
    paint(ctx, buildScene(view, canvas.width, canvas.height));
  }
  window.requestAnimationFrame(tick);
}
window.requestAnimationFrame(tick);
