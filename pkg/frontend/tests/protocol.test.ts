import { describe, expect, it } from "vitest";
import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";

import {
  makeControl,
  parseServerMessage,
  PROTOCOL_VERSION,
  type FrameMessage,
} from "../src/protocol.js";

const fixtures = JSON.parse(
  readFileSync(fileURLToPath(new URL("./fixtures/replay.json", import.meta.url)), "utf8"),
) as FrameMessage[];

describe("parseServerMessage", () => {
  it("accepts every recorded frame", () => {
    for (const frame of fixtures) {
      const parsed = parseServerMessage(JSON.stringify(frame));
      expect(parsed).not.toBeNull();
      expect(parsed?.type).toBe("frame");
    }
  });

  it("round-trips frame fields untouched", () => {
    const frame = fixtures[10]!;
    const parsed = parseServerMessage(JSON.stringify(frame)) as FrameMessage;
    expect(parsed).toEqual(frame);
  });

  it("accepts error messages", () => {
    const parsed = parseServerMessage(
      JSON.stringify({ v: 1, type: "error", message: "bad control" }),
    );
    expect(parsed).toEqual({ v: 1, type: "error", message: "bad control" });
  });

  it.each([
    ["not json", "{nope"],
    ["non-object", "42"],
    ["wrong version", JSON.stringify({ ...fixtures[0]!, v: 2 })],
    ["unknown type", JSON.stringify({ v: 1, type: "telemetry" })],
    ["missing step", JSON.stringify({ ...fixtures[0]!, step: undefined })],
    ["string step", JSON.stringify({ ...fixtures[0]!, step: "7" })],
    ["error without message", JSON.stringify({ v: 1, type: "error" })],
  ])("rejects %s", (_name, raw) => {
    expect(parseServerMessage(raw)).toBeNull();
  });

  it("rejects a frame with a malformed turbine", () => {
    const frame = JSON.parse(JSON.stringify(fixtures[0]!)) as FrameMessage;
    (frame.turbines[0] as { light: string }).light = "blue";
    expect(parseServerMessage(JSON.stringify(frame))).toBeNull();
  });
});

describe("makeControl", () => {
  it("builds valueless controls without a value key", () => {
    expect(makeControl("pause")).toEqual({ v: PROTOCOL_VERSION, type: "control", kind: "pause" });
    expect("value" in makeControl("release_wind")).toBe(false);
  });

  it("carries the value for parameterised controls", () => {
    expect(makeControl("set_wind_direction", 270)).toEqual({
      v: PROTOCOL_VERSION,
      type: "control",
      kind: "set_wind_direction",
      value: 270,
    });
    expect(makeControl("set_time_scale", 2.5).value).toBe(2.5);
  });
});
