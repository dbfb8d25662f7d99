import { describe, expect, it } from "vitest";

import type { StateFrame } from "../src/protocol.js";
import { SessionState } from "../src/state.js";

function start(overrides: Partial<Record<string, unknown>> = {}) {
  return {
    type: "start" as const,
    game: "batkill",
    version: 1,
    session_id: "batkill-v1-play0001",
    tps: 60,
    time_s: 180,
    actions: ["NOOP", "LEFT", "RIGHT", "ATTACK", "JUMP"],
    ...overrides,
  };
}

function stateFrame(tick: number, overrides: Partial<StateFrame> = {}): StateFrame {
  return {
    type: "state",
    tick,
    time_left_s: 180 - tick / 60,
    score: 0,
    entities: [],
    events: [],
    ...overrides,
  };
}

describe("SessionState", () => {
  it("start frame activates the session and copies metadata", () => {
    const s = new SessionState("novice");
    expect(s.status).toBe("connecting");
    s.handleFrame(start());
    expect(s.status).toBe("active");
    expect(s.game).toBe("batkill");
    expect(s.sessionId).toBe("batkill-v1-play0001");
    expect(s.timeS).toBe(180);
    expect(s.skillTag).toBe("novice");
  });

  it("hud before any state frame shows zero score and full clock", () => {
    const s = new SessionState("novice");
    s.handleFrame(start());
    const hud = s.hud();
    expect(hud.score).toBe(0);
    expect(hud.timeLeftS).toBe(180);
    expect(hud.ticker).toEqual([]);
  });

  it("score and time bind to the displayed frame", () => {
    const s = new SessionState("novice");
    s.handleFrame(start());
    s.handleFrame(stateFrame(10, { score: 1, events: ["BAT_KILLED"] }));
    expect(s.latest?.tick).toBe(10);
    const hud = s.hud();
    expect(hud.score).toBe(1); // same frame that carried the kill event
    expect(hud.ticker).toEqual([{ tick: 10, kind: "BAT_KILLED" }]);
  });

  it("always exposes the most recent frame received", () => {
    const s = new SessionState("novice");
    s.handleFrame(start());
    for (let t = 0; t < 20; t++) s.handleFrame(stateFrame(t));
    expect(s.latest?.tick).toBe(19);
    expect(s.recent.length).toBeLessThanOrEqual(8);
    expect(s.recent[s.recent.length - 1]?.tick).toBe(19);
  });

  it("ticker keeps only the most recent events", () => {
    const s = new SessionState("novice");
    s.handleFrame(start());
    for (let t = 0; t < 10; t++)
      s.handleFrame(stateFrame(t, { events: [`EV${t}`] }));
    const kinds = s.hud().ticker.map((e) => e.kind);
    expect(kinds).toEqual(["EV4", "EV5", "EV6", "EV7", "EV8", "EV9"]);
  });

  it("end frame finishes the session", () => {
    const s = new SessionState("professional");
    s.handleFrame(start());
    s.handleFrame(stateFrame(0));
    s.handleFrame({ type: "end", score: 12, metrics: { BAT_KILLED: 14 } });
    expect(s.status).toBe("ended");
    expect(s.finalScore).toBe(12);
    expect(s.metrics).toEqual({ BAT_KILLED: 14 });
    // stray frames after the end change nothing
    s.handleFrame(stateFrame(999, { score: 99 }));
    expect(s.hud().score).toBe(0);
  });

  it("socket close mid-session discards it", () => {
    const s = new SessionState("novice");
    s.handleFrame(start());
    s.handleFrame(stateFrame(5));
    s.socketClosed();
    expect(s.status).toBe("discarded");
  });

  it("socket close after the end frame keeps the result", () => {
    const s = new SessionState("novice");
    s.handleFrame(start());
    s.handleFrame({ type: "end", score: 3, metrics: {} });
    s.socketClosed();
    expect(s.status).toBe("ended");
    expect(s.finalScore).toBe(3);
  });

  it("connection refused surfaces as an error state", () => {
    const s = new SessionState("novice");
    s.socketError("connection failed");
    expect(s.status).toBe("error");
    expect(s.errorMessage).toBe("connection failed");
  });
});
