// Client-side session state. Holds only what the server said: the latest
// state frame, a short buffer of recent frames for the events ticker, and
// the HUD numbers. No game logic runs here.

import type { EndFrame, ServerFrame, StartFrame, StateFrame } from "./protocol.js";

export type ConnectionStatus =
  | "connecting"
  | "active"
  | "ended"
  | "discarded"
  | "error";

export interface TickerEntry {
  tick: number;
  kind: string;
}

export interface HudValues {
  score: number;
  timeLeftS: number;
  ticker: TickerEntry[];
}

const RECENT_FRAMES = 8;
const TICKER_LIMIT = 6;

export class SessionState {
  status: ConnectionStatus = "connecting";
  skillTag: string;

  // filled in by the start frame
  game = "";
  version = 0;
  sessionId = "";
  tps = 0;
  timeS = 0;
  actions: string[] = [];

  /** Most recent state frame received; rendering uses this and nothing else. */
  latest: StateFrame | null = null;
  /** Short history, newest last. Feeds the ticker, never the renderer. */
  recent: StateFrame[] = [];
  ticker: TickerEntry[] = [];

  finalScore: number | null = null;
  metrics: Record<string, number> | null = null;
  errorMessage: string | null = null;

  constructor(skillTag: string) {
    this.skillTag = skillTag;
  }

  handleFrame(frame: ServerFrame): void {
    switch (frame.type) {
      case "start":
        this.onStart(frame);
        break;
      case "state":
        this.onState(frame);
        break;
      case "end":
        this.onEnd(frame);
        break;
    }
  }

  private onStart(frame: StartFrame): void {
    this.game = frame.game;
    this.version = frame.version;
    this.sessionId = frame.session_id;
    this.tps = frame.tps;
    this.timeS = frame.time_s;
    this.actions = [...frame.actions];
    this.status = "active";
  }

  private onState(frame: StateFrame): void {
    if (this.status !== "active") return;
    this.latest = frame;
    this.recent.push(frame);
    if (this.recent.length > RECENT_FRAMES) this.recent.shift();
    for (const kind of frame.events) {
      this.ticker.push({ tick: frame.tick, kind });
    }
    if (this.ticker.length > TICKER_LIMIT)
      this.ticker.splice(0, this.ticker.length - TICKER_LIMIT);
  }

  private onEnd(frame: EndFrame): void {
    this.finalScore = frame.score;
    this.metrics = { ...frame.metrics };
    this.status = "ended";
  }

  /** Socket closed. Before the end frame this means the session is gone:
   * the server only logs completed sessions, so mirror that rule. */
  socketClosed(): void {
    if (this.status === "active" || this.status === "connecting")
      this.status = "discarded";
  }

  socketError(message: string): void {
    if (this.status === "ended") return;
    this.errorMessage = message;
    this.status = "error";
  }

  hud(): HudValues {
    return {
      score: this.latest?.score ?? 0,
      timeLeftS: this.latest?.time_left_s ?? this.timeS,
      ticker: [...this.ticker],
    };
  }
}
