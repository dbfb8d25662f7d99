// Wire format for the play server. All frames are JSON text; the server is
// authoritative and the client only ever sends which actions are held.

export interface Entity {
  id: number;
  kind: string;
  x: number;
  y: number; // world y grows upward; the renderer flips it
  w: number;
  h: number;
  facing: number; // +1 right, -1 left
}

export interface StartFrame {
  type: "start";
  game: string;
  version: number;
  session_id: string;
  tps: number;
  time_s: number;
  actions: string[];
}

export interface StateFrame {
  type: "state";
  tick: number;
  time_left_s: number;
  score: number;
  entities: Entity[];
  events: string[];
}

export interface EndFrame {
  type: "end";
  score: number;
  metrics: Record<string, number>;
}

export type ServerFrame = StartFrame | StateFrame | EndFrame;

export class ProtocolFormatError extends Error {}

function fail(why: string): never {
  throw new ProtocolFormatError(why);
}

function num(doc: Record<string, unknown>, key: string): number {
  const v = doc[key];
  if (typeof v !== "number" || !Number.isFinite(v)) fail(`bad ${key}: ${v}`);
  return v;
}

function str(doc: Record<string, unknown>, key: string): string {
  const v = doc[key];
  if (typeof v !== "string") fail(`bad ${key}: ${v}`);
  return v;
}

function entity(raw: unknown): Entity {
  if (typeof raw !== "object" || raw === null) fail("entity is not an object");
  const doc = raw as Record<string, unknown>;
  return {
    id: num(doc, "id"),
    kind: str(doc, "kind"),
    x: num(doc, "x"),
    y: num(doc, "y"),
    w: num(doc, "w"),
    h: num(doc, "h"),
    facing: num(doc, "facing"),
  };
}

export function parseServerFrame(text: string): ServerFrame {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    fail(`frame is not JSON: ${text.slice(0, 80)}`);
  }
  if (typeof raw !== "object" || raw === null) fail("frame is not an object");
  const doc = raw as Record<string, unknown>;
  switch (doc.type) {
    case "start": {
      const actions = doc.actions;
      if (!Array.isArray(actions) || actions.some((a) => typeof a !== "string"))
        fail("start frame needs an actions list");
      return {
        type: "start",
        game: str(doc, "game"),
        version: num(doc, "version"),
        session_id: str(doc, "session_id"),
        tps: num(doc, "tps"),
        time_s: num(doc, "time_s"),
        actions: actions as string[],
      };
    }
    case "state": {
      const entities = doc.entities;
      const events = doc.events;
      if (!Array.isArray(entities)) fail("state frame needs entities");
      if (!Array.isArray(events) || events.some((e) => typeof e !== "string"))
        fail("state frame needs an events list");
      return {
        type: "state",
        tick: num(doc, "tick"),
        time_left_s: num(doc, "time_left_s"),
        score: num(doc, "score"),
        entities: entities.map(entity),
        events: events as string[],
      };
    }
    case "end": {
      const metrics = doc.metrics;
      if (typeof metrics !== "object" || metrics === null)
        fail("end frame needs metrics");
      return {
        type: "end",
        score: num(doc, "score"),
        metrics: metrics as Record<string, number>,
      };
    }
    default:
      fail(`unknown frame type ${JSON.stringify(doc.type)}`);
  }
}

/** Serialized input frame; held set is sorted so identical sets produce
 * identical wire bytes. */
export function inputFrame(held: Iterable<string>): string {
  const names = Array.from(new Set(held)).sort();
  return JSON.stringify({ type: "input", held: names });
}
