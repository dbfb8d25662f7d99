// Scene building. Pure: a state frame goes in, a list of draw ops comes
// out, and the canvas layer just executes them. Rendering is kind-driven
// so one client covers both games and degrades gracefully on a game it
// has never seen.

import type { Entity, StateFrame } from "./protocol.js";

export interface WorldExtents {
  w: number;
  h: number;
}

/** Native world sizes for the bundled games. Unknown games fall back to
 * fit-to-entities. */
export const WORLD_PRESETS: Readonly<Record<string, WorldExtents>> = {
  batkill: { w: 800, h: 160 },
  jungle: { w: 600, h: 800 },
};

const FALLBACK_EXTENTS: WorldExtents = { w: 100, h: 100 };

/** World extents for a game. For unknown games the box grows to fit what
 * the frames show and never shrinks, so the view cannot jitter. */
export function extentsFor(
  game: string,
  frame: StateFrame | null,
  prev: WorldExtents | null,
): WorldExtents {
  const preset = WORLD_PRESETS[game];
  if (preset !== undefined) return preset;
  let { w, h } = prev ?? FALLBACK_EXTENTS;
  for (const e of frame?.entities ?? []) {
    w = Math.max(w, e.x + e.w);
    h = Math.max(h, e.y + e.h);
  }
  return { w, h };
}

export interface ClearOp {
  op: "clear";
  color: string;
}

export interface RectOp {
  op: "rect";
  x: number;
  y: number;
  w: number;
  h: number;
  color: string;
  kind: string;
  entityId: number;
}

/** Bright strip on the edge an entity faces. */
export interface FacingOp {
  op: "facing";
  x: number;
  y: number;
  w: number;
  h: number;
  color: string;
}

export type DrawOp = ClearOp | RectOp | FacingOp;

export const BACKGROUND = "#10151c";
const FACING_COLOR = "#f2f4f8";

const KIND_COLORS: Readonly<Record<string, string>> = {
  player: "#4f8ef7",
  bat: "#b261d6",
  platform: "#3fa34d",
};

/** Stable color per kind; unknown kinds hash onto the hue wheel. */
export function kindColor(kind: string): string {
  const preset = KIND_COLORS[kind];
  if (preset !== undefined) return preset;
  let acc = 0;
  for (let i = 0; i < kind.length; i++) acc = (acc * 31 + kind.charCodeAt(i)) >>> 0;
  return `hsl(${acc % 360}, 55%, 55%)`;
}

export interface ViewSize {
  w: number;
  h: number;
}

/** Largest canvas size with the world's aspect ratio inside the limits. */
export function fitCanvas(extents: WorldExtents, maxW: number, maxH: number): ViewSize {
  const scale = Math.min(maxW / extents.w, maxH / extents.h);
  return { w: Math.round(extents.w * scale), h: Math.round(extents.h * scale) };
}

function entityOps(e: Entity, scale: number, ox: number, oy: number, viewH: number): DrawOp[] {
  const px = ox + e.x * scale;
  // world y grows upward from the floor; canvas y grows downward
  const py = viewH - oy - (e.y + e.h) * scale;
  const pw = Math.max(1, e.w * scale);
  const ph = Math.max(1, e.h * scale);
  const body: RectOp = {
    op: "rect",
    x: px,
    y: py,
    w: pw,
    h: ph,
    color: kindColor(e.kind),
    kind: e.kind,
    entityId: e.id,
  };
  const stripW = Math.min(3, pw * 0.2);
  const strip: FacingOp = {
    op: "facing",
    x: e.facing >= 0 ? px + pw - stripW : px,
    y: py,
    w: stripW,
    h: ph,
    color: FACING_COLOR,
  };
  return [body, strip];
}

/** Draw ops for one frame. Exactly one rect per entity plus its facing
 * strip, in entity order; an empty frame is just the clear. */
export function sceneOps(
  frame: StateFrame | null,
  extents: WorldExtents,
  view: ViewSize,
): DrawOp[] {
  const ops: DrawOp[] = [{ op: "clear", color: BACKGROUND }];
  if (frame === null) return ops;
  const scale = Math.min(view.w / extents.w, view.h / extents.h);
  const ox = (view.w - extents.w * scale) / 2;
  const oy = (view.h - extents.h * scale) / 2;
  for (const e of frame.entities) {
    ops.push(...entityOps(e, scale, ox, oy, view.h));
  }
  return ops;
}
