// Browser wiring: DOM, canvas, keyboard, WebSocket. Everything testable
// lives in the other modules; this file only connects them.

import { PlaySession, SocketLike } from "./net.js";
import { extentsFor, fitCanvas, sceneOps, WorldExtents } from "./render.js";

const MAX_VIEW_W = 900;
const MAX_VIEW_H = 600;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

const addressInput = el<HTMLInputElement>("address");
const skillSelect = el<HTMLSelectElement>("skill");
const connectButton = el<HTMLButtonElement>("connect");
const canvas = el<HTMLCanvasElement>("view");
const scoreNode = el<HTMLElement>("score");
const timeNode = el<HTMLElement>("time");
const sessionNode = el<HTMLElement>("session-label");
const tickerNode = el<HTMLElement>("ticker");
const overlayNode = el<HTMLElement>("overlay");

const maybeCtx = canvas.getContext("2d");
if (maybeCtx === null) throw new Error("canvas 2d context unavailable");
const ctx: CanvasRenderingContext2D = maybeCtx;

let session: PlaySession | null = null;
let extents: WorldExtents | null = null;

function wrapSocket(ws: WebSocket): SocketLike {
  const like: SocketLike = {
    send: (data) => ws.send(data),
    close: () => ws.close(),
    onmessage: null,
    onclose: null,
    onerror: null,
  };
  ws.onmessage = (ev) => like.onmessage?.({ data: String(ev.data) });
  ws.onclose = () => like.onclose?.();
  ws.onerror = () => like.onerror?.();
  return like;
}

function connect(): void {
  const address = addressInput.value.trim();
  const skill = skillSelect.value;
  extents = null;
  let ws: WebSocket;
  try {
    ws = new WebSocket(address);
  } catch (err) {
    overlayNode.textContent = `cannot open ${address}: ${err}`;
    overlayNode.hidden = false;
    return;
  }
  session = new PlaySession(wrapSocket(ws), skill, refresh);
  overlayNode.textContent = "connecting...";
  overlayNode.hidden = false;
}

function formatTime(seconds: number): string {
  const s = Math.max(0, Math.ceil(seconds));
  return `${Math.floor(s / 60)}:${String(s % 60).padStart(2, "0")}`;
}

function refresh(): void {
  if (session === null) return;
  const state = session.state;
  if (state.status === "active" && state.game !== "" && extents === null) {
    extents = extentsFor(state.game, state.latest, null);
    const size = fitCanvas(extents, MAX_VIEW_W, MAX_VIEW_H);
    canvas.width = size.w;
    canvas.height = size.h;
    sessionNode.textContent =
      `${state.game} v${state.version} | ${state.sessionId} | skill: ${state.skillTag}`;
  }
  extents = extentsFor(state.game, state.latest, extents);

  const hud = state.hud();
  scoreNode.textContent = String(hud.score);
  timeNode.textContent = formatTime(hud.timeLeftS);
  tickerNode.textContent = hud.ticker
    .map((entry) => `${entry.kind}@${entry.tick}`)
    .join("  ");

  switch (state.status) {
    case "connecting":
      overlayNode.textContent = "connecting...";
      overlayNode.hidden = false;
      break;
    case "active":
      overlayNode.hidden = true;
      break;
    case "ended":
      overlayNode.textContent =
        `session over - final score ${state.finalScore}\n` +
        `${state.sessionId} (skill: ${state.skillTag})\n` +
        `import this session id into the evaluation run`;
      overlayNode.hidden = false;
      break;
    case "discarded":
      overlayNode.textContent =
        "session discarded - the connection dropped before the end,\n" +
        "so the server recorded nothing";
      overlayNode.hidden = false;
      break;
    case "error":
      overlayNode.textContent = `connection error: ${state.errorMessage ?? "unknown"}`;
      overlayNode.hidden = false;
      break;
  }
}

function draw(): void {
  if (session !== null && extents !== null) {
    const ops = sceneOps(session.state.latest, extents, {
      w: canvas.width,
      h: canvas.height,
    });
    for (const op of ops) {
      if (op.op === "clear") {
        ctx.fillStyle = op.color;
        ctx.fillRect(0, 0, canvas.width, canvas.height);
      } else {
        ctx.fillStyle = op.color;
        ctx.fillRect(op.x, op.y, op.w, op.h);
      }
    }
  }
  requestAnimationFrame(draw);
}

const HANDLED_CODES = new Set([
  "ArrowLeft",
  "ArrowRight",
  "ArrowUp",
  "Space",
  "KeyX",
  "KeyZ",
]);

window.addEventListener("keydown", (ev) => {
  if (!HANDLED_CODES.has(ev.code)) return;
  ev.preventDefault();
  session?.keyDown(ev.code);
});
window.addEventListener("keyup", (ev) => {
  if (!HANDLED_CODES.has(ev.code)) return;
  ev.preventDefault();
  session?.keyUp(ev.code);
});
// keyup events stop arriving when the tab loses focus
window.addEventListener("blur", () => session?.releaseAll());

connectButton.addEventListener("click", connect);
addressInput.value = `ws://${window.location.hostname || "127.0.0.1"}:8765/`;
requestAnimationFrame(draw);
