// Session controller: one socket, one SessionState, one held-keys tracker.
// Takes any object with the WebSocket surface so tests can drive it with a
// scripted fake.

import { HeldKeys } from "./input.js";
import { inputFrame, parseServerFrame, ProtocolFormatError } from "./protocol.js";
import { SessionState } from "./state.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onmessage: ((event: { data: string }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
}

export class PlaySession {
  readonly state: SessionState;
  private readonly socket: SocketLike;
  private keys: HeldKeys | null = null; // legal actions arrive with the start frame
  private readonly onChange: () => void;

  constructor(socket: SocketLike, skillTag: string, onChange: () => void = () => {}) {
    this.state = new SessionState(skillTag);
    this.socket = socket;
    this.onChange = onChange;
    socket.onmessage = (event) => this.handleMessage(event.data);
    socket.onclose = () => {
      this.state.socketClosed();
      this.onChange();
    };
    socket.onerror = () => {
      this.state.socketError("connection failed");
      this.onChange();
    };
  }

  private handleMessage(data: string): void {
    let frame;
    try {
      frame = parseServerFrame(data);
    } catch (err) {
      if (!(err instanceof ProtocolFormatError)) throw err;
      this.state.socketError(err.message);
      this.socket.close();
      this.onChange();
      return;
    }
    this.state.handleFrame(frame);
    if (frame.type === "start") {
      this.keys = new HeldKeys(frame.actions);
    }
    this.onChange();
  }

  /** Forward a keydown; sends an input frame only when the held set changed. */
  keyDown(code: string): void {
    this.sendIfChanged(this.keys?.keyDown(code) ?? null);
  }

  keyUp(code: string): void {
    this.sendIfChanged(this.keys?.keyUp(code) ?? null);
  }

  releaseAll(): void {
    this.sendIfChanged(this.keys?.releaseAll() ?? null);
  }

  private sendIfChanged(held: string[] | null): void {
    if (held === null || this.state.status !== "active") return;
    this.socket.send(inputFrame(held));
  }
}
