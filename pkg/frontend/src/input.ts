// Keyboard to held-action tracking. The tracker dedupes key repeat and
// collapses multiple physical keys onto one action, so the session layer
// only hears about real changes to the held set.

/** KeyboardEvent.code values to protocol action names. */
export const DEFAULT_KEY_MAP: Readonly<Record<string, string>> = {
  ArrowLeft: "LEFT",
  ArrowRight: "RIGHT",
  KeyX: "ATTACK",
  Space: "ATTACK",
  KeyZ: "JUMP",
  ArrowUp: "JUMP",
};

export class HeldKeys {
  private readonly legal: ReadonlySet<string>;
  private readonly keyMap: Readonly<Record<string, string>>;
  private readonly down = new Set<string>();
  private held: string[] = [];

  /** legal: the session's action list from the start frame. Keys mapping
   * to actions this game lacks are ignored outright. */
  constructor(legal: Iterable<string>, keyMap = DEFAULT_KEY_MAP) {
    this.legal = new Set(legal);
    this.keyMap = keyMap;
  }

  current(): string[] {
    return [...this.held];
  }

  /** New held list if the action set changed, null otherwise. */
  keyDown(code: string): string[] | null {
    if (this.down.has(code)) return null; // key repeat
    this.down.add(code);
    return this.refresh();
  }

  keyUp(code: string): string[] | null {
    if (!this.down.delete(code)) return null;
    return this.refresh();
  }

  /** Drop everything held, e.g. when the window loses focus and keyup
   * events stop arriving. */
  releaseAll(): string[] | null {
    if (this.down.size === 0) return null;
    this.down.clear();
    return this.refresh();
  }

  private refresh(): string[] | null {
    const actions = new Set<string>();
    for (const code of this.down) {
      const action = this.keyMap[code];
      if (action !== undefined && this.legal.has(action)) actions.add(action);
    }
    const next = Array.from(actions).sort();
    if (next.length === this.held.length && next.every((a, i) => a === this.held[i]))
      return null;
    this.held = next;
    return [...next];
  }
}
