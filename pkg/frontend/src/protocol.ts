/** Wire protocol shared with the session server: one JSON object per frame. */

/** Rational numbers travel as JSON numbers, "a/b" strings, or "inf". */
export type Wire = number | string;

export interface LoadedMsg {
  type: "loaded";
  warnings: string[];
}

export interface WindowMsg {
  type: "window";
  point: string;
  earliest: Wire;
  latest: Wire;
}

export interface FiredMsg {
  type: "fired";
  point: string;
  t: Wire;
  mode: "user" | "auto" | "static";
}

export interface RefusedMsg {
  type: "refused";
  point: string;
  t: Wire;
  reason: string;
}

export interface ObjectMsg {
  type: "started" | "ended";
  object: string;
  t: Wire;
}

export interface FinishedMsg {
  type: "finished";
  t: Wire;
}

export interface ErrorMsg {
  type: "error";
  message: string;
}

export type ServerMessage =
  | LoadedMsg
  | WindowMsg
  | FiredMsg
  | RefusedMsg
  | ObjectMsg
  | FinishedMsg
  | ErrorMsg;

export type ClientMessage =
  | { type: "load"; score: unknown }
  | { type: "start"; clock?: "virtual" | "real"; tick_ms?: number }
  | { type: "trigger"; point: string }
  | { type: "set"; var: string; value: boolean | "unknown" }
  | { type: "step"; ticks: number }
  | { type: "stop" };

/** Decode a wire rational into a plain number ("inf" becomes Infinity). */
export function fromWire(q: Wire): number {
  if (typeof q === "number") return q;
  if (q === "inf") return Infinity;
  const slash = q.indexOf("/");
  if (slash >= 0) {
    const num = Number(q.slice(0, slash));
    const den = Number(q.slice(slash + 1));
    if (!Number.isFinite(num) || !Number.isFinite(den) || den === 0) {
      throw new Error(`malformed rational ${JSON.stringify(q)}`);
    }
    return num / den;
  }
  const plain = Number(q);
  if (!Number.isFinite(plain)) {
    throw new Error(`malformed rational ${JSON.stringify(q)}`);
  }
  return plain;
}
