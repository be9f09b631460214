/** Pure session-view state: a fold over the server message history.
 *
 * The rendered view is a function of this state only, so replaying a
 * recorded message log always reproduces the same screen.
 */

import { ServerMessage, Wire, fromWire } from "./protocol.js";

export type Connection = "disconnected" | "connected";

export interface PointWindow {
  earliest: number;
  latest: number;
}

export interface LogEntry {
  t: number | null;
  text: string;
  tag: "fired" | "refused" | "object" | "finished" | "error" | "info";
}

export interface UiState {
  connection: Connection;
  loaded: boolean;
  warnings: string[];
  banner: string | null;
  playhead: number;
  windows: Record<string, PointWindow>;
  firedAt: Record<string, number>;
  running: Record<string, number>; // active object -> start time
  finishedAt: number | null;
  log: LogEntry[];
}

export function initialState(): UiState {
  return {
    connection: "disconnected",
    loaded: false,
    warnings: [],
    banner: null,
    playhead: 0,
    windows: {},
    firedAt: {},
    running: {},
    finishedAt: null,
    log: [],
  };
}

export function connectionChanged(s: UiState, connection: Connection): UiState {
  const banner = connection === "disconnected" ? "connection lost" : null;
  return { ...s, connection, banner };
}

/** Ticks elapsed locally between server messages move the playhead forward;
 * the next authoritative timestamp snaps it back. */
export function advancePlayhead(s: UiState, ticks: number): UiState {
  if (ticks < 0 || s.connection !== "connected") return s;
  return { ...s, playhead: s.playhead + ticks };
}

function snap(s: UiState, t: Wire): UiState {
  const at = fromWire(t);
  return at > s.playhead ? { ...s, playhead: at } : s;
}

function log(s: UiState, entry: LogEntry): UiState {
  return { ...s, log: [...s.log, entry] };
}

export function applyServerMessage(s: UiState, msg: ServerMessage): UiState {
  switch (msg.type) {
    case "loaded":
      return log(
        { ...s, loaded: true, warnings: msg.warnings, banner: null },
        { t: null, text: "score loaded", tag: "info" },
      );
    case "window": {
      const windows = {
        ...s.windows,
        [msg.point]: {
          earliest: fromWire(msg.earliest),
          latest: fromWire(msg.latest),
        },
      };
      return { ...s, windows };
    }
    case "fired": {
      const t = fromWire(msg.t);
      const firedAt = { ...s.firedAt, [msg.point]: t };
      return log(snap({ ...s, firedAt }, msg.t), {
        t,
        text: `${msg.point} fired (${msg.mode})`,
        tag: "fired",
      });
    }
    case "refused": {
      const t = fromWire(msg.t);
      return log(snap(s, msg.t), {
        t,
        text: `${msg.point} refused: ${msg.reason}`,
        tag: "refused",
      });
    }
    case "started": {
      const t = fromWire(msg.t);
      const running = { ...s.running, [msg.object]: t };
      return log(snap({ ...s, running }, msg.t), {
        t,
        text: `${msg.object} started`,
        tag: "object",
      });
    }
    case "ended": {
      const t = fromWire(msg.t);
      const running = { ...s.running };
      delete running[msg.object];
      return log(snap({ ...s, running }, msg.t), {
        t,
        text: `${msg.object} ended`,
        tag: "object",
      });
    }
    case "finished": {
      const t = fromWire(msg.t);
      return log(snap({ ...s, finishedAt: t }, msg.t), {
        t,
        text: "performance finished",
        tag: "finished",
      });
    }
    case "error":
      return log(
        { ...s, banner: msg.message },
        { t: null, text: msg.message, tag: "error" },
      );
    default:
      // unknown message type: note it, change nothing else
      return log(s, {
        t: null,
        text: `unknown message ${(msg as { type?: string }).type ?? "?"}`,
        tag: "info",
      });
  }
}

export function replay(messages: ServerMessage[], from?: UiState): UiState {
  let s = from ?? connectionChanged(initialState(), "connected");
  for (const msg of messages) s = applyServerMessage(s, msg);
  return s;
}

/** A trigger button is live iff we are connected, the point is still awaited
 * and the playhead sits inside its last reported feasible window. */
export function isTriggerEnabled(s: UiState, point: string): boolean {
  if (s.connection !== "connected") return false;
  if (point in s.firedAt) return false;
  const w = s.windows[point];
  if (w === undefined) return false;
  return w.earliest <= s.playhead && s.playhead <= w.latest;
}
