/** User intents mapped onto outbound wire messages, with local guards. */

import { ClientMessage } from "./protocol.js";
import { UiState, isTriggerEnabled } from "./state.js";

export type UserAction =
  | { kind: "trigger"; point: string }
  | { kind: "set"; variable: string; value: boolean | "unknown" };

/** Returns the message to send, or null when the action must be dropped
 * (disconnected, or a trigger outside its window). */
export function sendUserAction(s: UiState, action: UserAction): ClientMessage | null {
  if (s.connection !== "connected") return null;
  switch (action.kind) {
    case "trigger":
      if (!isTriggerEnabled(s, action.point)) return null;
      return { type: "trigger", point: action.point };
    case "set":
      return { type: "set", var: action.variable, value: action.value };
  }
}
