export * from "./protocol.js";
export * from "./state.js";
export * from "./actions.js";
