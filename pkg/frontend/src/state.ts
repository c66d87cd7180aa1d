// ViewState and its reducer.  All mutation happens here, in response to
// server messages or local user input; rendering reads the state only.
import type { ServerMessage, Snapshot } from "./protocol.js";

export const EVENT_FEED_CAP = 500;

export type ConnectionStatus = "connecting" | "open" | "closed";

export interface ChatEntry {
  role: "user" | "system" | "inner";
  text: string;
  intent?: string;
  order: number;
}

export interface FeedEntry {
  seq: number;
  kind: string;
  detail: Record<string, unknown>;
}

export interface ViewState {
  connection: ConnectionStatus;
  sessionId: string | null;
  modelId: string | null;
  chat: ChatEntry[];
  snapshot: Snapshot | null;
  events: FeedEntry[];
  banner: string | null;
  nextLocalOrder: number;
}

export function initialState(): ViewState {
  return {
    connection: "connecting",
    sessionId: null,
    modelId: null,
    chat: [],
    snapshot: null,
    events: [],
    banner: null,
    nextLocalOrder: 0,
  };
}

function bump(state: ViewState, seq: number): void {
  state.nextLocalOrder = Math.max(state.nextLocalOrder, seq + 1);
}

function pushEvent(state: ViewState, entry: FeedEntry): void {
  state.events.push(entry);
  if (state.events.length > EVENT_FEED_CAP) {
    state.events.splice(0, state.events.length - EVENT_FEED_CAP);
  }
}

/** Apply one server message; returns the same (mutated) state object. */
export function applyServer(state: ViewState, message: ServerMessage): ViewState {
  switch (message.type) {
    case "session_created":
      state.sessionId = message.session;
      state.modelId = message.model_id;
      state.banner = null;
      bump(state, message.seq);
      break;
    case "system_utterance":
      state.chat.push({
        role: "system",
        text: message.text,
        intent: message.intent,
        order: message.seq,
      });
      bump(state, message.seq);
      break;
    case "state_snapshot":
      state.snapshot = message.snapshot;
      bump(state, message.seq);
      break;
    case "engine_event":
      if (message.kind === "inner_speech") {
        const text = String(message.detail["text"] ?? "");
        const intent = String(message.detail["intent"] ?? "");
        state.chat.push({ role: "inner", text, intent, order: message.seq });
      }
      if (message.kind === "closed") {
        state.connection = "closed";
        state.banner = "session closed by the server";
      }
      pushEvent(state, { seq: message.seq, kind: message.kind, detail: message.detail });
      bump(state, message.seq);
      break;
    case "error":
      state.banner = `${message.code}: ${message.message}`;
      pushEvent(state, {
        seq: message.seq ?? state.nextLocalOrder,
        kind: "error",
        detail: { code: message.code, message: message.message },
      });
      if (message.seq !== undefined) bump(state, message.seq);
      break;
  }
  return state;
}

/** Record what the user typed; the caller sends the wire message. */
export function applyUserInput(state: ViewState, text: string): ViewState {
  state.chat.push({ role: "user", text, order: state.nextLocalOrder });
  state.nextLocalOrder += 1;
  return state;
}

export function setConnection(state: ViewState, status: ConnectionStatus): ViewState {
  state.connection = status;
  if (status === "open") state.banner = null;
  return state;
}

/** Chat entries in display order (server sequence order, user input in between). */
export function orderedChat(state: ViewState): ChatEntry[] {
  return [...state.chat].sort((a, b) => a.order - b.order);
}
