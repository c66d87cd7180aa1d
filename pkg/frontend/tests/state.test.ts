import { describe, expect, it } from "vitest";

import type { ServerMessage } from "../src/protocol.js";
import {
  EVENT_FEED_CAP,
  applyServer,
  applyUserInput,
  initialState,
  orderedChat,
  setConnection,
} from "../src/state.js";

function snapshotMessage(seq: number, memory: Record<string, "activated" | "inhibited">): ServerMessage {
  return {
    type: "state_snapshot",
    session: "s1",
    seq,
    snapshot: {
      step: seq,
      active_rules: [],
      working_memory: memory,
      variables: {},
      last_conditions: [],
      last_actions: [],
    },
  };
}

describe("reducer", () => {
  it("tracks the session and keeps chat in sequence order", () => {
    const state = initialState();
    applyServer(state, { type: "session_created", session: "s1", seq: 1, model_id: "demo" });
    applyServer(state, {
      type: "system_utterance", session: "s1", seq: 2, text: "Welcome!", intent: "welcome", modality: "speech",
    });
    applyUserInput(state, "Hello");
    applyServer(state, {
      type: "system_utterance", session: "s1", seq: 5, text: "Hi", intent: "say_Hello", modality: "speech",
    });
    const chat = orderedChat(state);
    expect(chat.map((c) => c.role)).toEqual(["system", "user", "system"]);
    expect(chat.map((c) => c.text)).toEqual(["Welcome!", "Hello", "Hi"]);
    expect(state.sessionId).toBe("s1");
  });

  it("marks inner speech distinctly", () => {
    const state = initialState();
    applyServer(state, {
      type: "engine_event", session: "s1", seq: 3, kind: "inner_speech",
      detail: { text: "what time is it?", intent: "ask_time" },
    });
    expect(state.chat).toHaveLength(1);
    expect(state.chat[0].role).toBe("inner");
  });

  it("caps the event feed at the newest 500", () => {
    const state = initialState();
    for (let i = 0; i < EVENT_FEED_CAP + 40; i++) {
      applyServer(state, {
        type: "engine_event", session: "s1", seq: i + 1, kind: "rules", detail: { step: i },
      });
    }
    expect(state.events).toHaveLength(EVENT_FEED_CAP);
    expect(state.events[0].seq).toBe(41);
    expect(state.events.at(-1)?.seq).toBe(EVENT_FEED_CAP + 40);
  });

  it("stores the latest snapshot wholesale", () => {
    const state = initialState();
    applyServer(state, snapshotMessage(4, { greetingsExpected: "activated" }));
    applyServer(state, snapshotMessage(9, { greetingsExpected: "inhibited" }));
    expect(state.snapshot?.working_memory).toEqual({ greetingsExpected: "inhibited" });
  });

  it("raises a banner on errors and clears it on reconnect", () => {
    const state = initialState();
    applyServer(state, { type: "error", code: "unknown_session", message: "no session 's9'" });
    expect(state.banner).toContain("unknown_session");
    setConnection(state, "open");
    expect(state.banner).toBeNull();
  });

  it("treats a closed event as end of session", () => {
    const state = initialState();
    applyServer(state, {
      type: "engine_event", session: "s1", seq: 2, kind: "closed", detail: { reason: "idle timeout" },
    });
    expect(state.connection).toBe("closed");
    expect(state.banner).toContain("closed");
  });
});
