import { describe, expect, it } from "vitest";

import { escapeHtml, render } from "../src/render.js";
import { applyServer, applyUserInput, initialState } from "../src/state.js";

describe("render", () => {
  it("escapes everything that came over the wire", () => {
    expect(escapeHtml('<b a="1">&\'')).toBe("&lt;b a=&quot;1&quot;&gt;&amp;&#39;");
    const state = initialState();
    applyUserInput(state, "<script>alert(1)</script>");
    expect(render(state).chat).not.toContain("<script>");
    expect(render(state).chat).toContain("&lt;script&gt;");
  });

  it("is a pure function of the state", () => {
    const state = initialState();
    applyServer(state, { type: "session_created", session: "s1", seq: 1, model_id: "demo" });
    const before = JSON.stringify(state);
    const first = render(state);
    const second = render(state);
    expect(second).toEqual(first);
    expect(JSON.stringify(state)).toBe(before);
  });

  it("renders working memory as a table with per-state classes", () => {
    const state = initialState();
    applyServer(state, {
      type: "state_snapshot",
      session: "s1",
      seq: 2,
      snapshot: {
        step: 1,
        active_rules: ["greet_back"],
        working_memory: { greetingsExpected: "inhibited", awaitingName: "activated" },
        variables: { politeForm: "true", phaseOfDay: null },
        last_conditions: [],
        last_actions: [],
      },
    });
    const panels = render(state);
    expect(panels.memory).toContain('<td class="inhibited">inhibited</td>');
    expect(panels.memory).toContain("greetingsExpected");
    expect(panels.rules).toContain("<li>greet_back</li>");
    expect(panels.variables).toContain("<em>empty</em>");
  });

  it("shows the user and system bubbles with roles", () => {
    const state = initialState();
    applyUserInput(state, "Hello");
    applyServer(state, {
      type: "system_utterance", session: "s1", seq: 3, text: "Hi", intent: "say_Hello", modality: "speech",
    });
    const chat = render(state).chat;
    expect(chat).toContain('class="bubble user"');
    expect(chat).toContain('class="bubble system"');
    expect(chat).toContain('<span class="intent">say_Hello</span>');
  });

  it("lists engine events newest first", () => {
    const state = initialState();
    for (const seq of [1, 2, 3]) {
      applyServer(state, {
        type: "engine_event", session: "s1", seq, kind: "rules", detail: { step: seq },
      });
    }
    const events = render(state).events;
    expect(events.indexOf("#3")).toBeLessThan(events.indexOf("#1"));
  });
});
