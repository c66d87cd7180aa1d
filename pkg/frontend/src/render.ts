// Pure rendering: ViewState in, HTML strings out.  No DOM access here so
// the exact same code is exercised headless in tests.
import { orderedChat, ViewState } from "./state.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export interface RenderedPanels {
  status: string;
  chat: string;
  rules: string;
  memory: string;
  variables: string;
  events: string;
}

export function render(state: ViewState): RenderedPanels {
  return {
    status: renderStatus(state),
    chat: renderChat(state),
    rules: renderRules(state),
    memory: renderMemory(state),
    variables: renderVariables(state),
    events: renderEvents(state),
  };
}

function renderStatus(state: ViewState): string {
  const pieces = [`<span class="conn ${state.connection}">${state.connection}</span>`];
  if (state.sessionId) {
    pieces.push(`<span class="session">${escapeHtml(state.sessionId)}</span>`);
  }
  if (state.modelId) {
    pieces.push(`<span class="model">${escapeHtml(state.modelId)}</span>`);
  }
  if (state.banner) {
    pieces.push(`<span class="banner">${escapeHtml(state.banner)}</span>`);
  }
  return pieces.join(" ");
}

function renderChat(state: ViewState): string {
  return orderedChat(state)
    .map((entry) => {
      const intent = entry.intent ? `<span class="intent">${escapeHtml(entry.intent)}</span>` : "";
      return `<div class="bubble ${entry.role}">${escapeHtml(entry.text)}${intent}</div>`;
    })
    .join("\n");
}

function renderRules(state: ViewState): string {
  const active = state.snapshot?.active_rules ?? [];
  if (active.length === 0) {
    return '<p class="empty">no active rules</p>';
  }
  return "<ul>" + active.map((r) => `<li>${escapeHtml(r)}</li>`).join("") + "</ul>";
}

function renderMemory(state: ViewState): string {
  const memory = state.snapshot?.working_memory ?? {};
  const rows = Object.keys(memory)
    .sort()
    .map(
      (name) =>
        `<tr><td>${escapeHtml(name)}</td>` +
        `<td class="${memory[name]}">${memory[name]}</td></tr>`,
    );
  return `<table><tbody>${rows.join("")}</tbody></table>`;
}

function renderVariables(state: ViewState): string {
  const variables = state.snapshot?.variables ?? {};
  const rows = Object.keys(variables)
    .sort()
    .map((name) => {
      const value = variables[name];
      const shown = value === null ? '<em>empty</em>' : escapeHtml(value);
      return `<tr><td>${escapeHtml(name)}</td><td>${shown}</td></tr>`;
    });
  return `<table><tbody>${rows.join("")}</tbody></table>`;
}

function renderEvents(state: ViewState): string {
  // newest first; the feed itself is already capped by the reducer
  const items = [...state.events]
    .reverse()
    .map(
      (event) =>
        `<li class="${escapeHtml(event.kind)}">` +
        `<code>#${event.seq} ${escapeHtml(event.kind)}</code> ` +
        `${escapeHtml(JSON.stringify(event.detail))}</li>`,
    );
  return "<ol>" + items.join("") + "</ol>";
}
