// Browser bootstrap: one WebSocket per tab, reconnect with backoff, and
// panel updates on every state change.  Server URL comes from the
// ?server= query parameter, defaulting to ws://<host>/ws.
import { Inspector } from "./inspector.js";

function serverUrl(): string {
  const q = new URLSearchParams(window.location.search).get("server");
  if (q) return q;
  const scheme = window.location.protocol === "https:" ? "wss" : "ws";
  const host = window.location.host || "127.0.0.1:8765";
  return `${scheme}://${host}/ws`;
}

function byId(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el;
}

function main(): void {
  const panels = {
    status: byId("status"),
    chat: byId("chat"),
    rules: byId("rules"),
    memory: byId("memory"),
    variables: byId("variables"),
    events: byId("events"),
  };
  let socket: WebSocket | null = null;
  let retryMs = 500;

  const inspector = new Inspector({ send: (frame) => socket?.send(frame) });

  const repaint = () => {
    const html = inspector.panels();
    panels.status.innerHTML = html.status;
    panels.chat.innerHTML = html.chat;
    panels.rules.innerHTML = html.rules;
    panels.memory.innerHTML = html.memory;
    panels.variables.innerHTML = html.variables;
    panels.events.innerHTML = html.events;
    panels.chat.scrollTop = panels.chat.scrollHeight;
  };

  const open = () => {
    inspector.onConnectionChange("connecting");
    repaint();
    socket = new WebSocket(serverUrl());
    socket.onopen = () => {
      retryMs = 500;
      inspector.onOpen();
      repaint();
    };
    socket.onmessage = (event) => {
      try {
        inspector.onFrame(String(event.data));
      } catch (err) {
        console.error("bad frame", err);
      }
      repaint();
    };
    socket.onclose = () => {
      inspector.onConnectionChange("closed");
      repaint();
      setTimeout(open, retryMs);
      retryMs = Math.min(retryMs * 2, 10_000);
    };
  };

  const input = byId("input") as HTMLInputElement;
  input.addEventListener("keydown", (event) => {
    if (event.key === "Enter" && input.value.trim()) {
      inspector.userSays(input.value.trim());
      input.value = "";
      repaint();
    }
  });

  open();
}

main();
