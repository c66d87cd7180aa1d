// Headless end-to-end: a real service process, a real socket, and the UI's
// own controller and renderer in between.
import { spawn, spawnSync, ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import WebSocket from "ws";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { Inspector } from "../src/inspector.js";

const HERE = fileURLToPath(new URL(".", import.meta.url));
const ROOT = join(HERE, "..", "..");
const PORT = 8920 + (process.pid % 50);

let service: ChildProcess | null = null;

async function waitFor(check: () => boolean, what: string, timeoutMs = 15000): Promise<void> {
  const start = Date.now();
  while (!check()) {
    if (Date.now() - start > timeoutMs) throw new Error(`timed out waiting for ${what}`);
    await new Promise((resolve) => setTimeout(resolve, 50));
  }
}

beforeAll(async () => {
  const workdir = mkdtempSync(join(tmpdir(), "miron-e2e-"));
  const compile = spawnSync(
    "python3",
    ["-m", "miron.cli", "compile", join(ROOT, "models", "receptionist.model"), "-o", workdir],
    { encoding: "utf-8" },
  );
  expect(compile.status, compile.stderr).toBe(0);
  const configPath = join(workdir, "config.json");
  writeFileSync(
    configPath,
    JSON.stringify({ kv_file: join(ROOT, "models", "visitors.json"), clock_time: "14:30" }),
  );
  service = spawn(
    "python3",
    [
      "-m", "miron.cli", "--config", configPath,
      "serve", "--artifacts", workdir, "--listen", `127.0.0.1:${PORT}`,
    ],
    { cwd: ROOT, stdio: ["ignore", "pipe", "pipe"] },
  );
  let healthy = false;
  const started = Date.now();
  while (!healthy && Date.now() - started < 20000) {
    try {
      const res = await fetch(`http://127.0.0.1:${PORT}/health`);
      healthy = res.ok;
    } catch {
      await new Promise((resolve) => setTimeout(resolve, 100));
    }
  }
  expect(healthy).toBe(true);
}, 30000);

afterAll(() => {
  service?.kill();
});

describe("inspector against a live service", () => {
  it("greets through the chat and flips the memory table", async () => {
    const socket = new WebSocket(`ws://127.0.0.1:${PORT}/ws`);
    const inspector = new Inspector({ seed: 17, send: (frame) => socket.send(frame) });
    socket.on("open", () => inspector.onOpen());
    socket.on("message", (data) => inspector.onFrame(data.toString()));
    socket.on("close", () => inspector.onConnectionChange("closed"));

    await waitFor(() => inspector.state.snapshot !== null, "opening turn");
    expect(inspector.state.sessionId).toBe("s1");
    expect(inspector.panels().memory).toContain('<td class="activated">activated</td>');
    expect(inspector.panels().chat).toContain("bubble system");

    const before = inspector.panels().memory;
    expect(before).toContain("greetingsExpected");

    inspector.userSays("Hello");
    await waitFor(
      () => inspector.state.snapshot?.working_memory["greetingsExpected"] === "inhibited",
      "greeting turn",
    );
    const panels = inspector.panels();
    // the user's bubble and the system's greeting bubble, recognized intent attached
    expect(panels.chat).toContain('class="bubble user"');
    expect(panels.chat).toContain('<span class="intent">say_Hello</span>');
    // the working-memory table flipped to inhibited
    expect(panels.memory).toMatch(
      /greetingsExpected<\/td><td class="inhibited">inhibited<\/td>/,
    );
    // live rule activity reached the event feed
    expect(panels.events).toContain("greet_back");

    socket.close();
  }, 30000);

  it("reports an error banner for a bogus session", async () => {
    const socket = new WebSocket(`ws://127.0.0.1:${PORT}/ws`);
    const inspector = new Inspector({ send: (frame) => socket.send(frame) });
    await new Promise((resolve) => socket.on("open", resolve));
    socket.on("message", (data) => inspector.onFrame(data.toString()));
    socket.send(JSON.stringify({ type: "get_snapshot", session: "s424242" }));
    await waitFor(() => inspector.state.banner !== null, "error banner");
    expect(inspector.panels().status).toContain("unknown_session");
    socket.close();
  }, 30000);
});
