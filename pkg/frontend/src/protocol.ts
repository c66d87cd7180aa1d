// Wire message schemas, mirroring docs/wire_schema.md verbatim.
// Golden examples in docs/wire_examples/ are parsed by these schemas in tests.
import { z } from "zod";

export const Snapshot = z.object({
  step: z.number().int(),
  active_rules: z.array(z.string()),
  working_memory: z.record(z.string(), z.enum(["activated", "inhibited"])),
  variables: z.record(z.string(), z.string().nullable()),
  last_conditions: z.array(z.string()),
  last_actions: z.array(z.string()),
});
export type Snapshot = z.infer<typeof Snapshot>;

export const CreateSession = z.object({
  type: z.literal("create_session"),
  model_id: z.string().optional(),
  seed: z.number().int().optional(),
});

export const UserUtterance = z.object({
  type: z.literal("user_utterance"),
  session: z.string(),
  text: z.string(),
  modality: z.string().optional(),
});

export const GetSnapshot = z.object({
  type: z.literal("get_snapshot"),
  session: z.string(),
});

export const ClientMessage = z.discriminatedUnion("type", [
  CreateSession,
  UserUtterance,
  GetSnapshot,
]);
export type ClientMessage = z.infer<typeof ClientMessage>;

export const SessionCreated = z.object({
  type: z.literal("session_created"),
  session: z.string(),
  seq: z.number().int(),
  model_id: z.string(),
});

export const SystemUtterance = z.object({
  type: z.literal("system_utterance"),
  session: z.string(),
  seq: z.number().int(),
  text: z.string(),
  intent: z.string(),
  modality: z.string(),
});

export const StateSnapshot = z.object({
  type: z.literal("state_snapshot"),
  session: z.string(),
  seq: z.number().int(),
  snapshot: Snapshot,
});

export const EngineEvent = z.object({
  type: z.literal("engine_event"),
  session: z.string(),
  seq: z.number().int(),
  kind: z.enum(["rules", "inner_speech", "failure", "closed"]),
  detail: z.record(z.string(), z.unknown()),
});

export const ErrorMessage = z.object({
  type: z.literal("error"),
  code: z.enum(["bad_message", "unknown_session", "engine_fault"]),
  message: z.string(),
  session: z.string().optional(),
  seq: z.number().int().optional(),
});

export const ServerMessage = z.discriminatedUnion("type", [
  SessionCreated,
  SystemUtterance,
  StateSnapshot,
  EngineEvent,
  ErrorMessage,
]);
export type ServerMessage = z.infer<typeof ServerMessage>;

export function parseServerMessage(raw: string): ServerMessage {
  return ServerMessage.parse(JSON.parse(raw));
}
