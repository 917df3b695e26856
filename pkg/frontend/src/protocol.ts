import { z } from "zod";

export const SCHEMA_VERSION = "mechsearch.protocol/1";

// Mirrors ../schema/protocol.schema.json; every message is validated on
// both ends (packets on receive, actions before send).

export const StepResult = z.object({
  executed: z.enum(["skip", "grasp", "push"]),
  requested: z.enum(["skip", "grasp", "push"]),
  outcome: z.enum(["extracted_target", "infeasible_selected", "other"]),
  reward: z.number(),
  charged: z.boolean(),
  object_id: z.number().int().optional(),
  command: z
    .object({
      u: z.number().int(),
      v: z.number().int(),
      alpha_deg: z.number(),
      phi_deg: z.number(),
    })
    .optional(),
});

export const ObservationPacket = z.object({
  schema: z.string(),
  session_id: z.string(),
  seed: z.number().int(),
  heap_size: z.number().int().min(1),
  status: z.enum(["running", "success", "target_lost", "cap_exceeded"]),
  action_count: z.number().int().min(0),
  action_cap: z.number().int().min(1),
  target_id: z.number().int(),
  ooi_id: z.number().int().nullable(),
  ranking: z.array(z.number().int()),
  q_grasp: z.number().nullable(),
  q_push: z.number().nullable(),
  depth_png: z.string(),
  image_size: z.tuple([z.number().int(), z.number().int()]),
  outlines: z.record(z.string(), z.array(z.tuple([z.number(), z.number()]))),
  last: StepResult.nullable(),
});

export const SkipAction = z.object({ type: z.literal("skip") }).strict();
export const GraspAction = z
  .object({ type: z.literal("grasp"), object_id: z.number().int() })
  .strict();
export const PushAction = z
  .object({
    type: z.literal("push"),
    u: z.number().int(),
    v: z.number().int(),
    alpha_deg: z.number(),
    phi_deg: z.number(),
  })
  .strict();
export const Action = z.discriminatedUnion("type", [
  SkipAction,
  GraspAction,
  PushAction,
]);

export type ObservationPacket = z.infer<typeof ObservationPacket>;
export type StepResult = z.infer<typeof StepResult>;
export type Action = z.infer<typeof Action>;

export function parsePacket(data: unknown): ObservationPacket {
  return ObservationPacket.parse(data);
}

export function schemaMismatch(pkt: ObservationPacket): boolean {
  return pkt.schema !== SCHEMA_VERSION;
}

/** Validate an outgoing action; throws on anything off-protocol. */
export function validateAction(action: unknown): Action {
  return Action.parse(action);
}
