// Boundary schemas for everything the console reads off the wire.
// The server is the source of truth; we validate, never re-derive.

import { z } from "zod";

export const Vec3 = z.tuple([z.number(), z.number(), z.number()]);
export type Vec3 = z.infer<typeof Vec3>;

export const LayoutSchema = z.object({
  ring_radius: z.number(),
  stretch_length: z.number(),
  stretch_speed: z.number(),
  contact_plane_z: z.number(),
});

export const ContactDot = z.object({
  id: z.string(),
  position: Vec3,
});

export const StretchArrow = z.object({
  id: z.string(),
  start: Vec3,
  end: Vec3,
  unit: z.tuple([z.number(), z.number()]),
});

export const PatternsDoc = z.object({
  layout: LayoutSchema,
  workspace: z.object({
    radius: z.number(),
    z_travel: z.number(),
    contact_plane_z: z.number(),
  }),
  contact: z.array(ContactDot).optional(),
  stretch: z.array(StretchArrow).optional(),
});
export type PatternsDoc = z.infer<typeof PatternsDoc>;

export const SessionSpecSchema = z.object({
  mode: z.enum(["contact", "stretch"]),
  subject_id: z.string(),
  rng_seed: z.number().int(),
  repetitions: z.number().int().optional(),
  training: z.boolean().optional(),
  force_calibration: z.number().optional(),
});
export type SessionSpecInput = z.infer<typeof SessionSpecSchema>;

export const TrialRecord = z.object({
  index: z.number().int(),
  true_pattern: z.string(),
  presented_at: z.number(),
  response: z.string().nullable(),
  confidence: z.number().nullable(),
  response_at: z.number().nullable(),
});

export const SessionState = z.object({
  session_id: z.string(),
  spec: SessionSpecSchema.passthrough(),
  sequence: z.array(z.string()),
  trials: z.array(TrialRecord),
  presented_index: z.number().int().nullable(),
  answered: z.number().int(),
  total_trials: z.number().int(),
  complete: z.boolean(),
  created_at: z.number(),
});
export type SessionState = z.infer<typeof SessionState>;

export const PresentResult = z.object({
  trial: z.number().int(),
  pattern: z.string(),
  total_trials: z.number().int(),
  duration: z.number(),
});
export type PresentResult = z.infer<typeof PresentResult>;

export const ResponseResult = z.object({
  trial: z.number().int(),
  correct: z.boolean(),
  answered: z.number().int(),
  complete: z.boolean(),
});
export type ResponseResult = z.infer<typeof ResponseResult>;

export const Report = z.object({
  mode: z.enum(["contact", "stretch"]),
  patterns: z.array(z.string()),
  subjects: z.array(z.string()),
  n_sessions: z.number().int(),
  total_trials: z.number().int(),
  confusion_counts: z.array(z.array(z.number().int())),
  confusion: z.array(z.array(z.number())),
  per_pattern_rate: z.record(z.number()),
  mean_rate: z.number(),
  mean_confidence: z.number().nullable(),
}).passthrough();
export type Report = z.infer<typeof Report>;

// WS /stream payloads: 20 Hz device snapshots interleaved with trial events.
export const Snapshot = z.object({
  type: z.literal("snapshot"),
  t: z.number(),
  angles_deg: z.array(z.number()),
  pose: Vec3,
  in_contact: z.boolean(),
  seq: z.number().int(),
  backend: z.string(),
});
export type Snapshot = z.infer<typeof Snapshot>;

export const TrialEvent = z.object({
  type: z.enum([
    "trial_started",
    "trial_finished",
    "trial_error",
    "response_recorded",
    "session_created",
  ]),
}).passthrough();

export const StreamEvent = z.union([Snapshot, TrialEvent]);
export type StreamEvent = z.infer<typeof StreamEvent>;
