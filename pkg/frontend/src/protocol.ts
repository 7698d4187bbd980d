import { z } from "zod";

/** Message types a client may send. */
export const CLIENT_MESSAGE_TYPES = [
  "StartRecording",
  "PoseSample",
  "StopRecording",
  "StepCursor",
  "Play",
  "Pause",
  "RedrawFrom",
  "Save",
  "Discard",
  "AddToTrainingSet",
  "ListTrainingSet",
  "DeleteTrajectory",
  "TrainModel",
  "PlaceMarker",
  "ConditionAndSample",
  "Execute",
] as const;

/** Message types only the server emits. */
export const SERVER_MESSAGE_TYPES = [
  "Ack",
  "ErrorReply",
  "RobotState",
  "CollisionWarning",
  "ExecutionDone",
  "Busy",
] as const;

export type ClientMessageType = (typeof CLIENT_MESSAGE_TYPES)[number];
export type ServerMessageType = (typeof SERVER_MESSAGE_TYPES)[number];
export type MessageType = ClientMessageType | ServerMessageType;

export type SessionMode =
  | "Idle"
  | "Recording"
  | "Reviewing"
  | "Training"
  | "Executing";

export interface Envelope {
  type: MessageType;
  seq: number;
  payload: Record<string, unknown>;
}

const envelopeSchema = z.object({
  type: z.enum([...CLIENT_MESSAGE_TYPES, ...SERVER_MESSAGE_TYPES]),
  seq: z.number().int(),
  payload: z.record(z.unknown()).default({}),
});

export const waypointSchema = z.object({
  t: z.number(),
  position: z.tuple([z.number(), z.number(), z.number()]),
  orientation: z
    .tuple([z.number(), z.number(), z.number(), z.number()])
    .optional(),
});

export const trajectorySchema = z.object({
  id: z.string(),
  sample_period: z.number(),
  waypoints: z.array(waypointSchema),
});

export type WireWaypoint = z.infer<typeof waypointSchema>;
export type WireTrajectory = z.infer<typeof trajectorySchema>;

export const errorPayloadSchema = z.object({
  code: z.string(),
  message: z.string(),
  mode: z.string().optional(),
});

export const robotStatePayloadSchema = z.object({
  index: z.number().int().optional(),
  t: z.number().optional(),
  joints: z.array(z.number()).length(6).optional(),
  position: z.tuple([z.number(), z.number(), z.number()]).optional(),
  orientation: z
    .tuple([z.number(), z.number(), z.number(), z.number()])
    .optional(),
});

export const trainingEntrySchema = z.object({
  id: z.string(),
  path: z.string().optional(),
});

export type TrainingEntry = z.infer<typeof trainingEntrySchema>;

export class ProtocolError extends Error {}

/** Parse and validate one wire message. */
export function parseEnvelope(text: string): Envelope {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch (err) {
    throw new ProtocolError(`not JSON: ${(err as Error).message}`);
  }
  const result = envelopeSchema.safeParse(doc);
  if (!result.success) {
    throw new ProtocolError(`bad envelope: ${result.error.message}`);
  }
  return result.data as Envelope;
}

export function serializeEnvelope(env: Envelope): string {
  return JSON.stringify({ type: env.type, seq: env.seq, payload: env.payload });
}
