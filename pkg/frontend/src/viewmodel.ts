import {
  ClientMessageType,
  Envelope,
  SessionMode,
  TrainingEntry,
  WireTrajectory,
  errorPayloadSchema,
  robotStatePayloadSchema,
  trainingEntrySchema,
  trajectorySchema,
} from "./protocol.js";

export type Vec3 = [number, number, number];

export interface MarkerGizmo {
  position: Vec3;
  timestamp: number;
}

export interface Banner {
  kind: "error" | "collision" | "disconnect" | "busy";
  text: string;
}

/** Client messages legal in each session mode; mirrors the server table. */
export const MODE_CONTROLS: Record<SessionMode, readonly ClientMessageType[]> =
  {
    Idle: [
      "StartRecording",
      "TrainModel",
      "PlaceMarker",
      "ConditionAndSample",
      "Execute",
      "AddToTrainingSet",
      "ListTrainingSet",
      "DeleteTrajectory",
    ],
    Recording: ["PoseSample", "StopRecording"],
    Reviewing: [
      "StepCursor",
      "Play",
      "Pause",
      "RedrawFrom",
      "Save",
      "AddToTrainingSet",
      "Discard",
      "Execute",
    ],
    Training: [],
    Executing: [],
  };

/**
 * Renderable session state. Every field is derived from server envelopes;
 * nothing here is edited locally (the server owns all trajectory data).
 */
export class ViewModel {
  connected = false;
  mode: SessionMode = "Idle";
  /** Joint configuration last reported by the server, if any. */
  joints: number[] | null = null;
  /** End-effector positions echoed back for the active recording/review. */
  polyline: Vec3[] = [];
  storedCount = 0;
  cursorIndex: number | null = null;
  cursorPosition: Vec3 | null = null;
  trainingSet: TrainingEntry[] = [];
  markers: MarkerGizmo[] = [];
  sampled: WireTrajectory | null = null;
  banner: Banner | null = null;
  executing = false;

  isEnabled(control: ClientMessageType): boolean {
    return this.connected && MODE_CONTROLS[this.mode].includes(control);
  }

  dismissBanner(): void {
    this.banner = null;
  }

  markConnected(): void {
    this.connected = true;
  }

  markDisconnected(): void {
    this.connected = false;
    // a more specific banner (e.g. Busy) set just before the server closed
    // the socket explains the disconnect better than a generic message
    if (this.banner === null) {
      this.banner = { kind: "disconnect", text: "connection lost" };
    }
  }

  /** Record the request that an Ack with the same seq will refer to. */
  private sent = new Map<
    number,
    { type: ClientMessageType; payload: Record<string, unknown> }
  >();

  noteRequest(
    seq: number,
    type: ClientMessageType,
    payload: Record<string, unknown>,
  ): void {
    this.sent.set(seq, { type, payload });
  }

  apply(env: Envelope): void {
    switch (env.type) {
      case "Ack":
        this.applyAck(env);
        break;
      case "ErrorReply": {
        const parsed = errorPayloadSchema.safeParse(env.payload);
        const text = parsed.success
          ? `${parsed.data.code}: ${parsed.data.message}`
          : "server error";
        if (parsed.success && parsed.data.mode !== undefined) {
          this.mode = parsed.data.mode as SessionMode;
        }
        this.banner = { kind: "error", text };
        this.sent.delete(env.seq);
        break;
      }
      case "RobotState": {
        const parsed = robotStatePayloadSchema.safeParse(env.payload);
        if (!parsed.success) {
          break;
        }
        if (parsed.data.joints !== undefined) {
          this.joints = parsed.data.joints;
        }
        if (parsed.data.position !== undefined) {
          this.cursorPosition = parsed.data.position;
        }
        if (parsed.data.index !== undefined) {
          this.cursorIndex = parsed.data.index;
        }
        break;
      }
      case "CollisionWarning":
        this.banner = {
          kind: "collision",
          text: `collision contacts: ${JSON.stringify(env.payload["contacts"])}`,
        };
        break;
      case "ExecutionDone":
        this.executing = false;
        this.mode = "Idle";
        break;
      case "Busy":
        this.banner = { kind: "busy", text: "session owned by another client" };
        break;
      default:
        break; // client-only types never arrive from the server
    }
  }

  private applyAck(env: Envelope): void {
    const request = this.sent.get(env.seq);
    this.sent.delete(env.seq);
    const payloadMode = env.payload["mode"];
    if (typeof payloadMode === "string") {
      this.mode = payloadMode as SessionMode;
    }
    if (request === undefined) {
      return;
    }
    switch (request.type) {
      case "StartRecording":
        this.polyline = [];
        this.storedCount = 0;
        this.cursorIndex = null;
        this.sampled = null;
        break;
      case "PoseSample": {
        const count = env.payload["count"];
        if (typeof count === "number") {
          this.storedCount = count;
        }
        if (env.payload["accepted"] === true) {
          const pos = request.payload["position"];
          if (Array.isArray(pos) && pos.length === 3) {
            this.polyline.push([...pos] as Vec3);
          }
        }
        break;
      }
      case "StopRecording": {
        const length = env.payload["length"];
        if (typeof length === "number") {
          this.storedCount = length;
          this.cursorIndex = length - 1;
        }
        break;
      }
      case "StepCursor": {
        const index = env.payload["index"];
        if (typeof index === "number") {
          this.cursorIndex = index;
        }
        break;
      }
      case "RedrawFrom": {
        const length = env.payload["length"];
        if (typeof length === "number") {
          this.storedCount = length;
        }
        break;
      }
      case "Save":
      case "Discard":
        this.mode = "Idle";
        this.cursorIndex = null;
        break;
      case "AddToTrainingSet": {
        if (this.mode === "Reviewing") {
          this.mode = "Idle";
          this.cursorIndex = null;
        }
        break;
      }
      case "ListTrainingSet": {
        const entries = env.payload["entries"];
        if (Array.isArray(entries)) {
          this.trainingSet = entries
            .map((e) => trainingEntrySchema.safeParse(e))
            .filter((r) => r.success)
            .map((r) => r.data);
        }
        break;
      }
      case "DeleteTrajectory": {
        const ids = env.payload["training_set"];
        if (Array.isArray(ids)) {
          this.trainingSet = this.trainingSet.filter((e) =>
            ids.includes(e.id),
          );
        }
        break;
      }
      case "TrainModel":
        this.mode = "Idle";
        break;
      case "PlaceMarker": {
        const pos = request.payload["position"];
        const t = request.payload["timestamp"];
        if (Array.isArray(pos) && pos.length === 3 && typeof t === "number") {
          this.markers.push({ position: [...pos] as Vec3, timestamp: t });
        }
        break;
      }
      case "ConditionAndSample": {
        const parsed = trajectorySchema.safeParse(env.payload["trajectory"]);
        if (parsed.success) {
          this.sampled = parsed.data;
        }
        break;
      }
      case "Execute":
        this.executing = true;
        break;
      default:
        break;
    }
  }
}
