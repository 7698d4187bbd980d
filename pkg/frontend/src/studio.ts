import { SocketLike, StudioClient } from "./client.js";
import { PoseSampleMessage } from "./draw.js";
import { Envelope } from "./protocol.js";
import { Vec3, ViewModel } from "./viewmodel.js";

/**
 * High-level studio actions over one session connection. Binds the protocol
 * client to the view model so every server envelope (and every sent request)
 * is reflected in the rendered state.
 */
export class Studio {
  readonly client: StudioClient;
  readonly view: ViewModel;

  constructor(socket: SocketLike) {
    this.client = new StudioClient(socket);
    this.view = new ViewModel();
    this.view.markConnected();
    this.client.onSend((type, seq, payload) =>
      this.view.noteRequest(seq, type, payload),
    );
    this.client.onEnvelope((env) => this.view.apply(env));
    this.client.onClose(() => this.view.markDisconnected());
  }

  startRecording(handFollow = false): Promise<Envelope> {
    return this.client.request("StartRecording", { hand_follow: handFollow });
  }

  /** Fire-and-forget pose sample while the pointer is drawing. */
  sendPoseSample(sample: PoseSampleMessage): void {
    this.client.fire("PoseSample", {
      position: sample.position,
      t_wall: sample.t_wall,
    });
  }

  /** Awaited pose sample, for flows that need the stored count back. */
  sendPoseSampleAcked(sample: PoseSampleMessage): Promise<Envelope> {
    return this.client.request("PoseSample", {
      position: sample.position,
      t_wall: sample.t_wall,
    });
  }

  stopRecording(): Promise<Envelope> {
    return this.client.request("StopRecording");
  }

  /** Scrub the playback slider to an absolute index. */
  async scrubTo(index: number): Promise<Envelope> {
    const current = this.view.cursorIndex ?? 0;
    return this.client.request("StepCursor", { delta: index - current });
  }

  play(): Promise<Envelope> {
    return this.client.request("Play");
  }

  pause(): Promise<Envelope> {
    return this.client.request("Pause");
  }

  redrawFrom(
    index: number,
    samples: { position: Vec3 }[],
  ): Promise<Envelope> {
    return this.client.request("RedrawFrom", { index, samples });
  }

  save(): Promise<Envelope> {
    return this.client.request("Save");
  }

  discard(): Promise<Envelope> {
    return this.client.request("Discard");
  }

  addToTrainingSet(trajectoryId?: string): Promise<Envelope> {
    const payload =
      trajectoryId === undefined ? {} : { trajectory_id: trajectoryId };
    return this.client.request("AddToTrainingSet", payload);
  }

  async refreshTrainingSet(): Promise<Envelope> {
    return this.client.request("ListTrainingSet");
  }

  deleteTrajectory(trajectoryId: string): Promise<Envelope> {
    return this.client.request("DeleteTrajectory", {
      trajectory_id: trajectoryId,
    });
  }

  train(): Promise<Envelope> {
    return this.client.request("TrainModel");
  }

  placeMarker(position: Vec3, timestamp: number): Promise<Envelope> {
    return this.client.request("PlaceMarker", { position, timestamp });
  }

  conditionAndSample(n?: number): Promise<Envelope> {
    return this.client.request(
      "ConditionAndSample",
      n === undefined ? {} : { n },
    );
  }

  execute(endpoint: string, trajectoryId?: string): Promise<Envelope> {
    const payload: Record<string, unknown> = { endpoint };
    if (trajectoryId !== undefined) {
      payload.trajectory_id = trajectoryId;
    }
    return this.client.request("Execute", payload);
  }

  disconnect(): void {
    this.client.close();
  }
}
