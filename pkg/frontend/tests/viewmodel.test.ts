import { describe, expect, it } from "vitest";

import { ViewModel } from "../src/viewmodel.js";

function recordingSession(): ViewModel {
  const view = new ViewModel();
  view.markConnected();
  view.noteRequest(1, "StartRecording", {});
  view.apply({ type: "Ack", seq: 1, payload: { mode: "Recording" } });
  return view;
}

describe("mode mirror", () => {
  it("tracks the mode the server acked", () => {
    const view = recordingSession();
    expect(view.mode).toBe("Recording");
    view.noteRequest(2, "StopRecording", {});
    view.apply({
      type: "Ack",
      seq: 2,
      payload: { mode: "Reviewing", id: "t", length: 6 },
    });
    expect(view.mode).toBe("Reviewing");
    expect(view.storedCount).toBe(6);
    expect(view.cursorIndex).toBe(5);
  });

  it("adopts the mode reported inside an ErrorReply", () => {
    const view = recordingSession();
    view.apply({
      type: "ErrorReply",
      seq: 2,
      payload: { code: "InvalidTransition", message: "no", mode: "Recording" },
    });
    expect(view.mode).toBe("Recording");
    expect(view.banner?.kind).toBe("error");
    expect(view.banner?.text).toContain("InvalidTransition");
  });

  it("returns to Idle on ExecutionDone", () => {
    const view = new ViewModel();
    view.markConnected();
    view.noteRequest(1, "Execute", { endpoint: "x" });
    view.apply({ type: "Ack", seq: 1, payload: { report: { sent: 3 } } });
    expect(view.executing).toBe(true);
    view.apply({ type: "ExecutionDone", seq: 1, payload: {} });
    expect(view.executing).toBe(false);
    expect(view.mode).toBe("Idle");
  });
});

describe("control gating", () => {
  it("enables only the controls legal in the mirrored mode", () => {
    const view = recordingSession();
    expect(view.isEnabled("StopRecording")).toBe(true);
    expect(view.isEnabled("TrainModel")).toBe(false);
    expect(view.isEnabled("Save")).toBe(false);
  });

  it("disables everything when disconnected", () => {
    const view = recordingSession();
    view.markDisconnected();
    expect(view.isEnabled("StopRecording")).toBe(false);
    expect(view.banner?.kind).toBe("disconnect");
  });
});

describe("drawn polyline", () => {
  it("grows only from server-accepted samples", () => {
    const view = recordingSession();
    view.noteRequest(2, "PoseSample", { position: [0, 0, 0.4], t_wall: 0 });
    view.apply({ type: "Ack", seq: 2, payload: { accepted: true, count: 1 } });
    view.noteRequest(3, "PoseSample", { position: [0.1, 0, 0.4], t_wall: 0.05 });
    view.apply({ type: "Ack", seq: 3, payload: { accepted: false, count: 1 } });
    expect(view.polyline).toEqual([[0, 0, 0.4]]);
    expect(view.storedCount).toBe(1);
  });

  it("resets when a new recording starts", () => {
    const view = recordingSession();
    view.noteRequest(2, "PoseSample", { position: [0, 0, 0.4], t_wall: 0 });
    view.apply({ type: "Ack", seq: 2, payload: { accepted: true, count: 1 } });
    view.noteRequest(3, "StartRecording", {});
    view.apply({ type: "Ack", seq: 3, payload: { mode: "Recording" } });
    expect(view.polyline).toEqual([]);
    expect(view.storedCount).toBe(0);
  });
});

describe("review and training panels", () => {
  it("mirrors cursor index and robot state positions", () => {
    const view = new ViewModel();
    view.markConnected();
    view.noteRequest(1, "StepCursor", { delta: -3 });
    view.apply({ type: "Ack", seq: 1, payload: { index: 4 } });
    view.apply({
      type: "RobotState",
      seq: 1,
      payload: { index: 4, t: 0.8, position: [0.1, 0.2, 0.3] },
    });
    expect(view.cursorIndex).toBe(4);
    expect(view.cursorPosition).toEqual([0.1, 0.2, 0.3]);
  });

  it("reflects the manifest from ListTrainingSet and DeleteTrajectory", () => {
    const view = new ViewModel();
    view.markConnected();
    view.noteRequest(1, "ListTrainingSet", {});
    view.apply({
      type: "Ack",
      seq: 1,
      payload: { entries: [{ id: "a" }, { id: "b" }, { id: "c" }] },
    });
    expect(view.trainingSet.map((e) => e.id)).toEqual(["a", "b", "c"]);
    view.noteRequest(2, "DeleteTrajectory", { trajectory_id: "b" });
    view.apply({ type: "Ack", seq: 2, payload: { training_set: ["a", "c"] } });
    expect(view.trainingSet.map((e) => e.id)).toEqual(["a", "c"]);
  });

  it("stores markers and the sampled trajectory from server data", () => {
    const view = new ViewModel();
    view.markConnected();
    view.noteRequest(1, "PlaceMarker", {
      position: [0.5, 0, 0.25],
      timestamp: 1.1,
    });
    view.apply({ type: "Ack", seq: 1, payload: { markers: 1 } });
    expect(view.markers).toEqual([
      { position: [0.5, 0, 0.25], timestamp: 1.1 },
    ]);
    view.noteRequest(2, "ConditionAndSample", {});
    view.apply({
      type: "Ack",
      seq: 2,
      payload: {
        trajectory: {
          id: "generated",
          sample_period: 0.2,
          waypoints: [{ t: 0, position: [0, 0, 0] }],
        },
      },
    });
    expect(view.sampled?.id).toBe("generated");
    expect(view.sampled?.waypoints).toHaveLength(1);
  });

  it("shows a collision banner", () => {
    const view = new ViewModel();
    view.markConnected();
    view.apply({
      type: "CollisionWarning",
      seq: 5,
      payload: { contacts: [{ link: 2, box: "table" }] },
    });
    expect(view.banner?.kind).toBe("collision");
    view.dismissBanner();
    expect(view.banner).toBeNull();
  });
});
