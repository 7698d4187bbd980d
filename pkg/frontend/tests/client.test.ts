import { describe, expect, it } from "vitest";

import { SocketLike, StudioClient } from "../src/client.js";
import { Envelope, parseEnvelope, serializeEnvelope } from "../src/protocol.js";

class FakeSocket implements SocketLike {
  sent: Envelope[] = [];
  private messageHandler: ((data: string) => void) | null = null;
  private closeHandler: (() => void) | null = null;

  send(data: string): void {
    this.sent.push(parseEnvelope(data));
  }

  close(): void {
    this.closeHandler?.();
  }

  set onmessage(handler: (data: string) => void) {
    this.messageHandler = handler;
  }

  set onclose(handler: () => void) {
    this.closeHandler = handler;
  }

  reply(env: Envelope): void {
    this.messageHandler?.(serializeEnvelope(env));
  }
}

describe("StudioClient", () => {
  it("assigns strictly increasing sequence numbers", async () => {
    const socket = new FakeSocket();
    const client = new StudioClient(socket);
    const first = client.request("ListTrainingSet");
    socket.reply({ type: "Ack", seq: 1, payload: {} });
    await first;
    client.fire("PoseSample", { position: [0, 0, 0], t_wall: 0 });
    const third = client.request("StopRecording");
    socket.reply({ type: "Ack", seq: 3, payload: {} });
    await third;
    expect(socket.sent.map((e) => e.seq)).toEqual([1, 2, 3]);
  });

  it("resolves a request with its Ack and rejects overlap", async () => {
    const socket = new FakeSocket();
    const client = new StudioClient(socket);
    const pending = client.request("StartRecording");
    await expect(client.request("StopRecording")).rejects.toThrow(
      "already in flight",
    );
    socket.reply({ type: "Ack", seq: 1, payload: { mode: "Recording" } });
    const ack = await pending;
    expect(ack.payload["mode"]).toBe("Recording");
  });

  it("resolves with an ErrorReply instead of throwing", async () => {
    const socket = new FakeSocket();
    const client = new StudioClient(socket);
    const pending = client.request("TrainModel");
    socket.reply({
      type: "ErrorReply",
      seq: 1,
      payload: { code: "TooFewDemos", message: "need 2", mode: "Idle" },
    });
    const reply = await pending;
    expect(reply.type).toBe("ErrorReply");
  });

  it("ignores replies for other sequence numbers", async () => {
    const socket = new FakeSocket();
    const client = new StudioClient(socket);
    const pending = client.request("Save");
    socket.reply({ type: "Ack", seq: 99, payload: {} });
    socket.reply({ type: "RobotState", seq: 1, payload: {} });
    socket.reply({ type: "Ack", seq: 1, payload: {} });
    await expect(pending).resolves.toMatchObject({ seq: 1, type: "Ack" });
  });

  it("fans every envelope out to listeners", () => {
    const socket = new FakeSocket();
    const client = new StudioClient(socket);
    const seen: string[] = [];
    client.onEnvelope((env) => seen.push(env.type));
    socket.reply({ type: "RobotState", seq: 1, payload: {} });
    socket.reply({ type: "CollisionWarning", seq: 1, payload: {} });
    expect(seen).toEqual(["RobotState", "CollisionWarning"]);
  });

  it("rejects the in-flight request when the connection drops", async () => {
    const socket = new FakeSocket();
    const client = new StudioClient(socket);
    let closed = false;
    client.onClose(() => {
      closed = true;
    });
    const pending = client.request("Play");
    client.close();
    await expect(pending).rejects.toThrow("closed");
    expect(closed).toBe(true);
    expect(client.isClosed).toBe(true);
    await expect(client.request("Pause")).rejects.toThrow("closed");
  });
});
