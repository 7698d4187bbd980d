import {
  ClientMessageType,
  Envelope,
  parseEnvelope,
  serializeEnvelope,
} from "./protocol.js";

/** Minimal socket surface so tests can inject fakes or a node websocket. */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  set onmessage(handler: (data: string) => void);
  set onclose(handler: () => void);
}

export type EnvelopeListener = (env: Envelope) => void;
export type SendListener = (
  type: ClientMessageType,
  seq: number,
  payload: Record<string, unknown>,
) => void;

interface Pending {
  seq: number;
  resolve: (env: Envelope) => void;
  reject: (err: Error) => void;
}

/**
 * One session client: owns the strictly increasing sequence counter, keeps at
 * most one awaited request in flight, and fans every server envelope out to
 * listeners (RobotState, CollisionWarning, ExecutionDone, Busy arrive outside
 * the request/reply pairing).
 */
export class StudioClient {
  private seq = 0;
  private pending: Pending | null = null;
  private listeners: EnvelopeListener[] = [];
  private closeListeners: (() => void)[] = [];
  private closed = false;

  constructor(private socket: SocketLike) {
    socket.onmessage = (data) => this.handleIncoming(data);
    socket.onclose = () => this.handleClose();
  }

  onEnvelope(listener: EnvelopeListener): void {
    this.listeners.push(listener);
  }

  onClose(listener: () => void): void {
    this.closeListeners.push(listener);
  }

  private sendListeners: SendListener[] = [];

  onSend(listener: SendListener): void {
    this.sendListeners.push(listener);
  }

  get isClosed(): boolean {
    return this.closed;
  }

  /** Send and await the matching Ack or ErrorReply. */
  request(
    type: ClientMessageType,
    payload: Record<string, unknown> = {},
  ): Promise<Envelope> {
    if (this.closed) {
      return Promise.reject(new Error("connection closed"));
    }
    if (this.pending !== null) {
      return Promise.reject(new Error("a request is already in flight"));
    }
    const seq = ++this.seq;
    const promise = new Promise<Envelope>((resolve, reject) => {
      this.pending = { seq, resolve, reject };
    });
    for (const listener of this.sendListeners) {
      listener(type, seq, payload);
    }
    this.socket.send(serializeEnvelope({ type, seq, payload }));
    return promise;
  }

  /** Send without awaiting a reply (pose sampling while drawing). */
  fire(type: ClientMessageType, payload: Record<string, unknown> = {}): void {
    if (this.closed) {
      return;
    }
    const seq = ++this.seq;
    for (const listener of this.sendListeners) {
      listener(type, seq, payload);
    }
    this.socket.send(serializeEnvelope({ type, seq, payload }));
  }

  close(): void {
    this.socket.close();
    this.handleClose();
  }

  private handleIncoming(data: string): void {
    let env: Envelope;
    try {
      env = parseEnvelope(data);
    } catch {
      return; // a malformed server line must not break the client loop
    }
    for (const listener of this.listeners) {
      listener(env);
    }
    if (
      this.pending !== null &&
      env.seq === this.pending.seq &&
      (env.type === "Ack" || env.type === "ErrorReply")
    ) {
      const { resolve } = this.pending;
      this.pending = null;
      resolve(env);
    }
  }

  private handleClose(): void {
    if (this.closed) {
      return;
    }
    this.closed = true;
    if (this.pending !== null) {
      const { reject } = this.pending;
      this.pending = null;
      reject(new Error("connection closed"));
    }
    for (const listener of this.closeListeners) {
      listener();
    }
  }
}
