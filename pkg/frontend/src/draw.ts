import { Vec3 } from "./viewmodel.js";

export interface WorkPlane {
  /** Plane center in world coordinates. */
  center: Vec3;
  /** Half extents along world x and y; drawing is clamped to this box. */
  halfX: number;
  halfY: number;
  /** Depth slider range below/above the plane height, in meters. */
  depthRange: number;
}

export interface PointerEventLike {
  /** Normalized plane coordinates in [-1, 1] (outside values are clamped). */
  u: number;
  v: number;
  /** Depth slider value in [-1, 1]. */
  depth: number;
  /** Milliseconds since the stroke started. */
  timeMs: number;
}

export interface PoseSampleMessage {
  position: Vec3;
  t_wall: number;
}

const clamp = (x: number, lo: number, hi: number): number =>
  Math.min(hi, Math.max(lo, x));

/** Map a pointer event onto the work plane, clamped to its bounds. */
export function planePosition(
  plane: WorkPlane,
  event: PointerEventLike,
): Vec3 {
  return [
    plane.center[0] + clamp(event.u, -1, 1) * plane.halfX,
    plane.center[1] + clamp(event.v, -1, 1) * plane.halfY,
    plane.center[2] + clamp(event.depth, -1, 1) * plane.depthRange,
  ];
}

/**
 * Turns a press-drag-release pointer stream into PoseSample payloads, at most
 * one every `minIntervalMs` (the server applies its own coarser gating).
 */
export class StrokeSampler {
  private lastEmitMs: number | null = null;

  constructor(
    private plane: WorkPlane,
    private minIntervalMs = 50,
  ) {}

  /** Returns the payload to send, or null when the event is throttled. */
  pointerMove(event: PointerEventLike): PoseSampleMessage | null {
    if (
      this.lastEmitMs !== null &&
      event.timeMs - this.lastEmitMs < this.minIntervalMs
    ) {
      return null;
    }
    this.lastEmitMs = event.timeMs;
    return {
      position: planePosition(this.plane, event),
      t_wall: event.timeMs / 1000,
    };
  }

  release(): void {
    this.lastEmitMs = null;
  }
}
