import { z } from "zod";

/**
 * Forward kinematics over the same arm description file the server reads
 * (Denavit-Hartenberg rows, one revolute joint per row), so the 3D arm is
 * rendered from a single geometry source.
 */

const dhRowSchema = z.object({
  theta_offset: z.number(),
  d: z.number(),
  a: z.number(),
  alpha: z.number(),
});

const armFileSchema = z.object({
  dh: z.array(dhRowSchema).length(6),
  limits: z.array(z.tuple([z.number(), z.number()])).length(6),
  base: z
    .object({
      translation: z.tuple([z.number(), z.number(), z.number()]),
      rotation: z.tuple([z.number(), z.number(), z.number(), z.number()]),
    })
    .optional(),
});

export type ArmDescription = z.infer<typeof armFileSchema>;

export function parseArmDescription(doc: unknown): ArmDescription {
  return armFileSchema.parse(doc);
}

/** Row-major 4x4 matrix. */
export type Mat4 = number[];

export function identity4(): Mat4 {
  return [1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1];
}

export function multiply4(a: Mat4, b: Mat4): Mat4 {
  const out = new Array<number>(16).fill(0);
  for (let i = 0; i < 4; i++) {
    for (let j = 0; j < 4; j++) {
      let sum = 0;
      for (let k = 0; k < 4; k++) {
        sum += a[4 * i + k] * b[4 * k + j];
      }
      out[4 * i + j] = sum;
    }
  }
  return out;
}

/** Joint transform: RotZ(theta) * TransZ(d) * TransX(a) * RotX(alpha). */
export function dhMatrix(
  theta: number,
  d: number,
  a: number,
  alpha: number,
): Mat4 {
  const ct = Math.cos(theta);
  const st = Math.sin(theta);
  const ca = Math.cos(alpha);
  const sa = Math.sin(alpha);
  // prettier-ignore
  return [
    ct, -st * ca,  st * sa, a * ct,
    st,  ct * ca, -ct * sa, a * st,
    0,        sa,       ca,      d,
    0,         0,        0,      1,
  ];
}

function baseMatrix(arm: ArmDescription): Mat4 {
  if (arm.base === undefined) {
    return identity4();
  }
  const [w, x, y, z] = arm.base.rotation;
  const [tx, ty, tz] = arm.base.translation;
  // prettier-ignore
  return [
    1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),     tx,
    2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),     ty,
    2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y), tz,
    0,                       0,                       0,                       1,
  ];
}

/** World transform of every joint frame plus the end effector (length 7). */
export function jointFrames(arm: ArmDescription, joints: number[]): Mat4[] {
  if (joints.length !== 6) {
    throw new Error(`expected 6 joint values, got ${joints.length}`);
  }
  const frames: Mat4[] = [baseMatrix(arm)];
  let current = frames[0];
  arm.dh.forEach((row, i) => {
    current = multiply4(
      current,
      dhMatrix(joints[i] + row.theta_offset, row.d, row.a, row.alpha),
    );
    frames.push(current);
  });
  return frames;
}

export function framePosition(frame: Mat4): [number, number, number] {
  return [frame[3], frame[7], frame[11]];
}

/** End-effector position for a joint configuration. */
export function endEffector(
  arm: ArmDescription,
  joints: number[],
): [number, number, number] {
  const frames = jointFrames(arm, joints);
  return framePosition(frames[frames.length - 1]);
}
