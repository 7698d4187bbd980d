import * as THREE from "three";

import { ArmDescription, framePosition, jointFrames } from "./kinematics.js";
import { Vec3, ViewModel } from "./viewmodel.js";

/**
 * Three.js view of the arm, the drawn polyline, the sampled trajectory,
 * marker cubes, and the playback cursor. Purely a projection of ViewModel
 * state; it owns no session data.
 */
export class SceneView {
  readonly scene = new THREE.Scene();
  readonly camera: THREE.PerspectiveCamera;
  private renderer: THREE.WebGLRenderer | null = null;

  private linkGroup = new THREE.Group();
  private markerGroup = new THREE.Group();
  private drawnLine: THREE.Line;
  private sampledLine: THREE.Line;
  private cursorBall: THREE.Mesh;

  constructor(
    private arm: ArmDescription,
    width = 960,
    height = 600,
  ) {
    this.camera = new THREE.PerspectiveCamera(50, width / height, 0.01, 20);
    this.camera.position.set(1.6, -1.6, 1.2);
    this.camera.up.set(0, 0, 1);
    this.camera.lookAt(0, 0, 0.3);

    this.scene.add(new THREE.AmbientLight(0xffffff, 0.7));
    const sun = new THREE.DirectionalLight(0xffffff, 1.0);
    sun.position.set(2, -1, 3);
    this.scene.add(sun);
    this.scene.add(new THREE.GridHelper(2, 20));
    this.scene.add(this.linkGroup);
    this.scene.add(this.markerGroup);

    this.drawnLine = new THREE.Line(
      new THREE.BufferGeometry(),
      new THREE.LineBasicMaterial({ color: 0x2277ff }),
    );
    this.sampledLine = new THREE.Line(
      new THREE.BufferGeometry(),
      new THREE.LineBasicMaterial({ color: 0xff8800 }),
    );
    this.cursorBall = new THREE.Mesh(
      new THREE.SphereGeometry(0.02),
      new THREE.MeshStandardMaterial({ color: 0xff2222 }),
    );
    this.cursorBall.visible = false;
    this.scene.add(this.drawnLine, this.sampledLine, this.cursorBall);
  }

  attach(canvas: HTMLCanvasElement): void {
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.renderer.setSize(canvas.clientWidth, canvas.clientHeight, false);
  }

  /** Rebuild the link cylinders for a joint configuration. */
  setJoints(joints: number[]): void {
    this.linkGroup.clear();
    const frames = jointFrames(this.arm, joints);
    for (let i = 0; i + 1 < frames.length; i++) {
      const from = new THREE.Vector3(...framePosition(frames[i]));
      const to = new THREE.Vector3(...framePosition(frames[i + 1]));
      const length = from.distanceTo(to);
      if (length < 1e-6) {
        continue;
      }
      const link = new THREE.Mesh(
        new THREE.CylinderGeometry(0.03, 0.03, length, 12),
        new THREE.MeshStandardMaterial({ color: 0x999999 }),
      );
      link.position.copy(from.clone().add(to).multiplyScalar(0.5));
      link.quaternion.setFromUnitVectors(
        new THREE.Vector3(0, 1, 0),
        to.clone().sub(from).normalize(),
      );
      this.linkGroup.add(link);
    }
  }

  private setLine(line: THREE.Line, points: Vec3[]): void {
    line.geometry.dispose();
    line.geometry = new THREE.BufferGeometry().setFromPoints(
      points.map((p) => new THREE.Vector3(...p)),
    );
  }

  /** Project the current view model into scene objects. */
  update(view: ViewModel): void {
    if (view.joints !== null) {
      this.setJoints(view.joints);
    }
    this.setLine(this.drawnLine, view.polyline);
    this.setLine(
      this.sampledLine,
      view.sampled === null
        ? []
        : view.sampled.waypoints.map((w) => w.position),
    );
    this.markerGroup.clear();
    for (const marker of view.markers) {
      const cube = new THREE.Mesh(
        new THREE.BoxGeometry(0.04, 0.04, 0.04),
        new THREE.MeshStandardMaterial({ color: 0x33cc33 }),
      );
      cube.position.set(...marker.position);
      this.markerGroup.add(cube);
    }
    if (view.cursorPosition !== null) {
      this.cursorBall.visible = true;
      this.cursorBall.position.set(...view.cursorPosition);
    } else {
      this.cursorBall.visible = false;
    }
  }

  render(): void {
    this.renderer?.render(this.scene, this.camera);
  }
}
