"""Command-line entry points: serve, train, sample, metrics, replay, mock-robot."""
from __future__ import annotations

import argparse
import asyncio
import json
import sys
from importlib import resources

import numpy as np

from . import metrics as metrics_mod
from . import promp
from .kinematics import load_arm
from .net import MockRobot, SessionServer, execute_on_robot, parse_endpoint, session_executor
from .scene import Scene, load_scene
from .session import Session
from .trajectory import trajectory_to_dict, trajectory_from_dict


def default_arm_path():
    return str(resources.files("demokit").joinpath("data/ur10_arm.json"))


def _load_traj(path):
    with open(path) as f:
        return trajectory_from_dict(json.load(f))


def cmd_serve(args):
    arm = load_arm(args.arm or default_arm_path())
    scene = load_scene(args.scene) if args.scene else Scene()
    session = Session(args.data, arm, scene, executor=session_executor)
    host, port = parse_endpoint(args.listen)
    server = SessionServer(session, host=host, port=port)
    print("serving on tcp://%s:%d and ws://%s:%d" % (host, port, host, port + 1))
    asyncio.run(server.serve_forever())
    return 0


def cmd_train(args):
    arm = load_arm(args.arm or default_arm_path())
    session = Session(args.data, arm)
    ids = session.manifest.ids()
    if len(ids) < 2:
        raise SystemExit("error: TooFewDemos: training set has %d trajectories"
                         % len(ids))
    demos = [session.store.load(i) for i in ids]
    cfg = promp.BasisConfig(n_basis=args.n_basis)
    model = promp.train_promp(demos, cfg=cfg)
    promp.save_model(model, session.model_path)
    print("trained on %d demos, model written to %s" % (len(demos),
                                                        session.model_path))
    return 0


def _parse_marker(text):
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 4:
        raise SystemExit("error: BadMarker: expected x,y,z,t, got %r" % text)
    return parts


def cmd_sample(args):
    model = promp.load_model(args.model)
    vias = []
    for marker in args.marker or []:
        x, y, z, t = _parse_marker(marker)
        vias.append(promp.ViaPoint(
            phase=promp.timestamp_to_phase(t, model.reference_duration),
            value=[x, y, z], noise_var=args.noise_var))
    conditioned = promp.condition(model, vias)
    traj = promp.mean_trajectory(conditioned, args.n)
    doc = trajectory_to_dict(traj)
    if args.out:
        with open(args.out, "w") as f:
            json.dump(doc, f, indent=1)
        print("wrote %s" % args.out)
    else:
        json.dump(doc, sys.stdout, indent=1)
        print()
    return 0


def cmd_metrics(args):
    traj = _load_traj(args.traj)
    report = {
        "mean_jerk": metrics_mod.mean_jerk(traj),
        "deviation": metrics_mod.deviation(traj),
        "variation": metrics_mod.variation(traj),
    }
    if args.ref:
        report["mse"] = metrics_mod.mse(traj, _load_traj(args.ref))
    json.dump(report, sys.stdout, indent=1)
    print()
    return 0


def cmd_replay(args):
    arm = load_arm(args.arm or default_arm_path())
    traj = _load_traj(args.traj)
    report = execute_on_robot(arm, traj, args.endpoint)
    print("sent %d states to %s" % (report["sent"], report["endpoint"]))
    return 0


def cmd_mock_robot(args):
    host, port = parse_endpoint(args.listen)
    robot = MockRobot(host=host, port=port, log_path=args.log)
    robot.start()
    print("mock robot listening on %s" % robot.endpoint)
    try:
        robot._thread.join()
    except KeyboardInterrupt:
        robot.stop()
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="demokit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the session server")
    p.add_argument("--data", required=True)
    p.add_argument("--arm")
    p.add_argument("--scene")
    p.add_argument("--listen", default="127.0.0.1:7700")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("train", help="train a model from the training set")
    p.add_argument("--data", required=True)
    p.add_argument("--arm")
    p.add_argument("--n-basis", type=int, default=promp.DEFAULT_BASIS_COUNT)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sample", help="condition a model and emit its mean")
    p.add_argument("--model", required=True)
    p.add_argument("--marker", action="append",
                   help="via point as x,y,z,t (repeatable)")
    p.add_argument("--noise-var", type=float, default=1e-12)
    p.add_argument("--n", type=int, default=promp.DEFAULT_RESAMPLE)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("metrics", help="report trajectory metrics")
    p.add_argument("--traj", required=True)
    p.add_argument("--ref")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("replay", help="stream a trajectory to a robot endpoint")
    p.add_argument("--traj", required=True)
    p.add_argument("--endpoint", required=True)
    p.add_argument("--arm")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("mock-robot", help="run the echoing mock robot endpoint")
    p.add_argument("--listen", default="127.0.0.1:7801")
    p.add_argument("--log")
    p.set_defaults(func=cmd_mock_robot)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except Exception as exc:
        print("error: %s: %s" % (type(exc).__name__, exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
