"""Network layer: timed execution streaming to a robot endpoint, the mock
robot endpoint itself, and the session server (TCP newline-JSON plus an
identical-schema WebSocket for browser clients).
"""
from __future__ import annotations

import asyncio
import contextlib
import json
import os
import socket
import threading
import time

import numpy as np

from .kinematics import ArmModel, IKParams, Pose, solve_ik, KinematicsError
from .session import Envelope, Session
from .trajectory import Trajectory


@contextlib.contextmanager
def _realtime_priority():
    """Best-effort SCHED_FIFO elevation around a timed send loop.

    Needs CAP_SYS_NICE; silently stays on the default scheduler without it.
    Restores the previous policy on exit either way.
    """
    try:
        old_policy = os.sched_getscheduler(0)
        old_param = os.sched_getparam(0)
        os.sched_setscheduler(0, os.SCHED_FIFO, os.sched_param(10))
    except (AttributeError, OSError, PermissionError):
        yield
        return
    try:
        yield
    finally:
        try:
            os.sched_setscheduler(0, old_policy, old_param)
        except OSError:
            pass


class ExecutionError(Exception):
    pass


class PreflightIKFailure(ExecutionError):
    def __init__(self, msg, waypoint=None):
        super().__init__(msg)
        self.waypoint = waypoint


class EndpointUnreachable(ExecutionError):
    pass


class EndpointTimeout(ExecutionError):
    pass


# elbow-up/down ready poses: recovery seeds when the caller's seed sits in a
# stretched, near-singular configuration the solver cannot escape
_FALLBACK_SEEDS = (
    np.array([0.0, -np.pi / 2, np.pi / 2, 0.0, np.pi / 2, 0.0]),
    np.array([0.0, -np.pi / 2, -np.pi / 2, 0.0, -np.pi / 2, 0.0]),
)


def _solve_with_fallbacks(arm, pose, seed, params):
    try:
        return solve_ik(arm, pose, seed, params)
    except KinematicsError as exc:
        last = exc
        for fallback in _FALLBACK_SEEDS:
            try:
                return solve_ik(arm, pose, arm.clamp(fallback), params)
            except KinematicsError as retry_exc:
                last = retry_exc
        raise last


def preflight_joint_path(arm: ArmModel, traj: Trajectory,
                         params: IKParams = IKParams(), seed_q=None):
    """IK-solve every waypoint, each seeded by the previous solution.

    Raises PreflightIKFailure before anything is sent if a waypoint cannot
    be reached; execution is all-or-nothing.
    """
    q = np.zeros(6) if seed_q is None else np.asarray(seed_q, dtype=float)
    path = []
    for i, wp in enumerate(traj.waypoints):
        try:
            q = _solve_with_fallbacks(arm, wp.pose, q, params)
        except KinematicsError as exc:
            raise PreflightIKFailure(
                "waypoint %d unreachable: %s" % (i, exc), waypoint=i) from exc
        path.append(q)
    return path


def execute_on_robot(arm: ArmModel, traj: Trajectory, endpoint,
                     params: IKParams = IKParams(), seed_q=None,
                     timeout=5.0):
    """Stream one timed joint-state message per waypoint to the endpoint.

    Messages go out at the waypoint timestamps relative to stream start;
    returns a report with per-waypoint send times.
    """
    host, port = parse_endpoint(endpoint)
    path = preflight_joint_path(arm, traj, params, seed_q)
    try:
        sock = socket.create_connection((host, port), timeout=timeout)
    except OSError as exc:
        raise EndpointUnreachable("cannot connect to %s:%d: %s"
                                  % (host, port, exc)) from exc
    send_times = []
    try:
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        sock.settimeout(timeout)
        # serialize ahead of time so only sleep+send run inside the timed loop
        frames = []
        for i, (wp, q) in enumerate(zip(traj.waypoints, path)):
            msg = {
                "type": "RobotState",
                "seq": i,
                "payload": {
                    "index": i,
                    "t": wp.t,
                    "joints": [float(v) for v in q],
                    "position": [float(v) for v in wp.pose.position],
                    "orientation": [float(v) for v in wp.pose.orientation],
                },
            }
            frames.append((json.dumps(msg) + "\n").encode())
        with _realtime_priority():
            start = time.perf_counter()
            for wp, frame in zip(traj.waypoints, frames):
                # coarse sleep, then a short spin: bare sleep() can wake
                # several ms late, while a long spin burns enough CPU to get
                # the process throttled; both would blow the jitter budget
                deadline = start + wp.t
                while True:
                    remaining = deadline - time.perf_counter()
                    if remaining <= 0.003:
                        break
                    time.sleep(remaining - 0.003)
                while time.perf_counter() < deadline:
                    pass
                try:
                    sock.sendall(frame)
                except socket.timeout as exc:
                    raise EndpointTimeout(str(exc)) from exc
                send_times.append(time.perf_counter() - start)
    finally:
        sock.close()
    return {"sent": len(send_times), "send_times": send_times,
            "endpoint": "%s:%d" % (host, port)}


def session_executor(arm, traj, endpoint, params, seed_q):
    """Executor hook for Session: maps stream failures onto session errors."""
    from .session import SessionError
    try:
        return execute_on_robot(arm, traj, endpoint, params, seed_q)
    except PreflightIKFailure as exc:
        raise SessionError("PreflightIKFailure", str(exc)) from exc
    except EndpointUnreachable as exc:
        raise SessionError("EndpointUnreachable", str(exc)) from exc
    except EndpointTimeout as exc:
        raise SessionError("EndpointTimeout", str(exc)) from exc


def parse_endpoint(endpoint):
    if isinstance(endpoint, (tuple, list)):
        return endpoint[0], int(endpoint[1])
    host, _, port = endpoint.rpartition(":")
    return host or "127.0.0.1", int(port)


class MockRobot:
    """TCP endpoint standing in for robot hardware.

    Echoes every received line back with a receive timestamp and keeps an
    in-memory record; optionally appends each record to a log file.
    """

    def __init__(self, host="127.0.0.1", port=0, log_path=None):
        self.log_path = log_path
        self.received = []
        self._server = socket.create_server((host, port))
        self.host, self.port = self._server.getsockname()[:2]
        self._thread = None
        self._stop = threading.Event()

    @property
    def endpoint(self):
        return "%s:%d" % (self.host, self.port)

    def start(self):
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()
        return self

    def _run(self):
        self._server.settimeout(0.5)
        while not self._stop.is_set():
            try:
                conn, _ = self._server.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            with conn:
                self._serve_connection(conn)

    def _serve_connection(self, conn):
        conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        conn.settimeout(0.5)
        buf = b""
        while not self._stop.is_set():
            try:
                chunk = conn.recv(4096)
            except socket.timeout:
                continue
            except OSError:
                break
            if not chunk:
                break
            buf += chunk
            while b"\n" in buf:
                line, buf = buf.split(b"\n", 1)
                self._handle_line(conn, line.decode())

    def _handle_line(self, conn, line):
        t_recv = time.perf_counter()
        record = {"received_at": t_recv, "message": json.loads(line)}
        self.received.append(record)
        if self.log_path:
            with open(self.log_path, "a") as f:
                f.write(json.dumps(record) + "\n")
        echo = dict(record["message"])
        echo["payload"] = dict(echo.get("payload", {}))
        echo["payload"]["received_at"] = t_recv
        try:
            conn.sendall((json.dumps(echo) + "\n").encode())
        except OSError:
            pass

    def stop(self):
        self._stop.set()
        try:
            self._server.close()
        except OSError:
            pass
        if self._thread:
            self._thread.join(timeout=2.0)


class SessionServer:
    """Serves one Session over TCP (newline JSON) and WebSocket.

    A single client owns the session; later connections get a Busy reply
    and are closed. The WebSocket listener runs on tcp_port + 1 with the
    same envelope schema, one envelope per websocket message.
    """

    def __init__(self, session: Session, host="127.0.0.1", port=7700,
                 enable_websocket=True):
        self.session = session
        self.host = host
        self.port = port
        self.enable_websocket = enable_websocket
        self._owner = None
        self._lock = asyncio.Lock()

    async def _claim(self, key):
        async with self._lock:
            if self._owner is None:
                self._owner = key
                # sequence numbers order messages within one connection; a
                # fresh client starts counting from 1 again
                self.session.last_seq = None
                return True
            return False

    async def _release(self, key):
        async with self._lock:
            if self._owner == key:
                self._owner = None

    async def _dispatch(self, line):
        try:
            env = Envelope.from_json(line)
        except (json.JSONDecodeError, KeyError) as exc:
            return [Envelope("ErrorReply", -1,
                             {"code": "PayloadValidation",
                              "message": "bad envelope: %s" % exc,
                              "mode": self.session.mode.value})]
        async with self._lock:
            return self.session.handle_message(env)

    async def _handle_tcp(self, reader, writer):
        key = object()
        if not await self._claim(key):
            writer.write((Envelope("Busy", 0, {}).to_json() + "\n").encode())
            await writer.drain()
            writer.close()
            return
        try:
            while True:
                line = await reader.readline()
                if not line:
                    break
                for reply in await self._dispatch(line.decode()):
                    writer.write((reply.to_json() + "\n").encode())
                await writer.drain()
        except (ConnectionResetError, asyncio.IncompleteReadError):
            pass
        finally:
            await self._release(key)
            try:
                writer.close()
            except RuntimeError:
                pass  # loop already closed during shutdown

    async def _handle_websocket(self, ws):
        key = object()
        if not await self._claim(key):
            await ws.send(Envelope("Busy", 0, {}).to_json())
            await ws.close()
            return
        try:
            async for message in ws:
                for reply in await self._dispatch(message):
                    await ws.send(reply.to_json())
        finally:
            await self._release(key)

    async def serve_forever(self):
        tcp = await asyncio.start_server(self._handle_tcp, self.host, self.port)
        ws_server = None
        if self.enable_websocket:
            import websockets
            ws_server = await websockets.serve(self._handle_websocket,
                                               self.host, self.port + 1)
        try:
            async with tcp:
                await tcp.serve_forever()
        finally:
            if ws_server is not None:
                try:
                    ws_server.close()
                except RuntimeError:
                    pass  # loop already closed during shutdown
