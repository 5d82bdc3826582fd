"""Southbound wire protocol: newline-delimited JSON over a byte stream.

Request:  {"type":"configure","request_id":N,
           "targets":[{"segment":s,"device":d,"outputs":"0xHHHH"}]}
Replies:  {"type":"ack","request_id":N}
          {"type":"complete","request_id":N,"config_time_us":X.Y,"trace":{...}}
Errors:   {"type":"error","request_id":N,"code":"UnknownTarget","message":...}

The same handler runs in-process (SouthboundSession.handle_line) or behind
a TCP listener. Concurrent connections are serialized onto the single
event engine; observable behavior equals some serial arrival order.
"""

from __future__ import annotations

import json
import socketserver
import threading

from .controller import ConfigureRequest, DeviceController, Target
from .engine import Engine
from .errors import MeowError
from .stats import ns_to_us_str
from .topology import Topology


def _parse_outputs(value) -> int:
    if isinstance(value, str):
        return int(value, 16 if value.lower().startswith("0x") else 10)
    if isinstance(value, int) and not isinstance(value, bool):
        return value
    raise ValueError(f"outputs must be an integer or hex string, got {value!r}")


def _trace_dict(report) -> dict:
    return {
        "t_generated_ns": report.t_generated_ns,
        "t_master_emit_ns": {str(s): t for s, t in sorted(report.t_master_emit_ns.items())},
        "t_latched_ns": {
            f"{s}/{d}": t for (s, d), t in sorted(report.t_latched_ns.items())
        },
        "config_time_ns": report.config_time_ns,
    }


class SouthboundSession:
    """One controller + engine behind the line protocol."""

    def __init__(self, topology: Topology, seed: int = 0):
        self.engine = Engine(seed=seed)
        self.controller = DeviceController(self.engine, topology)
        self.controller.start()
        self._lock = threading.Lock()

    def handle_line(self, line: str) -> list[str]:
        """Process one request line; returns the reply lines in order."""
        with self._lock:
            return [json.dumps(reply, sort_keys=True) for reply in self._handle(line)]

    def _handle(self, line: str):
        try:
            message = json.loads(line)
        except json.JSONDecodeError as exc:
            return [self._error(None, "BadMessage", f"not valid JSON: {exc}")]
        if not isinstance(message, dict):
            return [self._error(None, "BadMessage", "message must be an object")]
        request_id = message.get("request_id")
        if message.get("type") != "configure":
            return [self._error(request_id, "BadMessage",
                                f"unknown message type {message.get('type')!r}")]
        try:
            targets = tuple(
                Target(
                    segment=raw["segment"],
                    device=raw["device"],
                    word=_parse_outputs(raw["outputs"]),
                )
                for raw in message["targets"]
            )
            request = ConfigureRequest(request_id=request_id, targets=targets)
        except (KeyError, TypeError, ValueError) as exc:
            return [self._error(request_id, "BadMessage", str(exc))]

        try:
            self.controller.submit(request, self.engine.now)
        except MeowError as exc:
            return [self._error(request_id, type(exc).__name__, str(exc))]

        ack = {"type": "ack", "request_id": request_id}
        report = self.controller.run_until_complete(request_id)
        tenths = (report.config_time_ns + 50) // 100
        complete = {
            "type": "complete",
            "request_id": request_id,
            "config_time_us": tenths / 10,
            "trace": _trace_dict(report),
        }
        assert f"{complete['config_time_us']:.1f}" == ns_to_us_str(report.config_time_ns)
        return [ack, complete]

    @staticmethod
    def _error(request_id, code: str, message: str) -> dict:
        return {
            "type": "error",
            "request_id": request_id,
            "code": code,
            "message": message,
        }


class _LineHandler(socketserver.StreamRequestHandler):
    def handle(self):
        session = self.server.session
        for raw in self.rfile:
            line = raw.decode("utf-8").strip()
            if not line:
                continue
            for reply in session.handle_line(line):
                self.wfile.write(reply.encode("utf-8") + b"\n")
            self.wfile.flush()


class SouthboundServer(socketserver.ThreadingTCPServer):
    """TCP front-end for the line protocol; one shared simulator session."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address, topology: Topology, seed: int = 0):
        super().__init__(address, _LineHandler)
        self.session = SouthboundSession(topology, seed=seed)

    @property
    def bound_address(self):
        return self.server_address

    def serve_background(self) -> threading.Thread:
        thread = threading.Thread(target=self.serve_forever, daemon=True)
        thread.start()
        return thread
