"""WebSocket play server: a human client drives one timed session.

The server is authoritative. It advances the simulation on a fixed 60 Hz
clock; the client only reports which keys are held (a new ``input`` frame
replaces the held set, which persists until the next one). Each tick the
held set resolves to exactly one action by fixed priority, the engine
steps, and a ``state`` frame goes out. Completed sessions are written as
ordinary session records, so imported human play replays through the same
checker as agent play. A dropped connection discards the partial session.

Wire format is RFC 6455 (handshake + masked client frames) implemented
directly on TCP sockets; text frames carry one JSON message each.
"""

from __future__ import annotations

import base64
import hashlib
import json
import select
import socket
import socketserver
import sys
import threading
import time
from pathlib import Path

from .env import TICKS_PER_SECOND
from .evaluate import SessionDriver, TestParams
from .rng import derive_seed

WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

OP_CONT = 0x0
OP_TEXT = 0x1
OP_BINARY = 0x2
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA

# one action per tick; first held action on this list wins
ACTION_PRIORITY = ("ATTACK", "JUMP", "LEFT", "RIGHT")

MAX_FRAME_BYTES = 1 << 20


class ProtocolError(Exception):
    pass


class ClientGone(Exception):
    """Peer closed or dropped; the session is discarded."""


def websocket_accept(key: str) -> str:
    digest = hashlib.sha1((key + WS_GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


def encode_frame(payload: bytes, opcode: int = OP_TEXT, mask: bytes | None = None) -> bytes:
    """Build one unfragmented frame. Servers send unmasked; clients must mask."""
    head = bytearray([0x80 | opcode])
    mask_bit = 0x80 if mask is not None else 0
    n = len(payload)
    if n < 126:
        head.append(mask_bit | n)
    elif n < (1 << 16):
        head.append(mask_bit | 126)
        head += n.to_bytes(2, "big")
    else:
        head.append(mask_bit | 127)
        head += n.to_bytes(8, "big")
    if mask is not None:
        if len(mask) != 4:
            raise ProtocolError("masking key must be 4 bytes")
        head += mask
        payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
    return bytes(head) + payload


def decode_frame(buf: bytes | bytearray):
    """Parse one frame from the front of ``buf``.

    Returns (opcode, payload, bytes_consumed), or None if the buffer does
    not yet hold a complete frame.
    """
    if len(buf) < 2:
        return None
    b0, b1 = buf[0], buf[1]
    if not b0 & 0x80:
        raise ProtocolError("fragmented frames are not supported")
    if b0 & 0x70:
        raise ProtocolError("reserved frame bits set")
    opcode = b0 & 0x0F
    masked = bool(b1 & 0x80)
    length = b1 & 0x7F
    offset = 2
    if length == 126:
        if len(buf) < 4:
            return None
        length = int.from_bytes(buf[2:4], "big")
        offset = 4
    elif length == 127:
        if len(buf) < 10:
            return None
        length = int.from_bytes(buf[2:10], "big")
        offset = 10
    if length > MAX_FRAME_BYTES:
        raise ProtocolError(f"frame of {length} bytes exceeds limit")
    if masked:
        if len(buf) < offset + 4:
            return None
        mask = bytes(buf[offset : offset + 4])
        offset += 4
    else:
        mask = None
    if len(buf) < offset + length:
        return None
    payload = bytes(buf[offset : offset + length])
    if mask is not None:
        payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
    return opcode, payload, offset + length


def resolve_action(held, actions) -> str:
    """Collapse a held-key set to this tick's single action."""
    for name in ACTION_PRIORITY:
        if name in held and name in actions:
            return name
    return "NOOP"


class _WireSocket:
    """Frame-level send/recv on one accepted connection (server side)."""

    def __init__(self, sock: socket.socket, initial: bytes = b""):
        self.sock = sock
        self.buf = bytearray(initial)
        self.closed = False

    def send_json(self, message: dict) -> None:
        data = json.dumps(message, sort_keys=True, separators=(",", ":"))
        self.send_frame(data.encode("utf-8"), OP_TEXT)

    def send_frame(self, payload: bytes, opcode: int) -> None:
        if self.closed:
            raise ClientGone("socket already closed")
        try:
            self.sock.sendall(encode_frame(payload, opcode))
        except OSError as exc:
            self.closed = True
            raise ClientGone(str(exc)) from exc

    def poll_messages(self, timeout: float):
        """Yield decoded JSON from any complete text frames that have
        arrived, answering pings inline. Blocks at most ``timeout``."""
        try:
            ready, _, _ = select.select([self.sock], [], [], timeout)
            if ready:
                data = self.sock.recv(65536)
                if not data:
                    raise ClientGone("connection closed by peer")
                self.buf += data
        except OSError as exc:
            raise ClientGone(str(exc)) from exc
        while True:
            parsed = decode_frame(self.buf)
            if parsed is None:
                return
            opcode, payload, consumed = parsed
            del self.buf[:consumed]
            if opcode == OP_CLOSE:
                raise ClientGone("close frame received")
            if opcode == OP_PING:
                self.send_frame(payload, OP_PONG)
                continue
            if opcode == OP_PONG:
                continue
            if opcode != OP_TEXT:
                raise ProtocolError(f"unsupported opcode {opcode:#x}")
            try:
                yield json.loads(payload.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                raise ProtocolError(f"bad message payload: {exc}") from exc

    def close(self) -> None:
        if not self.closed:
            try:
                self.sock.sendall(encode_frame(b"", OP_CLOSE))
            except OSError:
                pass
            self.closed = True


def _read_http_request(sock: socket.socket):
    """Read one HTTP/1.1 request head.

    Returns (method, path, headers, leftover) where leftover is any bytes
    read past the blank line (a pipelining client's first frame).
    """
    sock.settimeout(10.0)
    data = bytearray()
    while b"\r\n\r\n" not in data:
        chunk = sock.recv(4096)
        if not chunk:
            raise ClientGone("connection closed during handshake")
        data += chunk
        if len(data) > 65536:
            raise ProtocolError("request head too large")
    head, leftover = bytes(data).split(b"\r\n\r\n", 1)
    lines = head.decode("latin-1").split("\r\n")
    try:
        method, path, _ = lines[0].split(" ", 2)
    except ValueError as exc:
        raise ProtocolError(f"malformed request line {lines[0]!r}") from exc
    headers = {}
    for line in lines[1:]:
        if ":" in line:
            name, value = line.split(":", 1)
            headers[name.strip().lower()] = value.strip()
    sock.settimeout(None)
    return method, path, headers, leftover


CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json",
    ".json": "application/json",
    ".png": "image/png",
    ".svg": "image/svg+xml",
    ".ico": "image/x-icon",
}

FALLBACK_PAGE = (
    "<!doctype html><title>play server</title>"
    "<p>WebSocket play endpoint. Connect a play client to this port.</p>"
)


def _send_http(sock, status: str, body: bytes, content_type: str) -> None:
    head = (
        f"HTTP/1.1 {status}\r\n"
        f"Content-Type: {content_type}\r\n"
        f"Content-Length: {len(body)}\r\n"
        "Connection: close\r\n\r\n"
    )
    sock.sendall(head.encode("latin-1") + body)


class PlayServer:
    """Serves play sessions (and, optionally, the static client files).

    Each accepted WebSocket connection gets its own session with a seed
    derived from the base seed and a per-connection counter, so two
    concurrent players never share a world.
    """

    def __init__(
        self,
        game: str,
        version: int,
        *,
        port: int = 0,
        host: str = "127.0.0.1",
        skill: str = "novice",
        seed: int = 0,
        time_s: int = 180,
        out_dir=None,
        static_dir=None,
        realtime: bool = True,
    ):
        self.game = game
        self.version = version
        self.skill = skill
        self.seed = seed
        self.time_s = time_s
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.static_dir = Path(static_dir) if static_dir is not None else None
        self.realtime = realtime
        self._counter = 0
        self._lock = threading.Lock()
        self._thread: threading.Thread | None = None

        play_server = self

        class Handler(socketserver.BaseRequestHandler):
            def handle(self):
                try:
                    play_server._handle_connection(self.request)
                except (ClientGone, ProtocolError) as exc:
                    print(f"play session dropped: {exc}", file=sys.stderr)
                except OSError:
                    pass

        class Server(socketserver.ThreadingTCPServer):
            allow_reuse_address = True
            daemon_threads = True

        self._server = Server((host, port), Handler)

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    def _next_session(self) -> int:
        with self._lock:
            self._counter += 1
            return self._counter

    # -- connection lifecycle ----------------------------------------------

    def _handle_connection(self, sock: socket.socket) -> None:
        method, path, headers, leftover = _read_http_request(sock)
        if headers.get("upgrade", "").lower() != "websocket":
            self._serve_static(sock, method, path)
            return
        key = headers.get("sec-websocket-key")
        if method != "GET" or not key:
            _send_http(sock, "400 Bad Request", b"bad websocket handshake", "text/plain")
            return
        response = (
            "HTTP/1.1 101 Switching Protocols\r\n"
            "Upgrade: websocket\r\n"
            "Connection: Upgrade\r\n"
            f"Sec-WebSocket-Accept: {websocket_accept(key)}\r\n\r\n"
        )
        sock.sendall(response.encode("latin-1"))
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self._run_play_session(_WireSocket(sock, leftover))

    def _serve_static(self, sock, method: str, path: str) -> None:
        if method != "GET":
            _send_http(sock, "405 Method Not Allowed", b"GET only", "text/plain")
            return
        path = path.split("?", 1)[0]
        if self.static_dir is None:
            if path == "/":
                _send_http(sock, "200 OK", FALLBACK_PAGE.encode(), "text/html; charset=utf-8")
            else:
                _send_http(sock, "404 Not Found", b"not found", "text/plain")
            return
        rel = path.lstrip("/") or "index.html"
        target = (self.static_dir / rel).resolve()
        root = self.static_dir.resolve()
        if root not in target.parents and target != root:
            _send_http(sock, "404 Not Found", b"not found", "text/plain")
            return
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            _send_http(sock, "404 Not Found", b"not found", "text/plain")
            return
        ctype = CONTENT_TYPES.get(target.suffix, "application/octet-stream")
        _send_http(sock, "200 OK", target.read_bytes(), ctype)

    # -- the authoritative session loop --------------------------------------

    def _run_play_session(self, wire: _WireSocket) -> None:
        index = self._next_session()
        session_id = f"{self.game}-v{self.version}-play{index:04d}"
        params = TestParams(
            version=self.version,
            time_s=self.time_s,
            session_kind="human",
            skill=self.skill,
            seed=derive_seed(self.seed, "play", index),
        )
        driver = SessionDriver(self.game, self.version, params, player_id=session_id)
        actions = driver.env.actions
        wire.send_json(
            {
                "type": "start",
                "game": self.game,
                "version": self.version,
                "session_id": session_id,
                "tps": TICKS_PER_SECOND,
                "time_s": self.time_s,
                "actions": list(actions),
            }
        )
        held: set[str] = set()
        t0 = time.monotonic()
        try:
            while not driver.finished:
                if self.realtime:
                    # keep polling until this tick's deadline so early input
                    # cannot speed the clock up
                    deadline = t0 + (driver.tick + 1) / TICKS_PER_SECOND
                    while True:
                        timeout = deadline - time.monotonic()
                        if timeout <= 0:
                            break
                        for message in wire.poll_messages(timeout):
                            held = self._apply_input(message, actions, held)
                else:
                    for message in wire.poll_messages(0.0):
                        held = self._apply_input(message, actions, held)
                result = driver.step(resolve_action(held, actions))
                wire.send_json(
                    {
                        "type": "state",
                        "tick": driver.tick - 1,
                        "time_left_s": (driver.total_ticks - driver.tick)
                        / TICKS_PER_SECOND,
                        "score": driver.partial_score(),
                        "entities": driver.env.entities(),
                        "events": [ev.kind for ev in result.events],
                    }
                )
            record = driver.finish()
            wire.send_json(
                {"type": "end", "score": record.score, "metrics": record.metrics}
            )
            if self.out_dir is not None:
                self.out_dir.mkdir(parents=True, exist_ok=True)
                record.write(self.out_dir / f"{session_id}.jsonl")
        finally:
            wire.close()

    @staticmethod
    def _apply_input(message: dict, actions, held: set[str]) -> set[str]:
        if not isinstance(message, dict) or message.get("type") != "input":
            raise ProtocolError(f"expected an input frame, got {message!r}")
        raw = message.get("held")
        if not isinstance(raw, list):
            raise ProtocolError("input frame needs a held list")
        # unknown names are dropped so older clients keep working when a
        # game lacks an action (the climb game has no ATTACK)
        return {name for name in raw if name in actions}

    # -- running --------------------------------------------------------------

    def start(self) -> None:
        """Serve on a background thread (returns immediately)."""
        self._thread = threading.Thread(
            target=self._server.serve_forever, kwargs={"poll_interval": 0.05},
            daemon=True,
        )
        self._thread.start()

    def serve_forever(self) -> None:
        self._server.serve_forever()

    def shutdown(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None

    def __enter__(self) -> "PlayServer":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.shutdown()
