"""Minimal scripted client for the play protocol.

Connects to a play server, reads its JSON frames, and sends held-key
updates. Useful for smoke-testing a server without a browser and for
exercising the protocol in tests. Blocking and single-connection by design.
"""

from __future__ import annotations

import base64
import json
import os
import socket

from .server import (
    OP_CLOSE,
    OP_PING,
    OP_PONG,
    OP_TEXT,
    ClientGone,
    ProtocolError,
    decode_frame,
    encode_frame,
    websocket_accept,
)


class PlayClient:
    def __init__(self, host: str, port: int, timeout: float = 30.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        self.buf = bytearray()
        self._handshake(host, port)

    def _handshake(self, host: str, port: int) -> None:
        key = base64.b64encode(os.urandom(16)).decode("ascii")
        request = (
            "GET / HTTP/1.1\r\n"
            f"Host: {host}:{port}\r\n"
            "Upgrade: websocket\r\n"
            "Connection: Upgrade\r\n"
            f"Sec-WebSocket-Key: {key}\r\n"
            "Sec-WebSocket-Version: 13\r\n\r\n"
        )
        self.sock.sendall(request.encode("latin-1"))
        data = bytearray()
        while b"\r\n\r\n" not in data:
            chunk = self.sock.recv(4096)
            if not chunk:
                raise ClientGone("server closed during handshake")
            data += chunk
        head, leftover = bytes(data).split(b"\r\n\r\n", 1)
        lines = head.decode("latin-1").split("\r\n")
        if "101" not in lines[0]:
            raise ProtocolError(f"handshake refused: {lines[0]}")
        accept = None
        for line in lines[1:]:
            name, _, value = line.partition(":")
            if name.strip().lower() == "sec-websocket-accept":
                accept = value.strip()
        if accept != websocket_accept(key):
            raise ProtocolError("bad Sec-WebSocket-Accept value")
        self.buf += leftover

    def send_json(self, message: dict) -> None:
        payload = json.dumps(message, sort_keys=True, separators=(",", ":"))
        # clients must mask every frame
        frame = encode_frame(payload.encode("utf-8"), OP_TEXT, mask=os.urandom(4))
        self.sock.sendall(frame)

    def send_input(self, held) -> None:
        self.send_json({"type": "input", "held": sorted(held)})

    def recv_message(self) -> dict | None:
        """Next JSON message, or None once the server closes."""
        while True:
            parsed = decode_frame(self.buf)
            if parsed is not None:
                opcode, payload, consumed = parsed
                del self.buf[:consumed]
                if opcode == OP_CLOSE:
                    return None
                if opcode == OP_PING:
                    self.sock.sendall(encode_frame(payload, OP_PONG, mask=os.urandom(4)))
                    continue
                if opcode == OP_PONG:
                    continue
                if opcode != OP_TEXT:
                    raise ProtocolError(f"unsupported opcode {opcode:#x}")
                return json.loads(payload.decode("utf-8"))
            try:
                chunk = self.sock.recv(65536)
            except OSError:
                return None
            if not chunk:
                return None
            self.buf += chunk

    def close(self) -> None:
        try:
            self.sock.sendall(encode_frame(b"", OP_CLOSE, mask=os.urandom(4)))
        except OSError:
            pass
        self.sock.close()

    def __enter__(self) -> "PlayClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
