"""Minimal RFC 6455 WebSocket framing over blocking sockets.

Covers what the signaling plane needs: the HTTP Upgrade handshake, masked
client-to-server text frames, unmasked server-to-client frames, ping/pong,
and close. Continuation frames and extensions are not supported.
"""

from __future__ import annotations

import base64
import hashlib
import os
import socket
import struct

from ..errors import ProtocolError

_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"
MAX_MESSAGE = 1 << 20

OP_TEXT = 0x1
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA


def accept_key(client_key: str) -> str:
    digest = hashlib.sha1((client_key + _GUID).encode()).digest()
    return base64.b64encode(digest).decode()


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    data = b""
    while len(data) < n:
        chunk = sock.recv(n - len(data))
        if not chunk:
            raise ConnectionError("socket closed mid-frame")
        data += chunk
    return data


def _encode_frame(opcode: int, payload: bytes, mask: bool) -> bytes:
    head = bytes([0x80 | opcode])
    length = len(payload)
    mask_bit = 0x80 if mask else 0
    if length < 126:
        head += bytes([mask_bit | length])
    elif length < 1 << 16:
        head += bytes([mask_bit | 126]) + struct.pack(">H", length)
    else:
        head += bytes([mask_bit | 127]) + struct.pack(">Q", length)
    if mask:
        key = os.urandom(4)
        masked = bytes(b ^ key[i % 4] for i, b in enumerate(payload))
        return head + key + masked
    return head + payload


def _read_frame(sock: socket.socket, require_mask: bool):
    b0, b1 = _recv_exact(sock, 2)
    fin, opcode = b0 & 0x80, b0 & 0x0F
    if not fin:
        raise ProtocolError("fragmented frames are not supported")
    masked = bool(b1 & 0x80)
    if require_mask and not masked and opcode != OP_CLOSE:
        raise ProtocolError("client frames must be masked")
    length = b1 & 0x7F
    if length == 126:
        (length,) = struct.unpack(">H", _recv_exact(sock, 2))
    elif length == 127:
        (length,) = struct.unpack(">Q", _recv_exact(sock, 8))
    if length > MAX_MESSAGE:
        raise ProtocolError(f"frame of {length} bytes exceeds limit")
    key = _recv_exact(sock, 4) if masked else None
    payload = _recv_exact(sock, length) if length else b""
    if key:
        payload = bytes(b ^ key[i % 4] for i, b in enumerate(payload))
    return opcode, payload


class WsConnection:
    """One established WebSocket, either side of the handshake."""

    def __init__(self, sock: socket.socket, is_server: bool, peer=("", 0)):
        self._sock = sock
        self._is_server = is_server
        self.peer = peer
        self._closed = False

    def settimeout(self, timeout) -> None:
        self._sock.settimeout(timeout)

    def send_text(self, text: str) -> None:
        frame = _encode_frame(OP_TEXT, text.encode(), mask=not self._is_server)
        self._sock.sendall(frame)

    def recv_text(self) -> str | None:
        """Next text message; None once the connection closes."""
        while True:
            try:
                opcode, payload = _read_frame(self._sock, self._is_server)
            except (ConnectionError, OSError):
                return None
            if opcode == OP_TEXT:
                return payload.decode("utf-8", "replace")
            if opcode == OP_PING:
                self._sock.sendall(
                    _encode_frame(OP_PONG, payload, mask=not self._is_server)
                )
                continue
            if opcode == OP_CLOSE:
                self.close()
                return None
            # Pong or unknown: ignore.

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            try:
                self._sock.sendall(
                    _encode_frame(OP_CLOSE, b"", mask=not self._is_server)
                )
            except OSError:
                pass
            try:
                # shutdown wakes any thread blocked in recv; close alone
                # would leave it stuck on the open file description.
                self._sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            try:
                self._sock.close()
            except OSError:
                pass


def server_handshake(sock: socket.socket, peer=("", 0)) -> WsConnection:
    """Read the HTTP Upgrade request and answer 101."""
    data = b""
    while b"\r\n\r\n" not in data:
        chunk = sock.recv(4096)
        if not chunk:
            raise ProtocolError("connection closed during handshake")
        data += chunk
        if len(data) > 16384:
            raise ProtocolError("oversized handshake")
    head = data.split(b"\r\n\r\n", 1)[0].decode("utf-8", "replace")
    lines = head.split("\r\n")
    if not lines[0].startswith("GET "):
        raise ProtocolError(f"not a websocket upgrade: {lines[0]!r}")
    headers = {}
    for line in lines[1:]:
        name, sep, value = line.partition(":")
        if sep:
            headers[name.strip().lower()] = value.strip()
    if headers.get("upgrade", "").lower() != "websocket":
        raise ProtocolError("missing Upgrade: websocket")
    key = headers.get("sec-websocket-key")
    if not key:
        raise ProtocolError("missing Sec-WebSocket-Key")
    response = (
        "HTTP/1.1 101 Switching Protocols\r\n"
        "Upgrade: websocket\r\n"
        "Connection: Upgrade\r\n"
        f"Sec-WebSocket-Accept: {accept_key(key)}\r\n\r\n"
    )
    sock.sendall(response.encode())
    return WsConnection(sock, is_server=True, peer=peer)


def client_connect(host: str, port: int, path: str = "/", timeout: float = 5.0) -> WsConnection:
    sock = socket.create_connection((host, port), timeout=timeout)
    key = base64.b64encode(os.urandom(16)).decode()
    request = (
        f"GET {path} HTTP/1.1\r\n"
        f"Host: {host}:{port}\r\n"
        "Upgrade: websocket\r\n"
        "Connection: Upgrade\r\n"
        f"Sec-WebSocket-Key: {key}\r\n"
        "Sec-WebSocket-Version: 13\r\n\r\n"
    )
    sock.sendall(request.encode())
    data = b""
    while b"\r\n\r\n" not in data:
        chunk = sock.recv(4096)
        if not chunk:
            raise ProtocolError("server closed during handshake")
        data += chunk
    head = data.split(b"\r\n\r\n", 1)[0].decode("utf-8", "replace")
    if " 101 " not in head.split("\r\n")[0]:
        raise ProtocolError(f"handshake refused: {head.splitlines()[0]!r}")
    expected = accept_key(key)
    for line in head.split("\r\n")[1:]:
        name, sep, value = line.partition(":")
        if sep and name.strip().lower() == "sec-websocket-accept":
            if value.strip() != expected:
                raise ProtocolError("bad Sec-WebSocket-Accept")
            break
    else:
        raise ProtocolError("missing Sec-WebSocket-Accept")
    sock.settimeout(None)
    return WsConnection(sock, is_server=False, peer=(host, port))
