"""WebSocket signaling: presence registry, heartbeat echo, call routing.

A client's first frame after connecting is its identity (uuid/nickname) as
plain text. Every later frame is a nine-key signal message. Heartbeats are
echoed to the sender with ResponseCode 200 and update the cached state;
call requests are forwarded to the callee with the Calling/Called flags
flipped; call responses flow back to the caller; an unanswered call times
out to StandStill. All shared state mutates under one lock, and timers
re-enter through that same lock, so no handler observes a torn state.

Error frames reuse the message schema with ResponseCode set to 400 (bad
message), 404 (unknown callee), or 409 (duplicate identity).
"""

from __future__ import annotations

import socket
import threading
import time

from ..errors import ConfigError, ProtocolError
from .messages import dump_message, is_true, make_message, parse_message
from .store import AppendStore, KvCache
from .ws import WsConnection, server_handshake

STATE_KEY = "state:{}"
ADDR_KEY = "addr:{}"


class _Call:
    def __init__(self, caller: str, callee: str, timer: threading.Timer):
        self.caller = caller
        self.callee = callee
        self.timer = timer


class SignalingServer:
    def __init__(
        self,
        host: str = "0.0.0.0",
        port: int = 8383,
        store: AppendStore | None = None,
        cache: KvCache | None = None,
        call_timeout_s: float = 15.0,
        heartbeat_interval_s: float = 1.0,
    ):
        self.host = host
        self.port = port
        self.store = store
        self.cache = cache if cache is not None else KvCache()
        self.call_timeout_s = call_timeout_s
        self.heartbeat_interval_s = heartbeat_interval_s
        self.registry: dict[str, WsConnection] = {}
        self._conn_ids: dict[WsConnection, str] = {}
        self._last_beat: dict[str, float] = {}
        self._calls: dict[tuple[str, str], _Call] = {}
        self._lock = threading.RLock()
        self._listener: socket.socket | None = None
        self._threads: list[threading.Thread] = []
        self._running = False

    # --- lifecycle ----------------------------------------------------------

    def start(self) -> None:
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            listener.bind((self.host, self.port))
        except OSError as exc:
            listener.close()
            raise ConfigError(f"ws_port {self.port} unavailable: {exc}") from None
        listener.listen(16)
        listener.settimeout(0.25)
        if self.port == 0:
            self.port = listener.getsockname()[1]
        self._listener = listener
        self._running = True
        for target in (self._accept_loop, self._sweep_loop):
            thread = threading.Thread(target=target, daemon=True)
            thread.start()
            self._threads.append(thread)

    def stop(self) -> None:
        self._running = False
        if self._listener:
            self._listener.close()
        with self._lock:
            for call in list(self._calls.values()):
                call.timer.cancel()
            self._calls.clear()
            conns = list(self.registry.values())
        for conn in conns:
            conn.close()
        for thread in self._threads:
            thread.join(timeout=2.0)
        self._threads.clear()

    def _accept_loop(self) -> None:
        while self._running:
            try:
                sock, addr = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            thread = threading.Thread(
                target=self._serve_connection, args=(sock, addr), daemon=True
            )
            thread.start()
            self._threads.append(thread)

    def _sweep_loop(self) -> None:
        while self._running:
            time.sleep(self.heartbeat_interval_s)
            deadline = time.monotonic() - 5 * self.heartbeat_interval_s
            with self._lock:
                stale = [
                    uuid
                    for uuid, beat in self._last_beat.items()
                    if beat < deadline and uuid in self.registry
                ]
                conns = [self.registry[u] for u in stale]
            for conn in conns:
                conn.close()  # reader thread runs the disconnect path

    # --- connection handling --------------------------------------------------

    def _serve_connection(self, sock: socket.socket, addr) -> None:
        try:
            conn = server_handshake(sock, peer=addr)
        except ProtocolError:
            sock.close()
            return
        uuid = None
        try:
            first = conn.recv_text()
            if first is None:
                return
            uuid = self.on_first_message(conn, first)
            if uuid is None:
                return
            while True:
                text = conn.recv_text()
                if text is None:
                    return
                self.on_message(conn, text)
        finally:
            if uuid is not None:
                self.on_disconnect(conn)
            conn.close()

    def _send(self, conn: WsConnection, msg: dict) -> None:
        try:
            conn.send_text(dump_message(msg))
        except OSError:
            pass

    def _send_error(self, conn: WsConnection, code: int) -> None:
        self._send(conn, make_message(ResponseCode=str(code)))

    # --- protocol operations ---------------------------------------------------

    def on_first_message(self, conn: WsConnection, text: str) -> str | None:
        """Register the connection under its announced identity."""
        uuid = text.strip()
        if not uuid:
            self._send_error(conn, 400)
            conn.close()
            return None
        with self._lock:
            if uuid in self.registry:
                self._send_error(conn, 409)  # identity already connected
                conn.close()
                return None
            self.registry[uuid] = conn
            self._conn_ids[conn] = uuid
            self._last_beat[uuid] = time.monotonic()
        self.cache.set(STATE_KEY.format(uuid), "Online")
        if self.store is not None:
            self.store.append(
                "user_net_info",
                {
                    "uuid": uuid,
                    "name": uuid,
                    "ip": conn.peer[0],
                    "port": str(conn.peer[1]),
                    "state": "Online",
                },
            )
        return uuid

    def on_message(self, conn: WsConnection, text: str) -> None:
        with self._lock:
            uuid = self._conn_ids.get(conn)
        if uuid is None:
            return
        try:
            msg = parse_message(text)
        except ProtocolError:
            self._send_error(conn, 400)
            return
        if is_true(msg["HeartBeat"]):
            self.on_heartbeat(conn, uuid, msg)
        elif is_true(msg["Calling"]):
            self.on_call(conn, uuid, msg)
        elif is_true(msg["Called"]):
            self.on_call_response(conn, uuid, msg)
        else:
            self._send_error(conn, 400)

    def on_heartbeat(self, conn: WsConnection, uuid: str, msg: dict) -> None:
        self.cache.set(STATE_KEY.format(uuid), msg["UserState"])
        if msg["StreamAddress"]:
            self.cache.set(ADDR_KEY.format(uuid), msg["StreamAddress"])
        with self._lock:
            self._last_beat[uuid] = time.monotonic()
        echo = dict(msg)
        echo["ResponseCode"] = "200"
        self._send(conn, echo)

    def on_call(self, conn: WsConnection, caller: str, msg: dict) -> None:
        callee = msg["CalleeUUID"]
        with self._lock:
            target = self.registry.get(callee)
        if target is None:
            self._send_error(conn, 404)
            return
        if self.cache.get(STATE_KEY.format(callee)) != "Online":
            reply = make_message(
                ResponseCode="200",
                Calling="true",
                CallResult="StandStill",
                CallerUUID=msg["CallerUUID"],
                CalleeUUID=callee,
            )
            self._send(conn, reply)
            return
        forward = dict(msg)
        forward["Calling"] = "false"
        forward["Called"] = "true"
        key = (msg["CallerUUID"], callee)
        timer = threading.Timer(self.call_timeout_s, self._call_timeout, args=(key,))
        timer.daemon = True
        with self._lock:
            old = self._calls.pop(key, None)
            if old:
                old.timer.cancel()
            self._calls[key] = _Call(msg["CallerUUID"], callee, timer)
        timer.start()
        self._send(target, forward)

    def on_call_response(self, conn: WsConnection, callee: str, msg: dict) -> None:
        caller = msg["CallerUUID"]
        with self._lock:
            call = self._calls.pop((caller, callee), None)
            if call is not None:
                call.timer.cancel()
            target = self.registry.get(caller)
        if call is None or target is None:
            return  # late response after timeout, or caller vanished
        forward = dict(msg)
        forward["Calling"] = "true"
        forward["Called"] = "false"
        if msg["CallResult"] == "Accepted":
            self.cache.set(STATE_KEY.format(caller), "Chatting")
            self.cache.set(STATE_KEY.format(callee), "Chatting")
        elif msg["CallResult"] == "Rejected":
            self.cache.set(STATE_KEY.format(caller), "Online")
            self.cache.set(STATE_KEY.format(callee), "Online")
        self._send(target, forward)

    def _call_timeout(self, key: tuple[str, str]) -> None:
        with self._lock:
            call = self._calls.pop(key, None)
            target = self.registry.get(key[0]) if call else None
        if call is None or target is None:
            return
        self._send(
            target,
            make_message(
                ResponseCode="200",
                Calling="true",
                CallResult="StandStill",
                CallerUUID=call.caller,
                CalleeUUID=call.callee,
            ),
        )

    def on_disconnect(self, conn: WsConnection) -> None:
        with self._lock:
            uuid = self._conn_ids.pop(conn, None)
            if uuid is None:
                return  # double close is idempotent
            if self.registry.get(uuid) is conn:
                del self.registry[uuid]
            self._last_beat.pop(uuid, None)
            involved = [
                (key, call)
                for key, call in self._calls.items()
                if uuid in (call.caller, call.callee)
            ]
            for key, call in involved:
                call.timer.cancel()
                del self._calls[key]
        self.cache.set(STATE_KEY.format(uuid), "Offline")
        if self.store is not None:
            self.store.append(
                "user_net_info",
                {
                    "uuid": uuid,
                    "name": uuid,
                    "ip": conn.peer[0],
                    "port": str(conn.peer[1]),
                    "state": "Offline",
                },
            )
        for _, call in involved:
            other = call.callee if call.caller == uuid else call.caller
            with self._lock:
                target = self.registry.get(other)
            if target is not None:
                self._send(
                    target,
                    make_message(
                        ResponseCode="200",
                        Calling=str(call.caller == other).lower(),
                        Called=str(call.callee == other).lower(),
                        CallResult="StandStill",
                        CallerUUID=call.caller,
                        CalleeUUID=call.callee,
                    ),
                )

    # --- queries ----------------------------------------------------------------

    def online_users(self) -> list[dict]:
        """Users whose cached state is anything but Offline."""
        out = []
        with self._lock:
            uuids = list(self.registry)
        for uuid in uuids:
            state = self.cache.get(STATE_KEY.format(uuid))
            if state in (None, "Offline"):
                continue
            out.append(
                {
                    "nickname": uuid,
                    "uuid": uuid,
                    "stream_address": self.cache.get(ADDR_KEY.format(uuid), ""),
                    "state": state,
                }
            )
        return out
