"""HTTP API: account routes, presence listing, publish log, uploads, and the
director control surface (/layout, /preview.bmp, /control/*).

Handlers are registered in a route table, dispatched by (method, path).
Responses are JSON unless noted. Unknown routes get 404; bodies that fail to
parse get 400 with a reason.
"""

from __future__ import annotations

import hashlib
import json
import random
import struct
import threading
import time
import uuid as uuidlib
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from ..errors import ConfigError, StateError
from .store import AppendStore, KvCache

HOME_TEXT = "Welcome to home page."

_ADJECTIVES = (
    "brisk", "calm", "dapper", "eager", "fuzzy", "gleeful", "hasty", "jolly",
    "keen", "lively", "merry", "nimble", "plucky", "quirky", "spry", "witty",
)
_ANIMALS = (
    "heron", "lynx", "marmot", "otter", "pika", "quokka", "raven", "seal",
    "tapir", "urchin", "vole", "wombat", "yak", "zebra", "ibex", "koala",
)


def random_name(rng=None) -> str:
    rng = rng or random
    return f"{rng.choice(_ADJECTIVES)}-{rng.choice(_ANIMALS)}-{rng.randrange(1000):03d}"


def encode_bmp(rgb: np.ndarray) -> bytes:
    """Uncompressed 24-bit bottom-up BMP."""
    h, w = rgb.shape[:2]
    row = w * 3
    pad = (-row) % 4
    image_size = (row + pad) * h
    header = struct.pack("<2sIHHI", b"BM", 54 + image_size, 0, 0, 54)
    dib = struct.pack("<IiiHHIIiiII", 40, w, h, 1, 24, 0, image_size, 2835, 2835, 0, 0)
    bgr = rgb[::-1, :, ::-1]  # bottom-up rows, BGR order
    if pad:
        padded = np.zeros((h, row + pad), dtype=np.uint8)
        padded[:, :row] = bgr.reshape(h, row)
        body = padded.tobytes()
    else:
        body = np.ascontiguousarray(bgr).tobytes()
    return header + dib + body


@dataclass
class ApiContext:
    """Everything the HTTP handlers may touch."""

    store: AppendStore
    cache: KvCache
    signaling: object = None  # SignalingServer, for /get_online
    compositor: object = None  # Compositor, for /layout, /preview.bmp, /control/*
    static_dir: Path | None = None
    clock: object = None  # optional timestamp source for /publish


class _Router:
    def __init__(self):
        self.routes = {}

    def add(self, method: str, path: str, handler) -> None:
        self.routes[(method, path)] = handler

    def find(self, method: str, path: str):
        return self.routes.get((method, path))


def _json_bytes(obj) -> bytes:
    return json.dumps(obj).encode()


class HttpApi:
    def __init__(self, host: str = "0.0.0.0", port: int = 8080, context: ApiContext = None):
        self.host = host
        self.port = port
        self.context = context
        self.router = _Router()
        self._register_routes()
        self._httpd: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None

    # --- routes --------------------------------------------------------------

    def _register_routes(self) -> None:
        add = self.router.add
        add("GET", "/home", self._home)
        add("GET", "/random_name", self._random_name)
        add("GET", "/get_online", self._get_online)
        add("POST", "/register", self._register)
        add("POST", "/login", self._login)
        add("GET", "/published_list", self._published_list)
        add("POST", "/publish", self._publish)
        add("POST", "/client_log", self._store_upload)
        add("POST", "/img_base", self._store_upload)
        add("GET", "/layout", self._layout)
        add("GET", "/preview.bmp", self._preview)
        add("POST", "/control/maximize", self._control_maximize)
        add("POST", "/control/restore", self._control_restore)
        add("POST", "/control/page/next", self._control_page_next)
        add("POST", "/control/page/prev", self._control_page_prev)

    def _home(self, ctx, body):
        return 200, "text/plain", HOME_TEXT.encode()

    def _random_name(self, ctx, body):
        return 200, "application/json", _json_bytes(
            {"name": random_name(), "uuid": str(uuidlib.uuid4())}
        )

    def _get_online(self, ctx, body):
        users = ctx.signaling.online_users() if ctx.signaling else []
        return 200, "application/json", _json_bytes(
            [
                {
                    "nickname": u["nickname"],
                    "uuid": u["uuid"],
                    "stream_address": u["stream_address"],
                    "state": u["state"],
                }
                for u in users
            ]
        )

    def _register(self, ctx, body):
        data = _parse_json_body(body, required=("name", "password", "email"))
        if ctx.store.find_user(name=data["name"]) is not None:
            return 409, "application/json", _json_bytes(
                {"ok": False, "error": "name already registered"}
            )
        if ctx.store.find_user(email=data["email"]) is not None:
            return 409, "application/json", _json_bytes(
                {"ok": False, "error": "email already registered"}
            )
        row = ctx.store.append(
            "user",
            {"name": data["name"], "password": data["password"], "email": data["email"]},
        )
        return 200, "application/json", _json_bytes({"ok": True, "id": row["id"]})

    def _login(self, ctx, body):
        data = _parse_json_body(body, required=("name", "password"))
        user = ctx.store.find_user(name=data["name"])
        if user is None or user["password"] != data["password"]:
            return 401, "application/json", _json_bytes(
                {"ok": False, "error": "incorrect username or password"}
            )
        return 200, "application/json", _json_bytes({"ok": True})

    def _published_list(self, ctx, body):
        rows = ctx.store.query("published_list", lambda r: r["is_online"])
        return 200, "application/json", _json_bytes(rows)

    def _publish(self, ctx, body):
        data = _parse_json_body(body, required=("name", "title", "img_url", "ip", "port"))
        stamp = ctx.clock() if ctx.clock else time.strftime("%Y-%m-%dT%H:%M:%S")
        row = ctx.store.append(
            "published_list",
            {
                "time": stamp,
                "name": data["name"],
                "title": data["title"],
                "img_url": data["img_url"],
                "ip": data["ip"],
                "port": str(data["port"]),
                "is_online": True,
            },
        )
        return 200, "application/json", _json_bytes({"ok": True, "id": row["id"]})

    def _store_upload(self, ctx, body):
        if ctx.static_dir is None:
            return 503, "application/json", _json_bytes({"error": "no static dir"})
        digest = hashlib.sha256(body).hexdigest()
        name = f"{digest[:32]}.bin"
        path = Path(ctx.static_dir) / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(body)
        return 200, "application/json", _json_bytes({"ok": True, "stored": name})

    def _layout(self, ctx, body):
        if ctx.compositor is None:
            return 503, "application/json", _json_bytes({"error": "no compositor"})
        lay = ctx.compositor.layout_state()
        return 200, "application/json", _json_bytes(
            {
                "page_index": lay.page_index,
                "page_count": lay.page_count,
                "maximized": lay.maximized,
                "pages": [list(p) for p in lay.pages],
                "geometry": [
                    {"x": g.x, "y": g.y, "w": g.w, "h": g.h} for g in lay.geometry
                ],
            }
        )

    def _preview(self, ctx, body):
        if ctx.compositor is None:
            return 503, "application/json", _json_bytes({"error": "no compositor"})
        try:
            snap = ctx.compositor.snapshot()
        except StateError as exc:
            return 409, "application/json", _json_bytes({"error": str(exc)})
        return 200, "image/bmp", encode_bmp(snap.rgb)

    def _control(self, ctx, fn):
        if ctx.compositor is None:
            return 503, "application/json", _json_bytes({"error": "no compositor"})
        try:
            lay = fn()
        except StateError as exc:
            return 409, "application/json", _json_bytes({"error": str(exc)})
        return 200, "application/json", _json_bytes(
            {"ok": True, "page_index": lay.page_index, "maximized": lay.maximized}
        )

    def _control_maximize(self, ctx, body):
        data = _parse_json_body(body, required=("tile",))
        page = data.get("page")
        return self._control(
            ctx, lambda: ctx.compositor.maximize(int(data["tile"]), page)
        )

    def _control_restore(self, ctx, body):
        return self._control(ctx, ctx.compositor.restore)

    def _control_page_next(self, ctx, body):
        return self._control(ctx, ctx.compositor.page_next)

    def _control_page_prev(self, ctx, body):
        return self._control(ctx, ctx.compositor.page_prev)

    # --- plumbing --------------------------------------------------------------

    def start(self) -> None:
        api = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, *args):  # quiet
                pass

            def _dispatch(self, method):
                handler = api.router.find(method, self.path.split("?")[0])
                if handler is None:
                    self._reply(404, "application/json", _json_bytes({"error": "no such route"}))
                    return
                length = int(self.headers.get("Content-Length") or 0)
                body = self.rfile.read(length) if length else b""
                try:
                    status, ctype, payload = handler(api.context, body)
                except _BadBody as exc:
                    self._reply(400, "application/json", _json_bytes({"error": str(exc)}))
                    return
                except Exception as exc:  # noqa: BLE001 - surface as a 500
                    self._reply(500, "application/json", _json_bytes({"error": str(exc)}))
                    return
                self._reply(status, ctype, payload)

            def _reply(self, status, ctype, payload):
                self.send_response(status)
                self.send_header("Content-Type", ctype)
                self.send_header("Content-Length", str(len(payload)))
                self.send_header("Access-Control-Allow-Origin", "*")
                self.end_headers()
                self.wfile.write(payload)

            def do_GET(self):
                self._dispatch("GET")

            def do_POST(self):
                self._dispatch("POST")

        try:
            self._httpd = ThreadingHTTPServer((self.host, self.port), Handler)
        except OSError as exc:
            raise ConfigError(f"http_port {self.port} unavailable: {exc}") from None
        if self.port == 0:
            self.port = self._httpd.server_port
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        if self._httpd:
            self._httpd.shutdown()
            self._httpd.server_close()
        if self._thread:
            self._thread.join(timeout=2.0)


class _BadBody(Exception):
    pass


def _parse_json_body(body: bytes, required=()):
    try:
        data = json.loads(body.decode("utf-8") or "{}")
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise _BadBody(f"body is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise _BadBody("body must be a JSON object")
    missing = [key for key in required if key not in data]
    if missing:
        raise _BadBody(f"missing fields: {', '.join(missing)}")
    return data
