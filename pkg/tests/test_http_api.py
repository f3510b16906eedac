import json
import urllib.error
import urllib.request

import pytest

from onecast.compositor import CanvasConfig, Compositor
from onecast.signaling.http_api import ApiContext, HttpApi, encode_bmp
from onecast.signaling.store import AppendStore, KvCache
from onecast.sources import PatternSource, SourceDescriptor


def _request(port, method, path, body=None):
    data = None
    headers = {}
    if body is not None:
        data = json.dumps(body).encode() if isinstance(body, dict) else body
        headers["Content-Type"] = "application/json"
    req = urllib.request.Request(
        f"http://127.0.0.1:{port}{path}", data=data, method=method, headers=headers
    )
    try:
        with urllib.request.urlopen(req, timeout=5) as resp:
            return resp.status, resp.headers.get("Content-Type"), resp.read()
    except urllib.error.HTTPError as err:
        return err.code, err.headers.get("Content-Type"), err.read()


@pytest.fixture
def api(tmp_path):
    sources = [
        PatternSource(SourceDescriptor(i, f"cam{i}", "pattern", 160, 96, 30))
        for i in range(2)
    ]
    compositor = Compositor(
        CanvasConfig(width=640, height=352, fps=30), sources, clock=lambda: 42
    )
    compositor.compose_tick(0)
    context = ApiContext(
        store=AppendStore(tmp_path / "store"),
        cache=KvCache(),
        compositor=compositor,
        static_dir=tmp_path / "static",
    )
    server = HttpApi(host="127.0.0.1", port=0, context=context)
    server.start()
    yield server
    server.stop()


class TestBasicRoutes:
    def test_home_verbatim(self, api):
        status, ctype, body = _request(api.port, "GET", "/home")
        assert status == 200
        assert body.decode() == "Welcome to home page."

    def test_unknown_route_404(self, api):
        assert _request(api.port, "GET", "/nope")[0] == 404

    def test_unimplemented_legacy_routes_404(self, api):
        assert _request(api.port, "GET", "/index")[0] == 404
        assert _request(api.port, "GET", "/test_user")[0] == 404

    def test_random_name_unique_pairs(self, api):
        seen = set()
        for _ in range(100):
            _, _, body = _request(api.port, "GET", "/random_name")
            obj = json.loads(body)
            seen.add((obj["name"], obj["uuid"]))
        assert len(seen) == 100


class TestAccounts:
    def test_register_then_login(self, api):
        status, _, _ = _request(
            api.port, "POST", "/register",
            {"name": "alice", "password": "pw", "email": "a@x"},
        )
        assert status == 200
        status, _, body = _request(
            api.port, "POST", "/login", {"name": "alice", "password": "pw"}
        )
        assert status == 200 and json.loads(body)["ok"]

    def test_duplicate_email_rejected(self, api):
        _request(api.port, "POST", "/register",
                 {"name": "alice", "password": "pw", "email": "a@x"})
        status, _, body = _request(
            api.port, "POST", "/register",
            {"name": "bob", "password": "pw", "email": "a@x"},
        )
        assert status == 409
        assert "email" in json.loads(body)["error"]

    def test_duplicate_name_rejected(self, api):
        _request(api.port, "POST", "/register",
                 {"name": "alice", "password": "pw", "email": "a@x"})
        status, _, body = _request(
            api.port, "POST", "/register",
            {"name": "alice", "password": "pw", "email": "b@x"},
        )
        assert status == 409
        assert "name" in json.loads(body)["error"]

    def test_wrong_password_rejected(self, api):
        _request(api.port, "POST", "/register",
                 {"name": "alice", "password": "pw", "email": "a@x"})
        status, _, body = _request(
            api.port, "POST", "/login", {"name": "alice", "password": "nope"}
        )
        assert status == 401 and not json.loads(body)["ok"]

    def test_malformed_body_400_with_reason(self, api):
        status, _, body = _request(api.port, "POST", "/register", b"{not json")
        assert status == 400
        assert "JSON" in json.loads(body)["error"]

    def test_missing_fields_400(self, api):
        status, _, body = _request(api.port, "POST", "/register", {"name": "x"})
        assert status == 400
        assert "password" in json.loads(body)["error"]


class TestPublish:
    def test_publish_appears_in_list(self, api):
        _request(api.port, "POST", "/publish",
                 {"name": "alice", "title": "show", "img_url": "u", "ip": "::1", "port": 8554})
        status, _, body = _request(api.port, "GET", "/published_list")
        rows = json.loads(body)
        assert status == 200 and len(rows) == 1
        assert rows[0]["title"] == "show"
        assert rows[0]["is_online"] is True

    def test_upload_stored_content_addressed(self, api, tmp_path):
        payload = b"\x01\x02\x03log"
        status, _, body = _request(api.port, "POST", "/client_log", payload)
        assert status == 200
        name = json.loads(body)["stored"]
        stored = (tmp_path / "static" / name).read_bytes()
        assert stored == payload
        # Same content through the other upload route maps to the same name.
        _, _, body2 = _request(api.port, "POST", "/img_base", payload)
        assert json.loads(body2)["stored"] == name


class TestDirectorSurface:
    def test_layout_mirrors_compositor(self, api):
        status, _, body = _request(api.port, "GET", "/layout")
        layout = json.loads(body)
        assert status == 200
        assert layout["page_index"] == 0
        assert layout["pages"][0][:2] == [0, 1]
        assert layout["maximized"] is None

    def test_control_maximize_roundtrip(self, api):
        status, _, body = _request(api.port, "POST", "/control/maximize", {"tile": 1})
        assert status == 200 and json.loads(body)["maximized"] == 1
        layout = json.loads(_request(api.port, "GET", "/layout")[2])
        assert layout["maximized"] == 1
        assert layout["geometry"][1] == {"x": 0, "y": 0, "w": 640, "h": 352}
        status, _, _ = _request(api.port, "POST", "/control/restore", {})
        assert status == 200

    def test_control_errors_are_409(self, api):
        status, _, body = _request(api.port, "POST", "/control/restore", {})
        assert status == 409
        assert "maximized" in json.loads(body)["error"]

    def test_page_next_clamps(self, api):
        # Only one page with two sources; next keeps index 0.
        status, _, body = _request(api.port, "POST", "/control/page/next", {})
        assert status == 200 and json.loads(body)["page_index"] == 0

    def test_preview_is_valid_bmp(self, api):
        status, ctype, body = _request(api.port, "GET", "/preview.bmp")
        assert status == 200
        assert ctype == "image/bmp"
        assert body[:2] == b"BM"
        # 54-byte header + 640*352*3 pixel bytes (row stride already aligned).
        assert len(body) == 54 + 640 * 352 * 3


class TestBmpEncoder:
    def test_known_pixel_layout(self):
        import numpy as np

        rgb = np.zeros((2, 2, 3), dtype=np.uint8)
        rgb[0, 0] = (255, 0, 0)  # top-left red
        data = encode_bmp(rgb)
        # Bottom-up: last row in file is the image's top row; BGR order.
        assert data[:2] == b"BM"
        top_row_offset = 54 + 8  # second stored row (2 px * 3 B + 2 pad)
        assert data[top_row_offset : top_row_offset + 3] == b"\x00\x00\xff"
