import json
import time

import pytest

from onecast.config import ServerConfig, load_config
from onecast.errors import ConfigError, ProtocolError
from onecast.harness import Service, baseline_demo, pull
from onecast.rtsp.client import RtspClient


def _config(tmp_path, n_sources=2, **overrides):
    defaults = dict(
        host="127.0.0.1",
        http_port=0,
        ws_port=0,
        rtsp_port=0,
        credentials="user:pw",
        width=640,
        height=352,
        fps=30,
        quant_step=16,
        store_dir=str(tmp_path / "store"),
        static_dir=str(tmp_path / "static"),
        sources=[
            {"name": f"cam{i}", "kind": "pattern", "width": 320, "height": 176, "fps": 30}
            for i in range(n_sources)
        ],
    )
    defaults.update(overrides)
    return ServerConfig(**defaults)


@pytest.fixture
def service(tmp_path):
    svc = Service(_config(tmp_path), quiet=True)
    svc.start()
    svc.wait_first_tick()
    yield svc
    svc.stop()


class TestConfigFile:
    def test_ini_roundtrip(self, tmp_path):
        path = tmp_path / "onecast.ini"
        path.write_text(
            "[server]\n"
            "host = 127.0.0.1\n"
            "http_port = 18080\n"
            "ws_port = 18383\n"
            "rtsp_port = 18554\n"
            "credentials = alice:secret\n"
            "call_timeout_s = 15\n"
            "heartbeat_interval_s = 1\n"
            "[canvas]\n"
            "width = 640\n"
            "height = 352\n"
            "fps = 30\n"
            "quant_step = 16\n"
            "[sources]\n"
            "cam-a = pattern 320x176 @30\n"
            "ghost = pattern 320x176 @30 virtual\n"
            "cam-b = pattern 160x96 @25\n"
        )
        config = load_config(path)
        assert config.credentials == "alice:secret"
        assert config.rtsp_port == 18554
        assert [s["name"] for s in config.sources] == ["cam-a", "ghost", "cam-b"]
        assert config.sources[1]["virtual"] is True
        assert config.sources[2]["fps"] == 25

    def test_missing_file_rejected(self):
        with pytest.raises(ConfigError):
            load_config("/nonexistent/onecast.ini")

    def test_bad_credentials_rejected(self):
        with pytest.raises(ConfigError):
            ServerConfig(credentials="nocolon")

    def test_bad_source_line_rejected(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[sources]\ncam = pattern tiny @30\n")
        with pytest.raises(ConfigError):
            load_config(path)


class TestServePull:
    def test_pull_produces_low_latency_samples(self, service):
        stats = pull(service.rtsp_url, duration_s=2.0)
        assert stats.frames >= 20
        assert stats.width == 640 and stats.height == 352
        assert all(s.latency_us >= 0 for s in stats.samples)
        assert stats.median_latency_ms < 500
        assert stats.p95_latency_ms < 2000

    def test_wrong_password_fails_before_setup(self, service):
        url = service.rtsp_url.replace(":pw@", ":wrong@")
        client = RtspClient(url)
        client.connect()
        with pytest.raises(ProtocolError):
            client.handshake()
        assert "SETUP" not in client.stages
        client.close()

    def test_teardown_silences_stream(self, service):
        stats = pull(service.rtsp_url, duration_s=1.0, expect_silence_after_teardown=True)
        assert stats.frames > 0

    def test_zero_sources_serves_gray_canvas(self, tmp_path):
        svc = Service(
            _config(tmp_path / "z", n_sources=0, gamma_correct=False), quiet=True
        )
        svc.start()
        svc.wait_first_tick()
        try:
            stats = pull(svc.rtsp_url, duration_s=1.0, keep_frames=True)
            assert stats.frames > 0
            frame = stats.decoded_frames[0]
            # Outside the strip rows everything is the background gray.
            region = frame[16:, :].astype(int)
            assert abs(region.mean() - 0x80) < 4
            assert region.std() < 4
        finally:
            svc.stop()

    def test_eight_sources_two_pages(self, tmp_path):
        svc = Service(_config(tmp_path / "m", n_sources=8), quiet=True)
        svc.start()
        try:
            assert svc.compositor.layout_state().page_count == 2
        finally:
            svc.stop()

    def test_port_conflict_names_port(self, tmp_path, service):
        taken = service.rtsp.port
        with pytest.raises(ConfigError) as exc:
            bad = Service(_config(tmp_path / "c", rtsp_port=taken), quiet=True)
            bad.start()
        assert str(taken) in str(exc.value)


class TestBaselineDemo:
    def test_overloaded_consumer_accumulates(self):
        report = baseline_demo(30, 20, duration_s=3.0)
        # (30-20) frames/s of imbalance.
        assert report["final_depth"] >= 20
        assert report["slope_frames_per_s"] == pytest.approx(10, abs=4)
        assert report["unbounded_growth"]

    def test_balanced_rates_stay_flat(self):
        report = baseline_demo(30, 30, duration_s=3.0)
        assert report["final_depth"] <= 2
        assert not report["unbounded_growth"]
