"""Orchestration: the serving stack, the pull client, and the benchmarks.

serve(): sources -> compositor tick loop -> gamma -> NV12 -> encode ->
RTP broadcast, alongside the signaling WebSocket and the HTTP API.

pull(): six-stage handshake, then a reader thread feeding a bounded
four-frame buffer (drop-oldest, so a slow decoder can never rebuild the
unbounded-queue pathology) and a decode loop producing latency samples from
the timestamp strips.

bench_invariance(): serve with N sources, maximize the first feed so the
canvas statistics are identical for every N, and measure latency/bitrate
with pull running in a separate process.

baseline_demo(): the legacy length-prefixed framing on a real TCP pair with
a deliberately slow consumer, reproducing cumulative queue growth.
"""

from __future__ import annotations

import json
import socket
import statistics
import subprocess
import sys
import threading
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .codec import decode_frame, encode_frame
from .color import gamma_correct, pack_nv12, unpack_nv12
from .compositor import CanvasConfig, Compositor
from .config import ServerConfig
from .errors import OnecastError, ProtocolError, StripError
from .framing import ReassemblyBuffer, pack
from .rtsp.client import RtspClient
from .rtsp.server import RtspServer
from .signaling.http_api import ApiContext, HttpApi
from .signaling.server import SignalingServer
from .signaling.store import AppendStore, KvCache
from .sources import enumerate_sources, open_source, read_timestamp_strip


def _now_us() -> int:
    return time.time_ns() // 1000


@dataclass
class LatencySample:
    frame_index: int
    compose_ts_us: int
    arrival_ts_us: int

    @property
    def latency_us(self) -> int:
        return self.arrival_ts_us - self.compose_ts_us


@dataclass
class PullStats:
    frames: int = 0
    drops: int = 0
    decode_errors: int = 0
    duration_s: float = 0.0
    bytes_received: int = 0
    width: int = 0
    height: int = 0
    samples: list = field(default_factory=list)
    decoded_frames: list | None = None

    @property
    def median_latency_ms(self) -> float:
        if not self.samples:
            return float("nan")
        return statistics.median(s.latency_us for s in self.samples) / 1000.0

    @property
    def p95_latency_ms(self) -> float:
        if not self.samples:
            return float("nan")
        ordered = sorted(s.latency_us for s in self.samples)
        return ordered[min(len(ordered) - 1, int(0.95 * len(ordered)))] / 1000.0

    @property
    def drop_rate(self) -> float:
        total = self.frames + self.drops
        return self.drops / total if total else 0.0

    @property
    def bitrate_bps(self) -> float:
        return 8.0 * self.bytes_received / self.duration_s if self.duration_s else 0.0

    def to_dict(self) -> dict:
        return {
            "frames": self.frames,
            "drops": self.drops,
            "decode_errors": self.decode_errors,
            "drop_rate": self.drop_rate,
            "median_latency_ms": self.median_latency_ms,
            "p95_latency_ms": self.p95_latency_ms,
            "bitrate_bps": self.bitrate_bps,
            "width": self.width,
            "height": self.height,
            "duration_s": self.duration_s,
        }


class Service:
    """Everything `serve` runs: sources, compositor, RTSP, signaling, HTTP."""

    def __init__(self, config: ServerConfig, quiet: bool = False):
        self.config = config
        self.quiet = quiet
        descriptors = enumerate_sources(config.sources)
        self.sources = [open_source(d) for d in descriptors]
        self.compositor = Compositor(
            CanvasConfig(width=config.width, height=config.height, fps=config.fps),
            self.sources,
        )
        self.compositor.sample_hidden_pages = config.sample_hidden_pages
        self.store = AppendStore(config.store_dir)
        self.cache = KvCache()
        self.rtsp = RtspServer(
            host=config.host,
            port=config.rtsp_port,
            credentials=config.credentials,
            width=config.width,
            height=config.height,
            fps=config.fps,
            step=config.quant_step,
        )
        self.signaling = SignalingServer(
            host=config.host,
            port=config.ws_port,
            store=self.store,
            cache=self.cache,
            call_timeout_s=config.call_timeout_s,
            heartbeat_interval_s=config.heartbeat_interval_s,
        )
        self.http = HttpApi(
            host=config.host,
            port=config.http_port,
            context=ApiContext(
                store=self.store,
                cache=self.cache,
                signaling=self.signaling,
                compositor=self.compositor,
                static_dir=Path(config.static_dir),
            ),
        )
        self._stop = threading.Event()
        self._engine: threading.Thread | None = None
        self.ticks = 0

    @property
    def rtsp_url(self) -> str:
        return self.rtsp.url

    def start(self) -> None:
        self.rtsp.start()
        self.signaling.start()
        self.http.start()
        self._stop.clear()
        self._engine = threading.Thread(target=self._engine_loop, daemon=True)
        self._engine.start()
        if not self.quiet:
            print(f"RTSP Address: {self.rtsp_url}")
            print(
                f"HTTP API on {self.config.host}:{self.http.port}, "
                f"signaling on {self.config.host}:{self.signaling.port}"
            )

    def stop(self) -> None:
        self._stop.set()
        if self._engine:
            self._engine.join(timeout=3.0)
        self.http.stop()
        self.signaling.stop()
        self.rtsp.stop()

    def _engine_loop(self) -> None:
        period = 1.0 / self.config.fps
        next_tick = time.monotonic()
        tick = 0
        while not self._stop.is_set():
            frame = self.compositor.compose_tick(tick)
            rgb = gamma_correct(frame.rgb) if self.config.gamma_correct else frame.rgb
            encoded = encode_frame(
                pack_nv12(rgb),
                self.config.quant_step,
                tick,
                frame.capture_ts_us,
            )
            self.rtsp.broadcast(encoded)
            tick += 1
            self.ticks = tick
            next_tick += period
            delay = next_tick - time.monotonic()
            if delay > 0:
                self._stop.wait(delay)
            else:
                next_tick = time.monotonic()  # behind schedule: no backlog

    def wait_first_tick(self, timeout: float = 5.0) -> None:
        deadline = time.monotonic() + timeout
        while self.ticks == 0 and time.monotonic() < deadline:
            time.sleep(0.01)


def serve(config: ServerConfig, quiet: bool = False) -> Service:
    service = Service(config, quiet=quiet)
    service.start()
    return service


class _BoundedFrameBuffer:
    """Capacity-limited handoff between the reader and the decoder. When
    full, the oldest frame is discarded: the baseline queue pathology cannot
    reappear here."""

    def __init__(self, capacity: int = 4):
        self.capacity = capacity
        self._items = []
        self.dropped = 0
        self._cond = threading.Condition()
        self._done = False

    def put(self, item) -> None:
        with self._cond:
            if len(self._items) >= self.capacity:
                self._items.pop(0)
                self.dropped += 1
            self._items.append(item)
            self._cond.notify()

    def get(self, timeout: float):
        with self._cond:
            if not self._items:
                self._cond.wait(timeout)
            if self._items:
                return self._items.pop(0)
            return None

    def finish(self) -> None:
        with self._cond:
            self._done = True
            self._cond.notify_all()

    @property
    def done(self) -> bool:
        with self._cond:
            return self._done and not self._items


def pull(
    url: str,
    duration_s: float = 10.0,
    keep_frames: bool = False,
    expect_silence_after_teardown: bool = False,
) -> PullStats:
    """Play a stream and measure compose-to-decode latency per frame."""
    stats = PullStats()
    client = RtspClient(url)
    client.connect()
    client.handshake()
    buffer = _BoundedFrameBuffer(capacity=4)

    def reader():
        for encoded, arrival_us in client.recv_frames(duration_s):
            stats.bytes_received += len(encoded.payload)
            buffer.put((encoded, arrival_us))
        buffer.finish()

    thread = threading.Thread(target=reader, daemon=True)
    start = time.monotonic()
    thread.start()
    frames = [] if keep_frames else None
    while not buffer.done:
        item = buffer.get(timeout=0.2)
        if item is None:
            continue
        encoded, arrival_us = item
        try:
            image = decode_frame(encoded)
            rgb = unpack_nv12(image)
            compose_ts = read_timestamp_strip(rgb)
        except (OnecastError, ValueError):
            stats.decode_errors += 1
            continue
        stats.frames += 1
        stats.width, stats.height = image.width, image.height
        stats.samples.append(
            LatencySample(encoded.frame_index, compose_ts, arrival_us)
        )
        if frames is not None:
            frames.append(rgb)
    thread.join(timeout=2.0)
    stats.duration_s = time.monotonic() - start
    stats.drops = client.assembler.frames_dropped + buffer.dropped
    client.teardown()
    if expect_silence_after_teardown:
        client.drain_rtp(0.5)  # flush anything already in flight
        residual = client.drain_rtp(0.5)
        if residual:
            raise ProtocolError(f"{residual} RTP packets after TEARDOWN")
    client.close()
    if frames is not None:
        stats.decoded_frames = frames
    return stats


def pull_subprocess(url: str, duration_s: float, timeout_s: float = 60.0) -> dict:
    """Run pull in its own interpreter so the decode loop does not share the
    GIL with the serving engine; returns the parsed JSON stats."""
    proc = subprocess.run(
        [
            sys.executable,
            "-m",
            "onecast.cli",
            "pull",
            url,
            "--duration",
            str(duration_s),
            "--json",
        ],
        capture_output=True,
        text=True,
        timeout=timeout_s,
    )
    if proc.returncode != 0:
        raise OnecastError(f"pull subprocess failed: {proc.stderr.strip()}")
    return json.loads(proc.stdout)


@dataclass
class BenchReport:
    source_count: int
    width: int
    height: int
    fps: float
    quant_step: int
    median_latency_ms: float
    p95_latency_ms: float
    drop_rate: float
    bitrate_bps: float

    def row(self) -> str:
        return (
            f"{self.source_count:>3}  {self.width}x{self.height}  "
            f"{self.median_latency_ms:8.1f}  {self.p95_latency_ms:8.1f}  "
            f"{100 * self.drop_rate:6.2f}%  {self.bitrate_bps / 1e6:8.3f} Mb/s"
        )


def bench_invariance(
    config: ServerConfig,
    source_counts=(1, 2, 4, 8),
    seconds: float = 10.0,
    maximize_first: bool = True,
) -> list[BenchReport]:
    """Serve with N pattern sources for each N and measure with pull.

    With maximize_first the director pins the first feed fullscreen, so the
    composed canvas is content-identical across N (the premise behind the
    bitrate-invariance comparison); the other N-1 sources stay attached.
    """
    reports = []
    for count in source_counts:
        run_config = replace(
            config,
            rtsp_port=0,
            http_port=0,
            ws_port=0,
            sources=[
                {
                    "name": f"bench{i}",
                    "kind": "pattern",
                    "width": 320,
                    "height": 176,
                    "fps": config.fps,
                }
                for i in range(count)
            ],
        )
        service = Service(run_config, quiet=True)
        service.start()
        try:
            if maximize_first:
                service.compositor.maximize(0)
            service.wait_first_tick()
            stats = pull_subprocess(
                service.rtsp_url, seconds, timeout_s=seconds + 30
            )
        finally:
            service.stop()
        reports.append(
            BenchReport(
                source_count=count,
                width=stats["width"],
                height=stats["height"],
                fps=config.fps,
                quant_step=config.quant_step,
                median_latency_ms=stats["median_latency_ms"],
                p95_latency_ms=stats["p95_latency_ms"],
                drop_rate=stats["drop_rate"],
                bitrate_bps=stats["bitrate_bps"],
            )
        )
    return reports


def baseline_demo(
    producer_fps: float = 30.0,
    consumer_fps: float = 20.0,
    duration_s: float = 10.0,
    frame_bytes: int = 1024,
) -> dict:
    """Length-prefixed framing over a real TCP pair with a paced consumer.

    The consumer drains exactly one packet per tick from its reassembly
    queue; whenever the producer is faster, the queue grows without bound.
    Returns the depth trace and its growth slope in frames per second.
    """
    listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    listener.bind(("127.0.0.1", 0))
    listener.listen(1)
    port = listener.getsockname()[1]

    payload = bytes(frame_bytes)
    sent = 0

    def producer():
        nonlocal sent
        sock = socket.create_connection(("127.0.0.1", port))
        period = 1.0 / producer_fps
        next_send = time.monotonic()
        deadline = next_send + duration_s
        try:
            while time.monotonic() < deadline:
                sock.sendall(pack(payload))
                sent += 1
                next_send += period
                delay = next_send - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
        finally:
            sock.close()

    thread = threading.Thread(target=producer, daemon=True)
    thread.start()
    conn, _ = listener.accept()
    conn.setblocking(False)

    buffer = ReassemblyBuffer()
    queue: list[bytes] = []
    depths = []
    period = 1.0 / consumer_fps
    next_tick = time.monotonic()
    deadline = next_tick + duration_s
    while time.monotonic() < deadline:
        try:
            while True:
                chunk = conn.recv(65536)
                if not chunk:
                    break
                queue.extend(buffer.unpack(chunk))
        except BlockingIOError:
            pass
        if queue:
            queue.pop(0)  # consume exactly one frame per tick
        depths.append(len(queue))
        next_tick += period
        delay = next_tick - time.monotonic()
        if delay > 0:
            time.sleep(delay)
    conn.close()
    listener.close()
    thread.join(timeout=2.0)

    times = np.arange(len(depths)) * period
    slope = float(np.polyfit(times, depths, 1)[0]) if len(depths) > 2 else 0.0
    return {
        "producer_fps": producer_fps,
        "consumer_fps": consumer_fps,
        "duration_s": duration_s,
        "frames_sent": sent,
        "final_depth": depths[-1] if depths else 0,
        "max_depth": max(depths) if depths else 0,
        "slope_frames_per_s": slope,
        "unbounded_growth": slope > 0.5,
        "depths": depths,
    }
