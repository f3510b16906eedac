"""Serve four pattern sources and pull the stream for a few seconds,
printing the measured compose-to-decode latency distribution."""

import tempfile

from onecast.config import ServerConfig
from onecast.harness import Service, pull

with tempfile.TemporaryDirectory() as workdir:
    config = ServerConfig(
        host="127.0.0.1",
        http_port=0,
        ws_port=0,
        rtsp_port=0,
        credentials="demo:demo",
        width=640,
        height=352,
        fps=30,
        quant_step=16,
        store_dir=f"{workdir}/store",
        static_dir=f"{workdir}/static",
        sources=[
            {"name": f"cam{i}", "kind": "pattern", "width": 320, "height": 176, "fps": 30}
            for i in range(4)
        ],
    )
    service = Service(config, quiet=False)
    service.start()
    try:
        service.wait_first_tick()
        print("\npulling for 4 seconds...")
        stats = pull(service.rtsp_url, duration_s=4.0)
    finally:
        service.stop()

print(f"\nframes decoded : {stats.frames}")
print(f"frames dropped : {stats.drops} ({100 * stats.drop_rate:.2f}%)")
print(f"median latency : {stats.median_latency_ms:.1f} ms")
print(f"p95 latency    : {stats.p95_latency_ms:.1f} ms")
print(f"bitrate        : {stats.bitrate_bps / 1e6:.3f} Mb/s")
print("\nfirst five samples (frame, compose us, arrival us, latency ms):")
for sample in stats.samples[:5]:
    print(
        f"  {sample.frame_index:5d}  {sample.compose_ts_us}  "
        f"{sample.arrival_ts_us}  {sample.latency_us / 1000:7.1f}"
    )
