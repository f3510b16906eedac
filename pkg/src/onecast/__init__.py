"""onecast: a single-channel, multi-source live streaming engine.

N synthetic video sources are composited onto one fixed-size render target,
encoded with a blockwise DCT intra codec, and served over a from-scratch
RTSP/RTP stack; a WebSocket/HTTP signaling backend coordinates users. The
output stream's size and latency are invariant in the number of sources.
"""

from .codec import EncodedFrame, decode_frame, encode_frame
from .color import Nv12Image, pack_nv12, unpack_nv12
from .compositor import CanvasConfig, Compositor, LayoutState
from .config import ServerConfig, load_config
from .harness import (
    BenchReport,
    LatencySample,
    PullStats,
    Service,
    baseline_demo,
    bench_invariance,
    pull,
    serve,
)
from .sources import Frame, SourceDescriptor, enumerate_sources, open_source

__version__ = "0.1.0"

__all__ = [
    "BenchReport",
    "CanvasConfig",
    "Compositor",
    "EncodedFrame",
    "Frame",
    "LatencySample",
    "LayoutState",
    "Nv12Image",
    "PullStats",
    "ServerConfig",
    "Service",
    "SourceDescriptor",
    "baseline_demo",
    "bench_invariance",
    "decode_frame",
    "encode_frame",
    "enumerate_sources",
    "load_config",
    "open_source",
    "pack_nv12",
    "pull",
    "serve",
    "unpack_nv12",
    "__version__",
]
