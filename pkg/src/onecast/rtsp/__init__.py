from .client import RtspClient
from .messages import (
    RtspMessage,
    build_request,
    build_response,
    build_sdp,
    parse_request,
    parse_response,
    parse_rtsp_url,
    parse_sdp,
)
from .rtp import (
    FrameAssembler,
    RtpPacket,
    allocate_udp_pair,
    packetize,
    parse_sender_report,
    rtcp_sender_report,
)
from .server import RtspServer, StreamSession

__all__ = [
    "FrameAssembler",
    "RtpPacket",
    "RtspClient",
    "RtspMessage",
    "RtspServer",
    "StreamSession",
    "allocate_udp_pair",
    "build_request",
    "build_response",
    "build_sdp",
    "packetize",
    "parse_request",
    "parse_response",
    "parse_rtsp_url",
    "parse_sdp",
    "parse_sender_report",
    "rtcp_sender_report",
]
