"""RTP packetization of encoded frames, reassembly, and RTCP sender reports.

Each RTP packet is the 12-byte RFC 3550 header followed by a 4-byte
big-endian fragment byte-offset and up to MTU_PAYLOAD bytes of the serialized
frame container. All fragments of one frame share the frame's 90 kHz
timestamp; the marker bit is set only on the final fragment.
"""

from __future__ import annotations

import socket
import struct
from dataclasses import dataclass

from ..codec import EncodedFrame
from ..errors import ProtocolError
from .messages import PAYLOAD_TYPE, RTP_CLOCK

MTU_PAYLOAD = 1400
_RTP_HEADER = struct.Struct(">BBHII")
_FRAG_OFFSET = struct.Struct(">I")
_NTP_EPOCH_OFFSET = 2208988800  # seconds between 1900 and 1970


@dataclass
class RtpPacket:
    sequence: int
    timestamp: int
    ssrc: int
    payload: bytes
    marker: bool = False
    payload_type: int = PAYLOAD_TYPE
    version: int = 2

    def to_bytes(self) -> bytes:
        b0 = self.version << 6
        b1 = (0x80 if self.marker else 0) | self.payload_type
        return (
            _RTP_HEADER.pack(b0, b1, self.sequence, self.timestamp, self.ssrc)
            + self.payload
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "RtpPacket":
        if len(data) < _RTP_HEADER.size:
            raise ProtocolError(f"RTP packet of {len(data)} bytes is too short")
        b0, b1, seq, ts, ssrc = _RTP_HEADER.unpack_from(data)
        version = b0 >> 6
        if version != 2:
            raise ProtocolError(f"unsupported RTP version {version}")
        return cls(
            sequence=seq,
            timestamp=ts,
            ssrc=ssrc,
            payload=data[_RTP_HEADER.size :],
            marker=bool(b1 & 0x80),
            payload_type=b1 & 0x7F,
        )


def frame_timestamp(frame_index: int, fps: float) -> int:
    return int(frame_index * RTP_CLOCK / fps) & 0xFFFFFFFF


def packetize(
    frame: EncodedFrame, fps: float, ssrc: int, seq_start: int
) -> tuple[list[RtpPacket], int]:
    """Fragment one serialized frame; returns (packets, next sequence)."""
    blob = frame.to_bytes()
    ts = frame_timestamp(frame.frame_index, fps)
    packets = []
    seq = seq_start
    for off in range(0, len(blob), MTU_PAYLOAD):
        chunk = blob[off : off + MTU_PAYLOAD]
        packets.append(
            RtpPacket(
                sequence=seq & 0xFFFF,
                timestamp=ts,
                ssrc=ssrc,
                payload=_FRAG_OFFSET.pack(off) + chunk,
                marker=off + len(chunk) >= len(blob),
            )
        )
        seq = (seq + 1) & 0xFFFF
    return packets, seq


class FrameAssembler:
    """Reorders fragments by their byte offsets and emits complete frames.

    Incomplete frames are abandoned (and counted as drops) once a newer
    frame completes, mirroring the replace-with-subsequent-frames policy.
    """

    MAX_PENDING = 8

    def __init__(self):
        self._pending: dict[int, dict] = {}  # timestamp -> fragment state
        self._order: list[int] = []
        self.frames_dropped = 0
        self.frames_completed = 0

    def feed(self, packet: RtpPacket) -> list[EncodedFrame]:
        ts = packet.timestamp
        if len(packet.payload) < _FRAG_OFFSET.size:
            raise ProtocolError("fragment shorter than its offset header")
        (offset,) = _FRAG_OFFSET.unpack_from(packet.payload)
        chunk = packet.payload[_FRAG_OFFSET.size :]
        state = self._pending.get(ts)
        if state is None:
            state = self._pending[ts] = {"frags": {}, "total": None}
            self._order.append(ts)
        state["frags"][offset] = chunk
        if packet.marker:
            state["total"] = offset + len(chunk)

        out = []
        if self._complete(state):
            frame_bytes = b"".join(
                state["frags"][off] for off in sorted(state["frags"])
            )
            out.append(EncodedFrame.from_bytes(frame_bytes))
            self.frames_completed += 1
            # Everything older than the completed frame is now a drop.
            index = self._order.index(ts)
            self.frames_dropped += index
            for old in self._order[:index]:
                del self._pending[old]
            del self._pending[ts]
            self._order = self._order[index + 1 :]
        elif len(self._order) > self.MAX_PENDING:
            oldest = self._order.pop(0)
            del self._pending[oldest]
            self.frames_dropped += 1
        return out

    @staticmethod
    def _complete(state) -> bool:
        if state["total"] is None:
            return False
        pos = 0
        for off in sorted(state["frags"]):
            if off != pos:
                return False
            pos = off + len(state["frags"][off])
        return pos == state["total"]


def rtcp_sender_report(
    ssrc: int, now_us: int, rtp_timestamp: int, packet_count: int, octet_count: int
) -> bytes:
    """Minimal RTCP SR: NTP-style wallclock, RTP timestamp, and counters."""
    ntp_sec = now_us // 1_000_000 + _NTP_EPOCH_OFFSET
    ntp_frac = ((now_us % 1_000_000) << 32) // 1_000_000
    return struct.pack(
        ">BBHIIIIII",
        0x80,  # V=2, no padding, no report blocks
        200,  # PT=SR
        6,  # length in 32-bit words minus one
        ssrc,
        ntp_sec & 0xFFFFFFFF,
        ntp_frac & 0xFFFFFFFF,
        rtp_timestamp & 0xFFFFFFFF,
        packet_count & 0xFFFFFFFF,
        octet_count & 0xFFFFFFFF,
    )


def parse_sender_report(data: bytes) -> dict:
    if len(data) < 28:
        raise ProtocolError("RTCP SR too short")
    (b0, pt, length, ssrc, ntp_sec, ntp_frac, rtp_ts, pkts, octets) = struct.unpack(
        ">BBHIIIIII", data[:28]
    )
    if pt != 200:
        raise ProtocolError(f"not a sender report (PT={pt})")
    return {
        "ssrc": ssrc,
        "ntp_sec": ntp_sec,
        "ntp_frac": ntp_frac,
        "rtp_timestamp": rtp_ts,
        "packet_count": pkts,
        "octet_count": octets,
    }


def allocate_udp_pair(host: str = "") -> tuple[socket.socket, socket.socket, int]:
    """Bind an (even RTP, odd RTCP) UDP port pair; returns (rtp, rtcp, port)."""
    for _ in range(64):
        probe = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        probe.bind((host, 0))
        port = probe.getsockname()[1]
        if port % 2:
            base = port + 1
            probe.close()
            probe = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
            try:
                probe.bind((host, base))
            except OSError:
                probe.close()
                continue
        else:
            base = port
        rtcp = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        try:
            rtcp.bind((host, base + 1))
        except OSError:
            rtcp.close()
            probe.close()
            continue
        return probe, rtcp, base
    raise OSError("could not allocate an even/odd UDP port pair")
