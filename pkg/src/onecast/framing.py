"""Length-prefixed TCP framing kept as the baseline transport.

Wire format: a 4-byte big-endian unsigned payload length, then the payload.
The stream unpacker carries an incomplete tail between reads, mirroring the
classic buffer-queue client. This path exists to demonstrate the cumulative
delay of queue-based grouping; the production stream never uses it.
"""

from __future__ import annotations

import struct

from .errors import FramingError

HEADER_LEN = 4
MAX_FRAME = 16 * 1024 * 1024  # unguarded headers would allow memory exhaustion

_HEADER = struct.Struct(">I")


def pack(payload: bytes) -> bytes:
    """Prefix a payload with its 4-byte big-endian length."""
    if len(payload) >= 2**31:
        raise FramingError(f"payload of {len(payload)} bytes exceeds framing limit")
    return _HEADER.pack(len(payload)) + payload


class ReassemblyBuffer:
    """Accumulates stream chunks and yields complete payloads in order."""

    def __init__(self, max_frame: int = MAX_FRAME):
        self.max_frame = max_frame
        self.residue = b""

    def unpack(self, chunk: bytes) -> list[bytes]:
        """Append a chunk and extract every complete packet.

        Chunks may split headers and payloads at any byte boundary; the
        incomplete tail is retained for the next call.
        """
        data = self.residue + chunk
        out = []
        pos = 0
        while len(data) - pos >= HEADER_LEN:
            (length,) = _HEADER.unpack_from(data, pos)
            if length > self.max_frame:
                raise FramingError(
                    f"frame of {length} bytes exceeds limit {self.max_frame}; "
                    "stream considered corrupt"
                )
            if len(data) - pos - HEADER_LEN < length:
                break
            pos += HEADER_LEN
            out.append(data[pos : pos + length])
            pos += length
        self.residue = data[pos:]
        return out


def queue_depth_trace(
    producer_fps: float, consumer_fps: float, duration_s: float
) -> list[int]:
    """Simulate a buffer queue: enqueue at the producer rate, dequeue one
    packet per consumer tick. Returns the queue depth sampled after every
    event, demonstrating unbounded growth whenever producer > consumer."""
    if producer_fps <= 0 or consumer_fps <= 0:
        raise ValueError("rates must be positive")
    events = []
    n_produce = int(producer_fps * duration_s)
    n_consume = int(consumer_fps * duration_s)
    events += [(i / producer_fps, 1) for i in range(n_produce)]
    events += [(i / consumer_fps, -1) for i in range(n_consume)]
    # Consumption at an equal timestamp happens after production.
    events.sort(key=lambda e: (e[0], -e[1]))
    depth = 0
    trace = []
    for _, delta in events:
        if delta > 0:
            depth += 1
        elif depth > 0:
            depth -= 1
        trace.append(depth)
    return trace
