import random

import pytest

from onecast.errors import FramingError
from onecast.framing import ReassemblyBuffer, pack, queue_depth_trace


class TestPack:
    def test_empty_payload(self):
        assert pack(b"") == b"\x00\x00\x00\x00"

    def test_hello(self):
        assert pack(b"hello") == b"\x00\x00\x00\x05hello"

    def test_header_is_big_endian_regardless_of_host(self):
        assert pack(b"x" * 0x0102)[:4] == b"\x00\x00\x01\x02"


class TestUnpack:
    def test_two_packets_in_one_chunk(self):
        buf = ReassemblyBuffer()
        assert buf.unpack(pack(b"aa") + pack(b"bbb")) == [b"aa", b"bbb"]
        assert buf.residue == b""

    def test_byte_by_byte_delivery(self):
        buf = ReassemblyBuffer()
        wire = pack(b"hello")
        got = []
        for i, b in enumerate(wire):
            got += buf.unpack(bytes([b]))
            if i < len(wire) - 1:
                assert got == []
        assert got == [b"hello"]

    def test_incomplete_header_retained(self):
        buf = ReassemblyBuffer()
        assert buf.unpack(b"\x00\x00\x00") == []
        assert len(buf.residue) == 3

    def test_oversized_header_rejected(self):
        buf = ReassemblyBuffer(max_frame=1024)
        with pytest.raises(FramingError):
            buf.unpack(b"\xff\xff\xff\xff")

    def test_roundtrip_under_random_chunking(self):
        rng = random.Random(17)
        for _ in range(50):
            payloads = [
                rng.randbytes(rng.randrange(0, 200)) for _ in range(rng.randrange(1, 8))
            ]
            wire = b"".join(pack(p) for p in payloads)
            buf = ReassemblyBuffer()
            got = []
            pos = 0
            while pos < len(wire):
                step = rng.randrange(1, 17)
                got += buf.unpack(wire[pos : pos + step])
                pos += step
            assert got == payloads
            assert buf.residue == b""


class TestQueueDepthTrace:
    def test_balanced_rates_stay_bounded(self):
        trace = queue_depth_trace(30, 30, 10)
        assert max(trace) <= 1

    def test_overloaded_consumer_accumulates(self):
        trace = queue_depth_trace(30, 20, 10)
        assert trace[-1] == pytest.approx(100, abs=5)
        # Monotone trend: each second's mean depth is above the previous.
        chunk = len(trace) // 10
        means = [
            sum(trace[i * chunk : (i + 1) * chunk]) / chunk for i in range(10)
        ]
        assert all(b > a for a, b in zip(means, means[1:]))

    def test_fast_consumer_drains(self):
        trace = queue_depth_trace(20, 30, 10)
        assert trace.count(0) > len(trace) // 4

    def test_unbounded_growth_with_longer_duration(self):
        short = queue_depth_trace(30, 20, 5)[-1]
        long = queue_depth_trace(30, 20, 20)[-1]
        assert long > 2 * short

    def test_bad_rates_rejected(self):
        with pytest.raises(ValueError):
            queue_depth_trace(0, 30, 1)
