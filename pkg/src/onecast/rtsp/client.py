"""RTSP pull client: six-stage handshake plus RTP reception."""

from __future__ import annotations

import socket
import time

from ..errors import ProtocolError
from .messages import (
    RtspMessage,
    build_request,
    parse_response,
    parse_rtsp_url,
    parse_sdp,
)
from .rtp import FrameAssembler, RtpPacket, allocate_udp_pair


class RtspClient:
    """Scripted control-channel client for one stream.

    Tracks the stage sequence it has performed so tests can assert protocol
    order (for example that failed authentication never reaches SETUP).
    """

    def __init__(self, url: str, timeout: float = 5.0):
        self.url = parse_rtsp_url(url)
        self.timeout = timeout
        self._cseq = 0
        self._sock: socket.socket | None = None
        self._buffer = b""
        self.session_id: str | None = None
        self.rtp_socket = None
        self.rtcp_socket = None
        self.rtp_port = None
        self.sdp: dict | None = None
        self.stages: list[str] = []
        self.assembler = FrameAssembler()

    # --- control channel ----------------------------------------------------

    def connect(self) -> None:
        self._sock = socket.create_connection(
            (self.url.host, self.url.port), timeout=self.timeout
        )

    def close(self) -> None:
        if self._sock:
            self._sock.close()
            self._sock = None
        for sock in (self.rtp_socket, self.rtcp_socket):
            if sock:
                sock.close()
        self.rtp_socket = self.rtcp_socket = None

    def _base_uri(self, with_credentials: bool) -> str:
        auth = ""
        if with_credentials and self.url.username is not None:
            auth = f"{self.url.credentials}@"
        return f"rtsp://{auth}{self.url.host}:{self.url.port}{self.url.path}"

    def request(
        self, method: str, headers=None, with_credentials: bool = False
    ) -> RtspMessage:
        if self._sock is None:
            self.connect()
        self._cseq += 1
        msg = build_request(
            method, self._base_uri(with_credentials), self._cseq, headers
        )
        self.stages.append(method)
        self._sock.sendall(msg.to_bytes())
        return self._read_response()

    def _read_response(self) -> RtspMessage:
        while b"\r\n\r\n" not in self._buffer:
            chunk = self._sock.recv(65536)
            if not chunk:
                raise ProtocolError("connection closed mid-response")
            self._buffer += chunk
        head, _, rest = self._buffer.partition(b"\r\n\r\n")
        response = parse_response(head + b"\r\n\r\n")
        length = int(response.header("Content-Length", "0") or 0)
        while len(rest) < length:
            chunk = self._sock.recv(65536)
            if not chunk:
                raise ProtocolError("connection closed mid-body")
            rest += chunk
        response.body, self._buffer = rest[:length], rest[length:]
        if response.cseq is not None and response.cseq != self._cseq:
            raise ProtocolError(
                f"response CSeq {response.cseq} does not echo request {self._cseq}"
            )
        return response

    # --- six stages ---------------------------------------------------------

    def options(self) -> RtspMessage:
        return self.request("OPTIONS")

    def describe(self, with_credentials: bool = True) -> RtspMessage:
        response = self.request("DESCRIBE", with_credentials=with_credentials)
        if response.status_code == 200:
            self.sdp = parse_sdp(response.body.decode())
        return response

    def setup(self) -> RtspMessage:
        self.rtp_socket, self.rtcp_socket, self.rtp_port = allocate_udp_pair()
        self.rtp_socket.settimeout(0.5)
        transport = (
            f"RTP/AVP;unicast;client_port={self.rtp_port}-{self.rtp_port + 1}"
        )
        response = self.request("SETUP", {"Transport": transport})
        if response.status_code == 200:
            self.session_id = response.header("Session")
        return response

    def play(self) -> RtspMessage:
        return self.request("PLAY", {"Session": self.session_id})

    def pause(self) -> RtspMessage:
        return self.request("PAUSE", {"Session": self.session_id})

    def get_parameter(self) -> RtspMessage:
        return self.request("GET_PARAMETER", {"Session": self.session_id})

    def teardown(self) -> RtspMessage:
        return self.request("TEARDOWN", {"Session": self.session_id})

    def handshake(self) -> None:
        """Full six-stage start: OPTIONS, DESCRIBE (expecting the 401 then
        authenticating), SETUP, PLAY. Raises ProtocolError on any failure."""
        response = self.options()
        if response.status_code != 200:
            raise ProtocolError(f"OPTIONS failed with {response.status_code}")
        first = self.describe(with_credentials=False)
        if first.status_code == 401:
            second = self.describe(with_credentials=True)
            if second.status_code != 200:
                raise ProtocolError(
                    f"DESCRIBE rejected ({second.status_code}); check credentials"
                )
        elif first.status_code != 200:
            raise ProtocolError(f"DESCRIBE failed with {first.status_code}")
        if self.setup().status_code != 200:
            raise ProtocolError("SETUP failed")
        if self.play().status_code != 200:
            raise ProtocolError("PLAY failed")

    # --- media channel ------------------------------------------------------

    def recv_frames(self, duration_s: float):
        """Yield (EncodedFrame, arrival_us) for the given wall-clock window."""
        deadline = time.monotonic() + duration_s
        while time.monotonic() < deadline:
            try:
                data, _ = self.rtp_socket.recvfrom(65536)
            except socket.timeout:
                continue
            except OSError:
                return
            try:
                packet = RtpPacket.from_bytes(data)
            except ProtocolError:
                continue
            for frame in self.assembler.feed(packet):
                yield frame, time.time_ns() // 1000

    def drain_rtp(self, duration_s: float) -> int:
        """Count RTP packets arriving within a window (teardown silence check)."""
        count = 0
        deadline = time.monotonic() + duration_s
        while time.monotonic() < deadline:
            try:
                self.rtp_socket.recvfrom(65536)
                count += 1
            except socket.timeout:
                continue
            except OSError:
                break
        return count
