"""RTSP/1.0 message parsing and serialization, plus the SDP description.

Requests are "METHOD URI RTSP/1.0" followed by headers, every line
CRLF-terminated, the block closed by an empty line; responses swap the first
line for "RTSP/1.0 <code> <reason>". Header names are case-insensitive.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from urllib.parse import urlparse

from ..errors import ProtocolError

VERSION = "RTSP/1.0"

STATUS_REASONS = {
    200: "OK",
    400: "Bad Request",
    401: "Unauthorized",
    404: "Not Found",
    405: "Method Not Allowed",
    454: "Session Not Found",
}

KNOWN_METHODS = (
    "OPTIONS",
    "DESCRIBE",
    "SETUP",
    "PLAY",
    "PAUSE",
    "TEARDOWN",
    "GET_PARAMETER",
    "SET_PARAMETER",
)


@dataclass
class RtspMessage:
    kind: str  # "request" or "response"
    version: str = VERSION
    method: str | None = None
    uri: str | None = None
    status_code: int | None = None
    reason: str | None = None
    headers: dict = field(default_factory=dict)  # original-case names, in order
    body: bytes = b""

    def header(self, name: str, default=None):
        lowered = name.lower()
        for key, value in self.headers.items():
            if key.lower() == lowered:
                return value
        return default

    @property
    def cseq(self) -> int | None:
        raw = self.header("CSeq")
        try:
            return int(raw.strip()) if raw is not None else None
        except ValueError:
            return None

    def to_bytes(self) -> bytes:
        if self.kind == "request":
            first = f"{self.method} {self.uri} {self.version}"
        else:
            first = f"{self.version} {self.status_code} {self.reason}"
        headers = dict(self.headers)
        if self.body and not self.header("Content-Length"):
            headers["Content-Length"] = str(len(self.body))
        lines = [first] + [f"{k}: {v}" for k, v in headers.items()]
        return ("\r\n".join(lines) + "\r\n\r\n").encode("utf-8") + self.body


def _parse_headers(lines) -> dict:
    headers = {}
    for line in lines:
        if not line:
            continue
        name, sep, value = line.partition(":")
        if not sep or not name.strip():
            raise ProtocolError(f"malformed header line {line!r}")
        headers[name.strip()] = value.strip()
    return headers


def parse_request(data: bytes) -> RtspMessage:
    """Parse a complete request head (plus any body already read)."""
    head, _, body = data.partition(b"\r\n\r\n")
    try:
        text = head.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ProtocolError(f"request is not valid UTF-8: {exc}") from None
    lines = text.split("\r\n")
    parts = lines[0].split(" ")
    if len(parts) != 3 or not parts[0] or not parts[1].strip():
        raise ProtocolError(f"malformed request line {lines[0]!r}")
    method, uri, version = parts
    if not version.startswith("RTSP/"):
        raise ProtocolError(f"not an RTSP version: {version!r}")
    return RtspMessage(
        kind="request",
        method=method.upper(),
        uri=uri,
        version=version,
        headers=_parse_headers(lines[1:]),
        body=body,
    )


def parse_response(data: bytes) -> RtspMessage:
    head, _, body = data.partition(b"\r\n\r\n")
    lines = head.decode("utf-8", "replace").split("\r\n")
    parts = lines[0].split(" ", 2)
    if len(parts) < 2 or not parts[0].startswith("RTSP/"):
        raise ProtocolError(f"malformed response line {lines[0]!r}")
    try:
        code = int(parts[1])
    except ValueError:
        raise ProtocolError(f"bad status code in {lines[0]!r}") from None
    return RtspMessage(
        kind="response",
        version=parts[0],
        status_code=code,
        reason=parts[2] if len(parts) > 2 else "",
        headers=_parse_headers(lines[1:]),
        body=body,
    )


def build_response(status: int, cseq=None, headers=None, body: bytes = b"") -> RtspMessage:
    msg = RtspMessage(
        kind="response",
        status_code=status,
        reason=STATUS_REASONS.get(status, "Unknown"),
        body=body,
    )
    if cseq is not None:
        msg.headers["CSeq"] = str(cseq)
    if headers:
        msg.headers.update(headers)
    return msg


def build_request(method: str, uri: str, cseq: int, headers=None) -> RtspMessage:
    msg = RtspMessage(kind="request", method=method, uri=uri)
    msg.headers["CSeq"] = str(cseq)
    if headers:
        msg.headers.update(headers)
    return msg


@dataclass(frozen=True)
class RtspUrl:
    host: str
    port: int
    path: str
    username: str | None
    password: str | None

    @property
    def credentials(self) -> str | None:
        if self.username is None:
            return None
        return f"{self.username}:{self.password or ''}"


def parse_rtsp_url(uri: str) -> RtspUrl:
    parsed = urlparse(uri)
    if parsed.scheme not in ("rtsp", ""):
        raise ProtocolError(f"not an rtsp URL: {uri!r}")
    if not parsed.hostname:
        raise ProtocolError(f"URL has no host: {uri!r}")
    return RtspUrl(
        host=parsed.hostname,
        port=parsed.port or 554,
        path=parsed.path or "/",
        username=parsed.username,
        password=parsed.password,
    )


# --- SDP --------------------------------------------------------------------

PAYLOAD_TYPE = 96
RTP_CLOCK = 90000
CODEC_NAME = "ONECAST-DCT"


def build_sdp(host: str, width: int, height: int, fps: float, step: int) -> str:
    lines = [
        "v=0",
        f"o=- 0 1 IN IP4 {host}",
        "s=onecast live",
        "c=IN IP4 0.0.0.0",
        "t=0 0",
        f"m=video 0 RTP/AVP {PAYLOAD_TYPE}",
        f"a=rtpmap:{PAYLOAD_TYPE} {CODEC_NAME}/{RTP_CLOCK}",
        f"a=framerate:{fps:g}",
        f"a=x-dimensions:{width},{height}",
        f"a=x-quant-step:{step}",
        "a=control:trackID=0",
    ]
    return "\r\n".join(lines) + "\r\n"


def parse_sdp(text: str) -> dict:
    """Light RFC 4566 line parser: returns session keys, media descriptions,
    and attributes. Raises ProtocolError on lines outside the grammar."""
    session: dict = {"media": [], "attributes": {}}
    current = session
    for raw in text.replace("\r\n", "\n").split("\n"):
        if not raw:
            continue
        if len(raw) < 2 or raw[1] != "=":
            raise ProtocolError(f"not an SDP line: {raw!r}")
        key, value = raw[0], raw[2:]
        if key == "m":
            parts = value.split()
            if len(parts) < 4:
                raise ProtocolError(f"malformed media line: {raw!r}")
            current = {
                "type": parts[0],
                "port": int(parts[1]),
                "protocol": parts[2],
                "formats": parts[3:],
                "attributes": {},
            }
            session["media"].append(current)
        elif key == "a":
            name, _, val = value.partition(":")
            current["attributes"][name] = val
        else:
            session[key] = value
    return session
