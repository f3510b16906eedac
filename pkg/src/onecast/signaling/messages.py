"""The nine-key JSON signal message driving heartbeat and call flow.

Every frame on the signaling socket is a JSON object with exactly these
keys, all values text: HeartBeat, ResponseCode, UserState, Calling, Called,
CallResult, CallerUUID, CalleeUUID, StreamAddress. Booleans are "true" or
"false"; ResponseCode carries an HTTP-style status code.
"""

from __future__ import annotations

import json

from ..errors import ProtocolError

MESSAGE_KEYS = (
    "HeartBeat",
    "ResponseCode",
    "UserState",
    "Calling",
    "Called",
    "CallResult",
    "CallerUUID",
    "CalleeUUID",
    "StreamAddress",
)

USER_STATES = ("Online", "Chatting", "Offline", "Pushing")
CALL_RESULTS = ("Accepted", "Rejected", "StandStill")
_BOOL_KEYS = ("HeartBeat", "Calling", "Called")


def make_message(**overrides) -> dict:
    """A fully populated message with neutral defaults."""
    msg = {
        "HeartBeat": "false",
        "ResponseCode": "0",
        "UserState": "Online",
        "Calling": "false",
        "Called": "false",
        "CallResult": "StandStill",
        "CallerUUID": "",
        "CalleeUUID": "",
        "StreamAddress": "",
    }
    for key, value in overrides.items():
        if key not in msg:
            raise KeyError(f"unknown signal key {key!r}")
        msg[key] = str(value)
    return msg


def parse_message(text: str) -> dict:
    """Parse and validate one frame; raises ProtocolError on any violation."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"not JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ProtocolError("signal message must be a JSON object")
    if set(obj) != set(MESSAGE_KEYS):
        missing = set(MESSAGE_KEYS) - set(obj)
        extra = set(obj) - set(MESSAGE_KEYS)
        raise ProtocolError(
            f"message keys mismatch (missing {sorted(missing)}, extra {sorted(extra)})"
        )
    msg = {k: str(obj[k]) for k in MESSAGE_KEYS}
    for key in _BOOL_KEYS:
        if msg[key] not in ("true", "false"):
            raise ProtocolError(f"{key} must be 'true' or 'false', got {msg[key]!r}")
    if msg["UserState"] not in USER_STATES:
        raise ProtocolError(f"unknown UserState {msg['UserState']!r}")
    if msg["CallResult"] not in CALL_RESULTS:
        raise ProtocolError(f"unknown CallResult {msg['CallResult']!r}")
    return msg


def dump_message(msg: dict) -> str:
    return json.dumps({k: msg[k] for k in MESSAGE_KEYS})


def is_true(value: str) -> bool:
    return value == "true"
