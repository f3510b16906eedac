from .http_api import ApiContext, HttpApi, encode_bmp, random_name
from .messages import (
    CALL_RESULTS,
    MESSAGE_KEYS,
    USER_STATES,
    dump_message,
    is_true,
    make_message,
    parse_message,
)
from .server import SignalingServer
from .store import AppendStore, KvCache, TABLE_SCHEMAS
from .ws import WsConnection, client_connect, server_handshake

__all__ = [
    "ApiContext",
    "AppendStore",
    "CALL_RESULTS",
    "HttpApi",
    "KvCache",
    "MESSAGE_KEYS",
    "SignalingServer",
    "TABLE_SCHEMAS",
    "USER_STATES",
    "WsConnection",
    "client_connect",
    "dump_message",
    "encode_bmp",
    "is_true",
    "make_message",
    "parse_message",
    "random_name",
    "server_handshake",
]
