"""INI configuration for the serving stack.

Sections:

    [server]  host, http_port, ws_port, rtsp_port, credentials (user:pass),
              call_timeout_s, heartbeat_interval_s, store_dir, static_dir
    [canvas]  width, height, fps, quant_step, gamma_correct,
              sample_hidden_pages
    [sources] one entry per source:  <name> = <kind> <W>x<H> @<fps>
              [virtual] [loop=false] [path=<file>]

Example source lines:

    cam-a = pattern 320x176 @30
    clip  = file 640x480 @30 path=clips/demo.rvf loop=false
    ghost = pattern 320x176 @30 virtual
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

_SIZE_RE = re.compile(r"^(\d+)x(\d+)$")


@dataclass
class ServerConfig:
    host: str = "0.0.0.0"
    http_port: int = 8080
    ws_port: int = 8383
    rtsp_port: int = 8554
    credentials: str = "admin:admin"
    call_timeout_s: float = 15.0
    heartbeat_interval_s: float = 1.0
    store_dir: str = "onecast-data/store"
    static_dir: str = "onecast-data/static"
    width: int = 1920
    height: int = 1080
    fps: float = 30.0
    quant_step: int = 16
    gamma_correct: bool = True
    sample_hidden_pages: bool = False
    sources: list = field(default_factory=list)

    def __post_init__(self):
        if ":" not in self.credentials or not self.credentials.split(":", 1)[0]:
            raise ConfigError(
                f"credentials must be user:pass, got {self.credentials!r}"
            )
        if self.quant_step < 1:
            raise ConfigError("quant_step must be >= 1")
        if self.fps <= 0:
            raise ConfigError("fps must be positive")


def _parse_source_line(name: str, value: str) -> dict:
    tokens = value.split()
    if len(tokens) < 3:
        raise ConfigError(
            f"source {name!r}: expected '<kind> <W>x<H> @<fps> [options]', got {value!r}"
        )
    kind = tokens[0]
    size = _SIZE_RE.match(tokens[1])
    if not size:
        raise ConfigError(f"source {name!r}: bad size {tokens[1]!r}")
    if not tokens[2].startswith("@"):
        raise ConfigError(f"source {name!r}: expected @fps, got {tokens[2]!r}")
    entry = {
        "name": name,
        "kind": kind,
        "width": int(size.group(1)),
        "height": int(size.group(2)),
        "fps": float(tokens[2][1:]),
    }
    for token in tokens[3:]:
        if token == "virtual":
            entry["virtual"] = True
        elif token.startswith("loop="):
            entry["loop"] = token[5:].lower() not in ("false", "0", "no")
        elif token.startswith("path="):
            entry["path"] = token[5:]
        else:
            raise ConfigError(f"source {name!r}: unknown option {token!r}")
    return entry


def load_config(path) -> ServerConfig:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file {path!r} not found")

    kwargs = {}
    if parser.has_section("server"):
        server = parser["server"]
        kwargs["host"] = server.get("host", ServerConfig.host)
        for key in ("http_port", "ws_port", "rtsp_port"):
            if key in server:
                kwargs[key] = server.getint(key)
        for key in ("call_timeout_s", "heartbeat_interval_s"):
            if key in server:
                kwargs[key] = server.getfloat(key)
        for key in ("credentials", "store_dir", "static_dir"):
            if key in server:
                kwargs[key] = server.get(key)
    if parser.has_section("canvas"):
        canvas = parser["canvas"]
        for key in ("width", "height", "quant_step"):
            if key in canvas:
                kwargs[key] = canvas.getint(key)
        if "fps" in canvas:
            kwargs["fps"] = canvas.getfloat("fps")
        for key in ("gamma_correct", "sample_hidden_pages"):
            if key in canvas:
                kwargs[key] = canvas.getboolean(key)
    sources = []
    if parser.has_section("sources"):
        base = Path(path).resolve().parent
        for name, value in parser["sources"].items():
            entry = _parse_source_line(name, value)
            if "path" in entry and not Path(entry["path"]).is_absolute():
                entry["path"] = str(base / entry["path"])
            sources.append(entry)
    kwargs["sources"] = sources
    return ServerConfig(**kwargs)
