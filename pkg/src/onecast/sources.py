"""Deterministic video sources: test patterns and raw-frame file playback.

Every generated frame carries a timestamp strip in its top-left corner: a row
of 8x8-pixel cells (wrapping to further cell rows on narrow frames), starting
with the 8-cell sync pattern 10101010 followed by 64 cells encoding the
capture timestamp in microseconds, most significant bit first. Cells are
saturated black or white so the value survives lossy encoding; a cell reads
as 1 when its mean luma is at least 128.

Raw video file format (little-endian): magic "RVF1", width u32, height u32,
fps u32, then concatenated width*height*3-byte RGB frames.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionError, EndOfStream, StripError

STRIP_CELL = 8  # pixel edge of one strip cell, aligned to the codec blocks
STRIP_SYNC = (1, 0, 1, 0, 1, 0, 1, 0)
STRIP_BITS = len(STRIP_SYNC) + 64

RAW_MAGIC = b"RVF1"
_RAW_HEADER = struct.Struct("<4sIII")


@dataclass(frozen=True)
class SourceDescriptor:
    id: int
    name: str
    kind: str  # "pattern" or "file"
    native_width: int
    native_height: int
    fps: float
    path: str | None = None
    loop: bool = True

    def __post_init__(self):
        if self.fps <= 0:
            raise ConfigError(f"source {self.name!r}: fps must be positive")
        if self.native_width < 16 or self.native_height < 16:
            raise ConfigError(f"source {self.name!r}: dimensions must be >= 16")
        if self.kind not in ("pattern", "file"):
            raise ConfigError(f"source {self.name!r}: unknown kind {self.kind!r}")


@dataclass
class Frame:
    width: int
    height: int
    rgb: np.ndarray
    capture_ts_us: int
    source_id: int = -1

    def __post_init__(self):
        if self.rgb.shape != (self.height, self.width, 3):
            raise DimensionError(
                f"frame buffer shape {self.rgb.shape} does not match "
                f"{self.width}x{self.height}"
            )


def _is_virtual(entry) -> bool:
    if entry.get("virtual"):
        return True
    return "virtual" in str(entry.get("name", "")).lower().strip()


def enumerate_sources(config) -> list[SourceDescriptor]:
    """Build descriptors from declared source entries, ignoring virtual
    cameras (flagged, or any name containing "virtual" after lowering and
    trimming). Declaration order is preserved; ids are assigned 0..k-1."""
    descriptors = []
    for entry in config:
        if _is_virtual(entry):
            continue
        descriptors.append(
            SourceDescriptor(
                id=len(descriptors),
                name=str(entry["name"]),
                kind=entry.get("kind", "pattern"),
                native_width=int(entry.get("width", 320)),
                native_height=int(entry.get("height", 176)),
                fps=float(entry.get("fps", 30)),
                path=entry.get("path"),
                loop=bool(entry.get("loop", True)),
            )
        )
    return descriptors


# --- timestamp strip --------------------------------------------------------


def _strip_layout(width: int, height: int):
    cells_per_row = width // STRIP_CELL
    if cells_per_row == 0:
        raise StripError(f"frame width {width} cannot hold a strip cell")
    rows = -(-STRIP_BITS // cells_per_row)
    if rows * STRIP_CELL > height:
        raise StripError(f"frame {width}x{height} too small for a timestamp strip")
    return cells_per_row, rows


def write_timestamp_strip(rgb: np.ndarray, ts_us: int) -> None:
    """Stamp the sync pattern and 64-bit timestamp into an RGB buffer."""
    h, w = rgb.shape[:2]
    cells_per_row, _ = _strip_layout(w, h)
    bits = list(STRIP_SYNC) + [(ts_us >> (63 - i)) & 1 for i in range(64)]
    for k, bit in enumerate(bits):
        cy, cx = divmod(k, cells_per_row)
        y0, x0 = cy * STRIP_CELL, cx * STRIP_CELL
        rgb[y0 : y0 + STRIP_CELL, x0 : x0 + STRIP_CELL] = 255 if bit else 0


def read_timestamp_strip(rgb: np.ndarray) -> int:
    """Recover the stamped timestamp; raises StripError when the sync
    pattern is absent (the frame carries no strip)."""
    h, w = rgb.shape[:2]
    cells_per_row, _ = _strip_layout(w, h)
    luma = 0.257 * rgb[:, :, 0] + 0.504 * rgb[:, :, 1] + 0.098 * rgb[:, :, 2] + 16.0
    bits = []
    for k in range(STRIP_BITS):
        cy, cx = divmod(k, cells_per_row)
        y0, x0 = cy * STRIP_CELL, cx * STRIP_CELL
        cell = luma[y0 : y0 + STRIP_CELL, x0 : x0 + STRIP_CELL]
        bits.append(1 if cell.mean() >= 128.0 else 0)
    if tuple(bits[: len(STRIP_SYNC)]) != STRIP_SYNC:
        raise StripError("no valid strip framing bits")
    value = 0
    for bit in bits[len(STRIP_SYNC) :]:
        value = (value << 1) | bit
    return value


def decode_timestamp(frame: Frame) -> int:
    """Read the capture timestamp embedded in a frame's strip."""
    return read_timestamp_strip(frame.rgb)


# --- pattern rendering ------------------------------------------------------

_BAR_COLORS = np.array(
    [
        (235, 235, 235),
        (235, 235, 16),
        (16, 235, 235),
        (16, 235, 16),
        (235, 16, 235),
        (235, 16, 16),
        (16, 16, 235),
        (16, 16, 16),
    ],
    dtype=np.uint8,
)

_SQUARE = 24  # bouncing square edge in pixels


def _bounce(x: int, limit: int) -> int:
    if limit <= 0:
        return 0
    period = 2 * limit
    r = x % period
    return r if r < limit else period - r


class PatternSource:
    """Renders color bars, a bouncing square, and the timestamp strip as a
    pure function of (descriptor id, tick index)."""

    def __init__(self, descriptor: SourceDescriptor):
        self.descriptor = descriptor
        w, h = descriptor.native_width, descriptor.native_height
        bars = np.roll(_BAR_COLORS, descriptor.id, axis=0)
        xs = np.minimum(np.arange(w) * 8 // w, 7)
        self._background = bars[xs][None, :, :].repeat(h, axis=0)

    def next_frame(self, tick_index: int) -> Frame:
        d = self.descriptor
        w, h = d.native_width, d.native_height
        rgb = self._background.copy()
        side = min(_SQUARE, w // 4, h // 4)
        x = _bounce((3 + d.id % 3) * tick_index, w - side)
        y = _bounce((2 + d.id % 5) * tick_index, h - side)
        rgb[y : y + side, x : x + side] = 255
        ts = tick_index * 1_000_000 // round(d.fps)
        write_timestamp_strip(rgb, ts)
        return Frame(width=w, height=h, rgb=rgb, capture_ts_us=ts, source_id=d.id)


# --- raw frame files --------------------------------------------------------


def write_raw_video(path, frames, fps: int) -> None:
    """Write RGB frames (all the same shape) into the raw container."""
    frames = list(frames)
    if not frames:
        raise ValueError("at least one frame required")
    h, w = frames[0].shape[:2]
    with open(path, "wb") as fh:
        fh.write(_RAW_HEADER.pack(RAW_MAGIC, w, h, fps))
        for frame in frames:
            if frame.shape != (h, w, 3):
                raise DimensionError("all frames must share one shape")
            fh.write(np.ascontiguousarray(frame, dtype=np.uint8).tobytes())


class FileSource:
    """Plays back pre-recorded raw RGB frames, cyclically when looping."""

    def __init__(self, descriptor: SourceDescriptor):
        if not descriptor.path:
            raise ConfigError(f"file source {descriptor.name!r} has no path")
        self.descriptor = descriptor
        data = Path(descriptor.path).read_bytes()
        if len(data) < _RAW_HEADER.size:
            raise ConfigError(f"{descriptor.path}: truncated raw video header")
        magic, w, h, fps = _RAW_HEADER.unpack_from(data)
        if magic != RAW_MAGIC:
            raise ConfigError(f"{descriptor.path}: bad magic {magic!r}")
        frame_bytes = w * h * 3
        body = data[_RAW_HEADER.size :]
        count = len(body) // frame_bytes
        if count == 0:
            raise ConfigError(f"{descriptor.path}: no complete frames")
        self.width, self.height, self.fps = w, h, fps
        self._frames = np.frombuffer(
            body[: count * frame_bytes], dtype=np.uint8
        ).reshape(count, h, w, 3)

    def next_frame(self, tick_index: int) -> Frame:
        d = self.descriptor
        n = len(self._frames)
        if tick_index >= n and not d.loop:
            raise EndOfStream(f"source {d.name!r} exhausted after {n} frames")
        rgb = self._frames[tick_index % n].copy()
        ts = tick_index * 1_000_000 // round(d.fps)
        return Frame(
            width=self.width,
            height=self.height,
            rgb=rgb,
            capture_ts_us=ts,
            source_id=d.id,
        )


def open_source(descriptor: SourceDescriptor):
    if descriptor.kind == "file":
        return FileSource(descriptor)
    return PatternSource(descriptor)
