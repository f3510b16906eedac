"""Multi-source tile compositor with a fixed-size render target.

N sources are bound to 2x2 grid pages; every tick the sources visible on the
current page are scaled (nearest neighbour) into their tile rectangles on a
canvas whose dimensions never change, no matter how many sources are
attached. Director commands (maximize/restore, page next/prev) mutate the
layout between ticks. The composed frame is stamped with a wall-clock
timestamp strip after painting, so receivers can measure compose-to-display
latency.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, EndOfStream, StateError
from .sources import Frame, write_timestamp_strip

BACKGROUND = (0x80, 0x80, 0x80)


@dataclass(frozen=True)
class CanvasConfig:
    width: int = 1920
    height: int = 1080
    fps: float = 30.0
    grid_rows: int = 2
    grid_cols: int = 2

    def __post_init__(self):
        if self.fps <= 0:
            raise ConfigError("fps must be positive")
        if self.width % 2 or self.height % 2:
            raise ConfigError("canvas dimensions must be even")
        if self.width % self.grid_cols or self.height % self.grid_rows:
            raise ConfigError("canvas dimensions must divide into the tile grid")

    @property
    def tiles_per_page(self) -> int:
        return self.grid_rows * self.grid_cols


@dataclass(frozen=True)
class TileRect:
    x: int
    y: int
    w: int
    h: int


@dataclass
class LayoutState:
    """Snapshot of the director state: page, bindings, and tile geometry."""

    page_index: int
    pages: tuple  # tuple of pages, each a tuple of source ids (None = empty)
    maximized: int | None
    geometry: tuple  # TileRect per tile slot

    @property
    def page_count(self) -> int:
        return len(self.pages)


def _grid_geometry(config: CanvasConfig) -> list[TileRect]:
    tw = config.width // config.grid_cols
    th = config.height // config.grid_rows
    return [
        TileRect(x=c * tw, y=r * th, w=tw, h=th)
        for r in range(config.grid_rows)
        for c in range(config.grid_cols)
    ]


def assign_sources(source_ids, config: CanvasConfig) -> LayoutState:
    """Fill tiles row-major, tiles_per_page per page; trailing tiles empty."""
    per_page = config.tiles_per_page
    ids = list(source_ids)
    page_count = max(1, -(-len(ids) // per_page))
    pages = []
    for p in range(page_count):
        chunk = ids[p * per_page : (p + 1) * per_page]
        pages.append(tuple(chunk + [None] * (per_page - len(chunk))))
    return LayoutState(
        page_index=0,
        pages=tuple(pages),
        maximized=None,
        geometry=tuple(_grid_geometry(config)),
    )


class Compositor:
    """Owns the render target and layout; thread-safe director commands are
    applied atomically between ticks."""

    def __init__(self, config: CanvasConfig, sources=(), clock=None):
        self.config = config
        self._clock = clock or (lambda: time.time_ns() // 1000)
        self._sources = {getattr(s, "descriptor").id: s for s in sources}
        self._layout = assign_sources(sorted(self._sources), config)
        self._stored_rect: TileRect | None = None
        self._canvas = np.empty((config.height, config.width, 3), dtype=np.uint8)
        self._last_frame: Frame | None = None
        self._scale_maps: dict = {}
        self._ended: set[int] = set()
        self.last_sample_count = 0
        self.sample_hidden_pages = False
        self._lock = threading.Lock()

    # --- director commands -------------------------------------------------

    def layout_state(self) -> LayoutState:
        with self._lock:
            return LayoutState(
                page_index=self._layout.page_index,
                pages=self._layout.pages,
                maximized=self._layout.maximized,
                geometry=self._layout.geometry,
            )

    def maximize(self, tile: int, page: int | None = None) -> LayoutState:
        with self._lock:
            lay = self._layout
            if lay.maximized is not None:
                raise StateError("a tile is already maximized")
            if page is not None and page != lay.page_index:
                raise StateError(f"tile is on page {page}, not the current page")
            if not 0 <= tile < self.config.tiles_per_page:
                raise StateError(f"no tile slot {tile}")
            self._stored_rect = lay.geometry[tile]
            geometry = list(lay.geometry)
            geometry[tile] = TileRect(0, 0, self.config.width, self.config.height)
            self._layout = LayoutState(
                page_index=lay.page_index,
                pages=lay.pages,
                maximized=tile,
                geometry=tuple(geometry),
            )
            return self._layout

    def restore(self) -> LayoutState:
        with self._lock:
            lay = self._layout
            if lay.maximized is None:
                raise StateError("no tile is maximized")
            geometry = list(lay.geometry)
            geometry[lay.maximized] = self._stored_rect
            self._stored_rect = None
            self._layout = LayoutState(
                page_index=lay.page_index,
                pages=lay.pages,
                maximized=None,
                geometry=tuple(geometry),
            )
            return self._layout

    def page_next(self) -> LayoutState:
        return self._page_step(1)

    def page_prev(self) -> LayoutState:
        return self._page_step(-1)

    def _page_step(self, delta: int) -> LayoutState:
        with self._lock:
            lay = self._layout
            if lay.maximized is not None:
                raise StateError("cannot switch pages while a tile is maximized")
            index = min(max(lay.page_index + delta, 0), len(lay.pages) - 1)
            self._layout = LayoutState(
                page_index=index,
                pages=lay.pages,
                maximized=lay.maximized,
                geometry=lay.geometry,
            )
            return self._layout

    # --- composition --------------------------------------------------------

    def _scale_map(self, sw, sh, tw, th):
        key = (sw, sh, tw, th)
        cached = self._scale_maps.get(key)
        if cached is None:
            xs = (np.arange(tw) * sw // tw).astype(np.intp)
            ys = (np.arange(th) * sh // th).astype(np.intp)
            cached = self._scale_maps[key] = (ys[:, None], xs[None, :])
        return cached

    def _paint_tile(self, rect: TileRect, source, tick_index: int) -> None:
        region = self._canvas[rect.y : rect.y + rect.h, rect.x : rect.x + rect.w]
        if source.descriptor.id in self._ended:
            region[:] = 0
            return
        try:
            frame = source.next_frame(tick_index)
        except EndOfStream:
            region[:] = 0  # ended feeds go black; composition continues
            self._ended.add(source.descriptor.id)
            return
        ys, xs = self._scale_map(frame.width, frame.height, rect.w, rect.h)
        region[:] = frame.rgb[ys, xs]

    def compose_tick(self, tick_index: int) -> Frame:
        """Compose one render-target frame from the current page's sources."""
        with self._lock:
            lay = self._layout
            self._canvas[:] = BACKGROUND
            if lay.maximized is not None:
                slots = [lay.maximized]
            else:
                slots = range(self.config.tiles_per_page)
            sampled = 0
            page = lay.pages[lay.page_index]
            for slot in slots:
                sid = page[slot]
                if sid is None:
                    continue
                self._paint_tile(lay.geometry[slot], self._sources[sid], tick_index)
                sampled += 1
            self.last_sample_count = sampled
            if self.sample_hidden_pages:
                shown = {page[s] for s in slots}
                for sid, source in self._sources.items():
                    if sid not in shown and sid not in self._ended:
                        try:
                            source.next_frame(tick_index)
                        except EndOfStream:
                            self._ended.add(sid)
            ts = self._clock()
            write_timestamp_strip(self._canvas, ts)
            self._last_frame = Frame(
                width=self.config.width,
                height=self.config.height,
                rgb=self._canvas.copy(),
                capture_ts_us=ts,
            )
            return self._last_frame

    def snapshot(self) -> Frame:
        """Copy of the most recent composed frame."""
        with self._lock:
            if self._last_frame is None:
                raise StateError("nothing composed yet")
            last = self._last_frame
            return Frame(
                width=last.width,
                height=last.height,
                rgb=last.rgb.copy(),
                capture_ts_us=last.capture_ts_us,
            )
