"""Eight sources on a two-page grid: paging, maximize, and snapshots.

Writes BMP snapshots of each director state into demos/out/ so the constant
canvas size is visible no matter how the layout changes.
"""

from pathlib import Path

from onecast.compositor import CanvasConfig, Compositor
from onecast.signaling.http_api import encode_bmp
from onecast.sources import PatternSource, SourceDescriptor

out_dir = Path(__file__).parent / "out"
out_dir.mkdir(exist_ok=True)

sources = [
    PatternSource(SourceDescriptor(i, f"cam{i}", "pattern", 320, 176, 30))
    for i in range(8)
]
comp = Compositor(CanvasConfig(width=640, height=352, fps=30), sources)

layout = comp.layout_state()
print(f"{len(sources)} sources -> {layout.page_count} pages of 4 tiles")

tick = 0


def snap(name):
    global tick
    frame = comp.compose_tick(tick)
    tick += 1
    path = out_dir / f"{name}.bmp"
    path.write_bytes(encode_bmp(frame.rgb))
    print(f"  {name}: {frame.width}x{frame.height} -> {path}")


snap("page0_grid")

comp.page_next()
print(f"page_next -> page {comp.layout_state().page_index} (sources 4-7)")
snap("page1_grid")

comp.page_prev()
comp.maximize(2)
print("maximize tile 2: geometry becomes the full canvas, siblings hidden")
snap("page0_tile2_max")

comp.restore()
print("restore: layout returns to the exact stored geometry")
snap("page0_restored")

print("\nevery snapshot above has identical dimensions - the render target")
print("is the film: its size never depends on how many sources exist")
