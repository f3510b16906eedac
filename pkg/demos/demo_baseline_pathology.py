"""The legacy framing queue pathology: a consumer slower than the producer
accumulates delay without bound; balanced rates stay flat."""

from onecast.harness import baseline_demo


def sparkline(depths, width=60):
    if not depths:
        return ""
    step = max(1, len(depths) // width)
    peak = max(max(depths), 1)
    blocks = " .:-=+*#%@"
    return "".join(
        blocks[min(9, depths[i] * 9 // peak)] for i in range(0, len(depths), step)
    )


for in_fps, out_fps in ((30, 20), (30, 30)):
    print(f"\nproducer {in_fps} fps -> consumer {out_fps} fps, 6 seconds:")
    report = baseline_demo(in_fps, out_fps, duration_s=6.0)
    depths = report.pop("depths")
    print(f"  queue depth over time  [{sparkline(depths)}]")
    print(f"  final depth {report['final_depth']}, "
          f"slope {report['slope_frames_per_s']:.1f} frames/s, "
          f"unbounded={report['unbounded_growth']}")

print("\nthe RTP path never buffers like this: the pull pipeline keeps at")
print("most four frames and discards the oldest, so delay cannot accumulate")
