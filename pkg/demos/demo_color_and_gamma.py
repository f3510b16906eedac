"""Color conversions and gamma correction on a sample gradient."""

import numpy as np

from onecast.color import (
    gamma_correct,
    linear_to_gamma,
    pack_nv12,
    rgb_to_yuv,
    unpack_nv12,
    yuv_to_rgb,
)

print("scalar conversions:")
for pixel in [(0, 0, 0), (255, 255, 255), (255, 0, 0), (0, 255, 0), (0, 0, 255)]:
    yuv = rgb_to_yuv(pixel)
    back = yuv_to_rgb(yuv)
    print(f"  rgb{pixel} -> yuv{yuv} -> rgb{back}")

print("\ngamma curve samples (linear -> display):")
for v in (0.0, 0.001, 0.01, 0.1, 0.25, 0.5, 0.75, 1.0):
    print(f"  {v:5.3f} -> {linear_to_gamma(v):5.3f}")

# A horizontal gradient, gamma-corrected then packed to NV12 and back.
gradient = np.zeros((32, 256, 3), dtype=np.uint8)
gradient[:, :, :] = np.arange(256, dtype=np.uint8)[None, :, None]
corrected = gamma_correct(gradient)
print(
    f"\ngradient mid value {gradient[0, 128, 0]} brightens to "
    f"{corrected[0, 128, 0]} after gamma"
)

nv12 = pack_nv12(corrected)
print(f"NV12 size: {nv12.nbytes} bytes = {256}*{32}*1.5")
restored = unpack_nv12(nv12)
err = np.abs(restored.astype(int) - corrected.astype(int)).max()
print(f"pack/unpack max channel error on the smooth gradient: {err}")
