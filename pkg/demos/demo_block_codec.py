"""Walk one 4x4 block through every codec stage, printing each intermediate.

Shows the transform concentrating energy in the top-left corner, step
quantization zeroing the tail, the ZigZag scan lining the zeros up, and the
run/level entropy stage shrinking the block to a few bytes.
"""

import numpy as np

from onecast.codec import (
    dct_2d,
    dequantize,
    entropy_decode,
    entropy_encode,
    idct_2d,
    quantize,
    unzigzag,
    zigzag,
)

np.set_printoptions(precision=1, suppress=True)

block = np.array(
    [
        [52, 55, 61, 66],
        [63, 59, 55, 90],
        [62, 59, 68, 113],
        [63, 58, 71, 122],
    ],
    dtype=float,
)
print("input block (pixel values):")
print(block)

centered = block - 128.0
coeffs = dct_2d(centered)
print("\ntransform coefficients (energy gathers top-left):")
print(coeffs)

step = 28
q = quantize(coeffs, step)
print(f"\nquantized with step {step} (tail collapses to zero):")
print(q)

scanned = zigzag(q)
print("\nzigzag scan (zeros trail):")
print(scanned.tolist())

encoded = entropy_encode(scanned)
raw_bytes = scanned.size * 2
print(f"\nentropy coded: {len(encoded)} bytes vs {raw_bytes} raw ({encoded.hex()})")

decoded = entropy_decode(encoded, 4)
assert decoded.tolist() == scanned.tolist(), "entropy stage must be lossless"

restored = idct_2d(dequantize(unzigzag(decoded, 4), step)) + 128.0
print("\nreconstruction after the full roundtrip:")
print(np.round(restored))
print(f"max pixel error: {np.abs(restored - block).max():.1f} "
      f"(bounded by the quantization step)")
