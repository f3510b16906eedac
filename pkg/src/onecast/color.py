"""RGB/YUV conversion, gamma correction, and NV12 4:2:0 packing.

All channel math rounds half away from zero and clamps to [0, 255].
Scalar entry points take and return plain tuples; the image-level helpers
work on uint8 numpy arrays shaped (h, w, 3).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError

# Forward matrix: Y = 0.257 R + 0.504 G + 0.098 B + 16
#                 U = -0.148 R - 0.291 G + 0.439 B + 128   (Cb)
#                 V = 0.439 R - 0.368 G - 0.071 B + 128    (Cr)
_RGB_TO_YUV = np.array(
    [
        [0.257, 0.504, 0.098],
        [-0.148, -0.291, 0.439],
        [0.439, -0.368, -0.071],
    ]
)
_YUV_OFFSET = np.array([16.0, 128.0, 128.0])

# Inverse: R = 1.164 (Y-16) + 1.596 (V-128)
#          G = 1.164 (Y-16) - 0.813 (V-128) - 0.391 (U-128)
#          B = 1.164 (Y-16) + 2.018 (U-128)
_YUV_TO_RGB = np.array(
    [
        [1.164, 0.0, 1.596],
        [1.164, -0.391, -0.813],
        [1.164, 2.018, 0.0],
    ]
)


def _round_half_away(x):
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def _to_u8(x):
    return np.clip(_round_half_away(x), 0, 255).astype(np.uint8)


def rgb_to_yuv(pixel):
    """Convert one (r, g, b) pixel to (y, u, v), each clamped to [0, 255]."""
    r, g, b = pixel
    yuv = _RGB_TO_YUV @ np.array([r, g, b], dtype=np.float64) + _YUV_OFFSET
    y, u, v = (int(c) for c in _to_u8(yuv))
    return (y, u, v)


def yuv_to_rgb(pixel):
    """Invert rgb_to_yuv for one (y, u, v) pixel; exact up to rounding."""
    y, u, v = pixel
    centered = np.array([y - 16.0, u - 128.0, v - 128.0])
    rgb = _YUV_TO_RGB @ centered
    r, g, b = (int(c) for c in _to_u8(rgb))
    return (r, g, b)


def linear_to_gamma(value: float) -> float:
    """Map a linear-light component to gamma (sRGB-style) space.

    Piecewise: <=0 -> 0; <=0.0031308 -> 12.92*v; <1 -> 1.055*v^0.4166667-0.055;
    >=1 -> v^0.45454545.
    """
    if value <= 0.0:
        return 0.0
    if value <= 0.0031308:
        return 12.92 * value
    if value < 1.0:
        return 1.055 * value**0.4166667 - 0.055
    return value**0.45454545


# 256-entry lookup so per-frame correction is a single np.take.
_GAMMA_LUT = np.array(
    [min(255, max(0, round(255.0 * linear_to_gamma(v / 255.0)))) for v in range(256)],
    dtype=np.uint8,
)


def gamma_correct(rgb: np.ndarray) -> np.ndarray:
    """Apply linear_to_gamma per channel of a uint8 image via lookup table."""
    return _GAMMA_LUT[rgb]


@dataclass
class Nv12Image:
    """Planar 4:2:0 image: full-res luma plane plus interleaved half-res UV.

    y_plane has shape (height, width); uv_plane has shape (height//2, width)
    where each row alternates U, V, U, V for the subsampled chroma pairs.
    """

    width: int
    height: int
    y_plane: np.ndarray
    uv_plane: np.ndarray

    def __post_init__(self):
        if self.width % 2 or self.height % 2:
            raise DimensionError(
                f"NV12 dimensions must be even, got {self.width}x{self.height}"
            )
        if self.y_plane.shape != (self.height, self.width):
            raise DimensionError("y_plane shape does not match declared size")
        if self.uv_plane.shape != (self.height // 2, self.width):
            raise DimensionError("uv_plane shape does not match declared size")

    @property
    def nbytes(self) -> int:
        return self.width * self.height * 3 // 2

    def tobytes(self) -> bytes:
        return self.y_plane.tobytes() + self.uv_plane.tobytes()


def rgb_image_to_yuv(rgb: np.ndarray) -> np.ndarray:
    """Per-pixel rgb_to_yuv over an (h, w, 3) image; returns float64 planes."""
    arr = np.asarray(rgb, dtype=np.float64)
    return arr @ _RGB_TO_YUV.T + _YUV_OFFSET


def _half_mean(plane: np.ndarray) -> np.ndarray:
    """Average each 2x2 block of a uint8 plane, rounding half up (values are
    non-negative, so this equals rounding half away from zero)."""
    h, w = plane.shape
    sums = plane.reshape(h // 2, 2, w // 2, 2).sum(axis=(1, 3), dtype=np.uint16)
    return ((sums + 2) >> 2).astype(np.uint8)


def pack_nv12(frame) -> Nv12Image:
    """Convert an RGB frame (or raw (h, w, 3) array) to NV12.

    Every pixel goes through rgb_to_yuv, then chroma is subsampled 4:2:0 by
    averaging each 2x2 block of the rounded channel values; the U and V
    planes are interleaved UVUV row-wise. Dimensions must be even.
    """
    rgb = np.asarray(frame.rgb if hasattr(frame, "rgb") else frame)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise DimensionError(f"expected (h, w, 3) image, got shape {rgb.shape}")
    h, w = rgb.shape[:2]
    if w % 2 or h % 2:
        raise DimensionError(f"NV12 requires even dimensions, got {w}x{h}")

    # Explicit per-channel arithmetic in float32; negative pre-clamp values
    # make floor(x + 0.5) and round-half-away agree after clamping.
    r = rgb[:, :, 0].astype(np.float32)
    g = rgb[:, :, 1].astype(np.float32)
    b = rgb[:, :, 2].astype(np.float32)
    y = np.clip(np.floor(0.257 * r + 0.504 * g + 0.098 * b + 16.5), 0, 255)
    u = np.clip(np.floor(-0.148 * r - 0.291 * g + 0.439 * b + 128.5), 0, 255)
    v = np.clip(np.floor(0.439 * r - 0.368 * g - 0.071 * b + 128.5), 0, 255)
    uv = np.empty((h // 2, w), dtype=np.uint8)
    uv[:, 0::2] = _half_mean(u.astype(np.uint8))
    uv[:, 1::2] = _half_mean(v.astype(np.uint8))
    return Nv12Image(width=w, height=h, y_plane=y.astype(np.uint8), uv_plane=uv)


def unpack_nv12(img: Nv12Image) -> np.ndarray:
    """Convert NV12 back to an (h, w, 3) uint8 RGB image.

    Chroma is upsampled by 2x2 replication (nearest neighbour), the inverse
    of the averaging filter up to subsampling loss.
    """
    y = img.y_plane.astype(np.float32) - 16.0
    u_half = img.uv_plane[:, 0::2].astype(np.float32) - 128.0
    v_half = img.uv_plane[:, 1::2].astype(np.float32) - 128.0
    u = np.repeat(np.repeat(u_half, 2, axis=0), 2, axis=1)
    v = np.repeat(np.repeat(v_half, 2, axis=0), 2, axis=1)
    y *= 1.164
    rgb = np.empty((img.height, img.width, 3), dtype=np.uint8)
    rgb[:, :, 0] = np.clip(np.floor(y + 1.596 * v + 0.5), 0, 255)
    rgb[:, :, 1] = np.clip(np.floor(y - 0.813 * v - 0.391 * u + 0.5), 0, 255)
    rgb[:, :, 2] = np.clip(np.floor(y + 2.018 * u + 0.5), 0, 255)
    return rgb
