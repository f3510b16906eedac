"""Intra-frame block codec: DCT, step quantization, ZigZag scan, entropy stage.

The transform is the orthonormal DCT with compensation coefficients
c(0)=sqrt(1/N), c(u)=sqrt(2/N), applied separably (rows then columns).
Quantization divides every coefficient by a single integer step S and rounds
half away from zero; dequantization multiplies back.

The entropy stage is a lossless (zero-run, level) code: each pair is written
as a '1' flag, the run as an Exp-Golomb code, and the level as a signed
Exp-Golomb code; a single '0' bit marks end-of-block. Every block's bitstream
is padded with zero bits to a byte boundary.

Frame container (little-endian): width u16, height u16, step u16,
frame_index u32, capture_ts_us u64, payload length u32, then the payload:
entropy-coded blocks in raster order for the Y plane, then the U plane, then
the V plane (chroma planes are deinterleaved from NV12 before coding).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .color import Nv12Image
from .errors import CodecError, DimensionError

BLOCK_SIZE = 8
MAX_LEVEL = 32767  # levels must fit in signed 16 bits

_HEADER = struct.Struct("<HHHIQI")

# Upper bound on one encoded block: n^2 pairs of at most
# 1 + ue(run<=63: 13 bits) + se(level<=32767: 33 bits) plus EOB and padding.
_MAX_BLOCK_BYTES = (64 * 47 + 1) // 8 + 2


@lru_cache(maxsize=8)
def dct_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT basis: row u is c(u) * cos((i + 0.5) * pi * u / n)."""
    i = np.arange(n)
    u = np.arange(n).reshape(-1, 1)
    c = np.where(u == 0, np.sqrt(1.0 / n), np.sqrt(2.0 / n))
    return c * np.cos((i + 0.5) * np.pi * u / n)


def dct_1d(signal) -> np.ndarray:
    """Forward 1-D transform of a length-N signal."""
    f = np.asarray(signal, dtype=np.float64)
    if f.ndim != 1 or f.size == 0:
        raise DimensionError("dct_1d needs a non-empty 1-D signal")
    return dct_matrix(f.size) @ f


def idct_1d(coeffs) -> np.ndarray:
    """Inverse of dct_1d (the basis is orthonormal, so this is a transpose)."""
    g = np.asarray(coeffs, dtype=np.float64)
    if g.ndim != 1 or g.size == 0:
        raise DimensionError("idct_1d needs a non-empty 1-D signal")
    return dct_matrix(g.size).T @ g


def dct_2d(block) -> np.ndarray:
    """Separable 2-D transform: dct_1d over every row, then every column."""
    b = np.asarray(block, dtype=np.float64)
    if b.ndim != 2 or b.shape[0] != b.shape[1] or b.size == 0:
        raise DimensionError(f"dct_2d needs a square block, got shape {b.shape}")
    c = dct_matrix(b.shape[0])
    return c @ b @ c.T


def idct_2d(coeffs) -> np.ndarray:
    """Exact inverse of dct_2d."""
    f = np.asarray(coeffs, dtype=np.float64)
    if f.ndim != 2 or f.shape[0] != f.shape[1] or f.size == 0:
        raise DimensionError(f"idct_2d needs a square block, got shape {f.shape}")
    c = dct_matrix(f.shape[0])
    return c.T @ f @ c


def quantize(coeffs, step: int) -> np.ndarray:
    """q = round_half_away_from_zero(F / S) as integers."""
    if step < 1:
        raise ValueError(f"quantization step must be >= 1, got {step}")
    f = np.asarray(coeffs, dtype=np.float64)
    return (np.sign(f) * np.floor(np.abs(f) / step + 0.5)).astype(np.int32)


def dequantize(q, step: int) -> np.ndarray:
    if step < 1:
        raise ValueError(f"quantization step must be >= 1, got {step}")
    return np.asarray(q, dtype=np.float64) * step


@lru_cache(maxsize=8)
def zigzag_order(n: int):
    """Scan positions (row, col) along anti-diagonals from the top-left.

    Order starts (0,0), (0,1), (1,0), (2,0), (1,1), (0,2), ...
    """
    order = []
    for s in range(2 * n - 1):
        cells = [(r, s - r) for r in range(min(s, n - 1), -1, -1) if s - r < n]
        if s % 2:
            cells.reverse()
        order.extend(cells)
    return tuple(order)


@lru_cache(maxsize=8)
def _zigzag_indices(n: int) -> np.ndarray:
    return np.array([r * n + c for r, c in zigzag_order(n)])


@lru_cache(maxsize=8)
def _unzigzag_indices(n: int) -> np.ndarray:
    return np.argsort(_zigzag_indices(n))


def zigzag(block) -> np.ndarray:
    """Flatten a square block into ZigZag scan order."""
    b = np.asarray(block)
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise DimensionError(f"zigzag needs a square block, got shape {b.shape}")
    return b.reshape(-1)[_zigzag_indices(b.shape[0])]


def unzigzag(seq, n: int) -> np.ndarray:
    """Exact inverse of zigzag for a length n*n sequence."""
    s = np.asarray(seq)
    if s.ndim != 1 or s.size != n * n:
        raise DimensionError(f"expected {n * n} values, got {s.size}")
    return s[_unzigzag_indices(n)].reshape(n, n)


# --- entropy stage ---------------------------------------------------------


def _encode_block_bits(values) -> bytes:
    """Reference (run, level) encoder for one scanned block."""
    acc = 0
    nbits = 0
    run = 0
    for v in values:
        v = int(v)
        if v == 0:
            run += 1
            continue
        if not -MAX_LEVEL <= v <= MAX_LEVEL:
            raise CodecError(f"level {v} exceeds signed 16-bit range")
        # ue(k) writes k+1 in 2*bit_length(k+1) - 1 bits (w-1 zeros, then w bits).
        nr = run + 1
        wr = nr.bit_length()
        u = 2 * (v - 1) if v > 0 else -2 * v - 1
        nu = u + 1
        wu = nu.bit_length()
        acc = (acc << 1) | 1
        acc = (acc << (2 * wr - 1)) | nr
        acc = (acc << (2 * wu - 1)) | nu
        nbits += 1 + (2 * wr - 1) + (2 * wu - 1)
        run = 0
    acc <<= 1  # end-of-block marker
    nbits += 1
    pad = -nbits % 8
    acc <<= pad
    nbits += pad
    return acc.to_bytes(nbits // 8, "big")


def entropy_encode(seq) -> bytes:
    """Losslessly encode one ZigZag-scanned sequence to bytes."""
    return _encode_block_bits(np.asarray(seq).reshape(-1))


def _decode_block_window(data, byte_pos, n2, window):
    """Decode one block from a bounded byte window at a byte boundary.

    Returns (pairs, next_byte_pos) where pairs is a list of (scan position,
    level) for the nonzero entries. Raises CodecError with the absolute byte
    offset of the fault on truncated or malformed input.
    """
    chunk = data[byte_pos : byte_pos + window]
    total = len(chunk) * 8
    if total == 0:
        raise CodecError("truncated payload", offset=byte_pos)
    big = int.from_bytes(chunk, "big")
    cursor = 0
    pairs = []
    idx = 0

    def read_ue():
        nonlocal cursor
        remaining = total - cursor
        rem = big & ((1 << remaining) - 1)
        if rem == 0:
            raise CodecError(
                "truncated Exp-Golomb code", offset=byte_pos + (cursor >> 3)
            )
        zeros = remaining - rem.bit_length()
        if zeros > 32:
            raise CodecError(
                "oversized Exp-Golomb code", offset=byte_pos + (cursor >> 3)
            )
        width = zeros + zeros + 1
        if cursor + width > total:
            raise CodecError("truncated block", offset=byte_pos + (cursor >> 3))
        value = (big >> (total - cursor - width)) & ((1 << (zeros + 1)) - 1)
        cursor += width
        return value - 1

    while True:
        if cursor >= total:
            raise CodecError("truncated block", offset=byte_pos + (cursor >> 3))
        flag = (big >> (total - cursor - 1)) & 1
        cursor += 1
        if not flag:  # end-of-block marker
            break
        run = read_ue()
        u = read_ue()
        level = (u >> 1) + 1 if not u & 1 else -((u + 1) >> 1)
        idx += run
        if idx >= n2:
            raise CodecError(
                f"run overflows block ({idx} >= {n2})", offset=byte_pos + (cursor >> 3)
            )
        pairs.append((idx, level))
        idx += 1

    used = (cursor + 7) >> 3
    pad_bits = used * 8 - cursor
    if pad_bits and (big >> (total - cursor - pad_bits)) & ((1 << pad_bits) - 1):
        raise CodecError("nonzero padding bits", offset=byte_pos + (cursor >> 3))
    return pairs, byte_pos + used


_FAST_WINDOW = 16


def _decode_block(data: bytes, byte_pos: int, n2: int):
    """Decode one block; a small window keeps the int arithmetic short, with
    a retry at the worst-case window for blocks longer than the fast path."""
    try:
        return _decode_block_window(data, byte_pos, n2, _FAST_WINDOW)
    except CodecError:
        if len(data) - byte_pos <= _FAST_WINDOW:
            raise
        return _decode_block_window(data, byte_pos, n2, _MAX_BLOCK_BYTES)


def entropy_decode(data: bytes, n: int) -> np.ndarray:
    """Decode exactly one block's bytes back to its scan sequence."""
    pairs, end = _decode_block(data, 0, n * n)
    if end != len(data):
        raise CodecError("trailing bytes after end-of-block", offset=end)
    out = np.zeros(n * n, dtype=np.int32)
    for idx, level in pairs:
        out[idx] = level
    return out


# --- frame level -----------------------------------------------------------


@dataclass
class EncodedFrame:
    width: int
    height: int
    step: int
    frame_index: int
    capture_ts_us: int
    payload: bytes

    def to_bytes(self) -> bytes:
        header = _HEADER.pack(
            self.width,
            self.height,
            self.step,
            self.frame_index & 0xFFFFFFFF,
            self.capture_ts_us,
            len(self.payload),
        )
        return header + self.payload

    @classmethod
    def from_bytes(cls, data: bytes) -> "EncodedFrame":
        if len(data) < _HEADER.size:
            raise CodecError("frame shorter than header", offset=len(data))
        width, height, step, frame_index, ts, plen = _HEADER.unpack_from(data)
        payload = data[_HEADER.size :]
        if len(payload) != plen:
            raise CodecError(
                f"payload length {len(payload)} != declared {plen}",
                offset=_HEADER.size,
            )
        return cls(width, height, step, frame_index, ts, payload)


def _blockify(plane: np.ndarray, n: int) -> np.ndarray:
    """Split into n*n blocks, edge-padding bottom/right rows so any plane
    codes as ceil(h/n) * ceil(w/n) blocks."""
    h, w = plane.shape
    pad_h, pad_w = -h % n, -w % n
    if pad_h or pad_w:
        plane = np.pad(plane, ((0, pad_h), (0, pad_w)), mode="edge")
        h, w = plane.shape
    return (
        plane.reshape(h // n, n, w // n, n).transpose(0, 2, 1, 3).reshape(-1, n, n)
    )


def _unblockify(blocks: np.ndarray, h: int, w: int, n: int) -> np.ndarray:
    return (
        blocks.reshape(h // n, w // n, n, n).transpose(0, 2, 1, 3).reshape(h, w)
    )


def _encode_plane(plane: np.ndarray, step: int, n: int, out: bytearray) -> None:
    blocks = _blockify(plane.astype(np.float64) - 128.0, n)
    c = dct_matrix(n)
    coeffs = c @ blocks @ c.T  # batched over the leading block axis
    q = quantize(coeffs, step).astype(np.int64)
    scans = q.reshape(-1, n * n)[:, _zigzag_indices(n)]

    # Vectorized (run, level) pair construction; bit assembly per block.
    blk_idx, pos = np.nonzero(scans)
    vals = scans[blk_idx, pos]
    if vals.size and np.abs(vals).max() > MAX_LEVEL:
        raise CodecError("coefficient level exceeds signed 16-bit range")
    prev = np.empty_like(pos)
    prev[0:1] = -1
    prev[1:] = pos[:-1]
    same = np.zeros(len(pos), dtype=bool)
    same[1:] = blk_idx[1:] == blk_idx[:-1]
    runs = np.where(same, pos - prev - 1, pos)

    nr = runs + 1
    u = np.where(vals > 0, 2 * (vals - 1), -2 * vals - 1)
    nu = u + 1
    wr = np.frexp(nr.astype(np.float64))[1]  # exact bit_length for small ints
    wu = np.frexp(nu.astype(np.float64))[1]
    pair_bits = 1 + (2 * wr - 1) + (2 * wu - 1)
    pair_val = ((((np.int64(1) << (2 * wr - 1)) | nr) << (2 * wu - 1)) | nu).tolist()
    pair_bits = pair_bits.tolist()

    nb = scans.shape[0]
    starts = np.searchsorted(blk_idx, np.arange(nb)).tolist()
    starts.append(len(pos))
    for b in range(nb):
        lo, hi = starts[b], starts[b + 1]
        if lo == hi:  # all-zero block: EOB marker plus padding
            out += b"\x00"
            continue
        acc = 0
        nbits = 0
        for i in range(lo, hi):
            acc = (acc << pair_bits[i]) | pair_val[i]
            nbits += pair_bits[i]
        acc <<= 1  # end-of-block
        nbits += 1
        pad = -nbits % 8
        acc <<= pad
        nbits += pad
        out += acc.to_bytes(nbits // 8, "big")


def _decode_plane(data: bytes, pos: int, h: int, w: int, step: int, n: int):
    ph, pw = h + (-h % n), w + (-w % n)  # padded dims used at encode time
    nblocks = (ph // n) * (pw // n)
    n2 = n * n
    flat = np.zeros(nblocks * n2, dtype=np.int64)
    end = len(data)
    for b in range(nblocks):
        if pos < end and data[pos] == 0:  # all-zero block fast path
            pos += 1
            continue
        pairs, pos = _decode_block(data, pos, n2)
        base = b * n2
        for idx, level in pairs:
            flat[base + idx] = level
    q = flat.reshape(nblocks, n2)[:, _unzigzag_indices(n)].reshape(-1, n, n)
    c = dct_matrix(n)
    rec = c.T @ dequantize(q, step) @ c  # batched inverse transform
    rec = np.clip(np.floor(rec + 128.0 + 0.5), 0, 255).astype(np.uint8)
    return _unblockify(rec, ph, pw, n)[:h, :w], pos


def encode_frame(
    img: Nv12Image,
    step: int,
    frame_index: int,
    capture_ts_us: int,
    block_size: int = BLOCK_SIZE,
) -> EncodedFrame:
    """Encode an NV12 image: plane order Y, U, V; blocks in raster order."""
    if step < 1:
        raise ValueError(f"quantization step must be >= 1, got {step}")
    payload = bytearray()
    _encode_plane(img.y_plane, step, block_size, payload)
    _encode_plane(img.uv_plane[:, 0::2], step, block_size, payload)
    _encode_plane(img.uv_plane[:, 1::2], step, block_size, payload)
    return EncodedFrame(
        width=img.width,
        height=img.height,
        step=step,
        frame_index=frame_index,
        capture_ts_us=capture_ts_us,
        payload=bytes(payload),
    )


def decode_frame(enc: EncodedFrame, block_size: int = BLOCK_SIZE) -> Nv12Image:
    """Invert every stage of encode_frame and clamp samples to [0, 255]."""
    w, h = enc.width, enc.height
    if w < 2 or h < 2 or w % 2 or h % 2:
        raise CodecError(f"invalid NV12 dimensions {w}x{h}")
    data = enc.payload
    y, pos = _decode_plane(data, 0, h, w, enc.step, block_size)
    u, pos = _decode_plane(data, pos, h // 2, w // 2, enc.step, block_size)
    v, pos = _decode_plane(data, pos, h // 2, w // 2, enc.step, block_size)
    if pos != len(data):
        raise CodecError("payload longer than declared block count", offset=pos)
    uv = np.empty((h // 2, w), dtype=np.uint8)
    uv[:, 0::2] = u
    uv[:, 1::2] = v
    return Nv12Image(width=w, height=h, y_plane=y, uv_plane=uv)
