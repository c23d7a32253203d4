"""Frame-level encode/decode and the AGRB container.

Container layout (little-endian)::

    b"AGRB" | version:u8 | width:u16 | height:u16 | orig_width:u16
           | orig_height:u16 | table_id:u8 | word_count:u32 | words:u32[]

``table_id`` is 0 for lossless (all shifts zero), 1 for the built-in
tables and 2 for tables supplied out of band.

Pipeline: RCT -> per-plane 4x4 blocks in raster order (planes Y, Dg, Cb,
Cr, each complete before the next) -> DCT -> quantise -> zigzag -> adaptive
Rice. Y/Dg share the luma contexts, Cb/Cr the chroma ones. The DC predictor
restarts at each plane with the quantised DC of a mid-grey block (4 * 128)
for Y, Cb and Cr, and 0 for Dg. When every shift is zero the reversible
integer DCT is used, so the round trip is exact.
"""

from __future__ import annotations

import struct
import time
from dataclasses import dataclass

import numpy as np

from .color import forward_rct, inverse_rct_counted
from .entropy import decode_planes, encode_planes, unzigzag, zigzag
from .frame import BayerFrame, PlaneSet, from_blocks, to_blocks
from .transform import (
    QuantTables,
    default_tables,
    dequantize,
    fdct4x4,
    fdct4x4_reversible,
    idct4x4,
    idct4x4_reversible,
    lossless_tables,
    quantize,
)

MAGIC = b"AGRB"
VERSION = 1
HEADER = struct.Struct("<4sBHHHHBI")

TABLE_LOSSLESS = 0
TABLE_DEFAULT = 1
TABLE_EXTERNAL = 2

PLANE_CTX = np.array([0, 0, 1, 1], dtype=np.int64)
_MID_DC = 512


class CodecError(ValueError):
    """Malformed container: bad magic/version or inconsistent header."""


@dataclass(frozen=True, eq=False)
class CompressedStream:
    width: int
    height: int
    orig_width: int
    orig_height: int
    table_id: int
    words: np.ndarray

    @property
    def payload_bits(self) -> int:
        return self.words.shape[0] << 5

    @property
    def total_bits(self) -> int:
        return (HEADER.size << 3) + self.payload_bits

    def to_bytes(self) -> bytes:
        head = HEADER.pack(
            MAGIC,
            VERSION,
            self.width,
            self.height,
            self.orig_width,
            self.orig_height,
            self.table_id,
            self.words.shape[0],
        )
        return head + self.words.astype("<u4").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "CompressedStream":
        if len(data) < HEADER.size:
            raise CodecError("truncated header")
        magic, version, w, h, ow, oh, tid, nwords = HEADER.unpack_from(data)
        if magic != MAGIC:
            raise CodecError("bad magic")
        if version != VERSION:
            raise CodecError(f"unsupported version {version}")
        if tid not in (TABLE_LOSSLESS, TABLE_DEFAULT, TABLE_EXTERNAL):
            raise CodecError(f"unknown table id {tid}")
        if w % 8 or h % 8 or w == 0 or h == 0 or not (0 < ow <= w and 0 < oh <= h):
            raise CodecError("inconsistent frame dimensions")
        payload = data[HEADER.size :]
        if len(payload) != nwords << 2:
            raise CodecError(f"payload holds {len(payload)} bytes, header announces {nwords} words")
        words = np.frombuffer(payload, dtype="<u4").astype(np.uint32)
        return cls(w, h, ow, oh, tid, words)

    def __eq__(self, other):
        if not isinstance(other, CompressedStream):
            return NotImplemented
        return self.to_bytes() == other.to_bytes()


@dataclass(frozen=True)
class EncodeStats:
    bits_original: int
    bits_compressed: int
    zero_ac_fraction: float
    duration_s: float

    @property
    def cr(self) -> float:
        return self.bits_original / self.bits_compressed


def _table_id(tables: QuantTables) -> int:
    if tables.lossless:
        return TABLE_LOSSLESS
    if tables == default_tables():
        return TABLE_DEFAULT
    return TABLE_EXTERNAL


def _tables_for(table_id: int, tables: QuantTables | None) -> QuantTables:
    if table_id == TABLE_LOSSLESS:
        return lossless_tables()
    if table_id == TABLE_DEFAULT:
        return default_tables()
    if tables is None:
        raise CodecError("stream uses external quantisation tables; none supplied")
    return tables


def _prev_dc(shifts: np.ndarray) -> np.ndarray:
    dc_shift = shifts[:, 0, 0]
    mid = quantize(np.full(4, _MID_DC), dc_shift)
    mid[1] = 0
    return mid.astype(np.int64)


def frame_coefficients(frame: BayerFrame, tables: QuantTables) -> np.ndarray:
    """Quantised zigzag coefficients, shape ``(4, blocks, 16)``."""
    planes = forward_rct(frame).stack()
    blocks = to_blocks(planes)
    shifts = tables.plane_shifts()
    if tables.lossless:
        coeffs = fdct4x4_reversible(blocks)
    else:
        coeffs = quantize(fdct4x4(blocks), shifts[:, None])
    return zigzag(coeffs)


def coefficients_frame(zz: np.ndarray, tables: QuantTables, width: int, height: int, orig_w: int, orig_h: int):
    shifts = tables.plane_shifts()
    coeffs = unzigzag(zz)
    if tables.lossless:
        blocks = idct4x4_reversible(coeffs)
    else:
        blocks = idct4x4(dequantize(coeffs, shifts[:, None]))
    planes = from_blocks(blocks, height >> 1, width >> 1)
    return inverse_rct_counted(PlaneSet.from_stack(np.clip(planes, -32768, 32767), orig_w, orig_h))


def encode_frame(frame: BayerFrame, tables: QuantTables | None = None) -> CompressedStream:
    return encode_frame_stats(frame, tables)[0]


def encode_frame_stats(frame: BayerFrame, tables: QuantTables | None = None):
    """Encode and also return :class:`EncodeStats` for the frame."""
    tables = tables or default_tables()
    t0 = time.perf_counter()
    zz = frame_coefficients(frame, tables)
    words, _ = encode_planes(zz, PLANE_CTX, _prev_dc(tables.plane_shifts()))
    stream = CompressedStream(
        frame.width, frame.height, frame.orig_width, frame.orig_height, _table_id(tables), words
    )
    dt = time.perf_counter() - t0
    zero_ac = float(np.mean(~np.any(zz[..., 1:], axis=-1)))
    stats = EncodeStats((frame.orig_width * frame.orig_height) << 3, stream.total_bits, zero_ac, dt)
    return stream, stats


def decode_frame_counted(stream: CompressedStream, tables: QuantTables | None = None) -> tuple[BayerFrame, int]:
    """Decode and report the number of samples clamped into [0, 255]."""
    tables = _tables_for(stream.table_id, tables)
    nblocks = (stream.width >> 3) * (stream.height >> 3)
    zz = decode_planes(stream.words, 4, nblocks, PLANE_CTX, _prev_dc(tables.plane_shifts()))
    return coefficients_frame(
        zz, tables, stream.width, stream.height, stream.orig_width, stream.orig_height
    )


def decode_frame(stream: CompressedStream, tables: QuantTables | None = None) -> BayerFrame:
    """Decode to a padded :class:`BayerFrame`; ``.cropped()`` gives the original size."""
    return decode_frame_counted(stream, tables)[0]


def compress_bytes(frame: BayerFrame, tables: QuantTables | None = None) -> bytes:
    return encode_frame(frame, tables).to_bytes()


def decompress_bytes(data: bytes, tables: QuantTables | None = None) -> BayerFrame:
    return decode_frame(CompressedStream.from_bytes(data), tables)
