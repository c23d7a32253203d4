"""Bayer frame containers, block addressing and file I/O.

Frames are 8-bit RGGB mosaics stored row-major:

    R  G1 R  G1 ...
    G2 B  G2 B  ...

Two on-disk formats are understood: binary PGM (P5, maxval 255) and a small
raw container::

    b"CBAY" | version:u8 | width:u16le | height:u16le
           | orig_width:u16le | orig_height:u16le | payload (row-major)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

RAW_MAGIC = b"CBAY"
RAW_VERSION = 1
_RAW_HEADER = struct.Struct("<4sBHHHH")

BLOCK = 8  # macro-block edge in Bayer pixels


class FrameFormatError(ValueError):
    """Raised for malformed or truncated frame files."""


def _pad_to(n: int, m: int = BLOCK) -> int:
    return -(-n // m) * m


@dataclass(frozen=True, eq=False)
class BayerFrame:
    """Immutable RGGB mosaic padded to the macro-block grid.

    ``samples`` holds the padded ``(height, width)`` uint8 array; the
    original (pre-padding) size is kept so that decode/store can crop.
    """

    samples: np.ndarray
    orig_width: int
    orig_height: int

    def __post_init__(self):
        s = self.samples
        if s.ndim != 2 or s.dtype != np.uint8:
            raise ValueError("samples must be a 2-D uint8 array")
        h, w = s.shape
        if h < BLOCK or w < BLOCK or h % BLOCK or w % BLOCK:
            raise ValueError(f"frame {w}x{h} is not aligned to {BLOCK}x{BLOCK} macro-blocks")
        if not (0 < self.orig_width <= w and 0 < self.orig_height <= h):
            raise ValueError("original size must fit inside the padded frame")
        if s.flags.writeable:
            s = s.copy()
            s.flags.writeable = False
            object.__setattr__(self, "samples", s)

    @classmethod
    def from_array(cls, arr, pad: bool = True) -> "BayerFrame":
        """Wrap a 2-D 8-bit array, edge-replicating up to the 8x8 grid."""
        a = np.asarray(arr)
        if a.ndim != 2:
            raise ValueError("expected a 2-D mosaic")
        if a.dtype != np.uint8:
            if a.min(initial=0) < 0 or a.max(initial=0) > 255:
                raise ValueError("samples must lie in [0, 255]")
            a = a.astype(np.uint8)
        h, w = a.shape
        if h == 0 or w == 0:
            raise ValueError("empty frame")
        aligned = h % BLOCK == 0 and w % BLOCK == 0 and h >= BLOCK and w >= BLOCK
        if not aligned:
            if not pad:
                if h % 2 or w % 2:
                    raise ValueError(f"odd frame size {w}x{h} and padding disabled")
                raise ValueError(f"frame size {w}x{h} not a multiple of {BLOCK}")
            a = np.pad(a, ((0, _pad_to(h) - h), (0, _pad_to(w) - w)), mode="edge")
        return cls(np.ascontiguousarray(a), w, h)

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def padded(self) -> bool:
        return (self.orig_width, self.orig_height) != (self.width, self.height)

    def cropped(self) -> np.ndarray:
        """Samples at the original (pre-padding) size."""
        return self.samples[: self.orig_height, : self.orig_width]

    def channels(self) -> dict[str, np.ndarray]:
        s = self.samples
        return {"R": s[0::2, 0::2], "G1": s[0::2, 1::2], "G2": s[1::2, 0::2], "B": s[1::2, 1::2]}

    def __eq__(self, other):
        if not isinstance(other, BayerFrame):
            return NotImplemented
        return (
            self.orig_width == other.orig_width
            and self.orig_height == other.orig_height
            and np.array_equal(self.samples, other.samples)
        )


@dataclass(frozen=True, eq=False)
class PlaneSet:
    """Four half-resolution component planes (Y, Dg, Cb, Cr) as int16.

    Cb and Cr carry the +128 offset and are not clamped.
    """

    y: np.ndarray
    dg: np.ndarray
    cb: np.ndarray
    cr: np.ndarray
    orig_width: int
    orig_height: int

    NAMES = ("y", "dg", "cb", "cr")

    def __post_init__(self):
        shapes = {p.shape for p in self.planes()}
        if len(shapes) != 1:
            raise ValueError("planes must share one shape")

    def planes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return (self.y, self.dg, self.cb, self.cr)

    def stack(self) -> np.ndarray:
        return np.stack(self.planes())

    @classmethod
    def from_stack(cls, arr: np.ndarray, orig_width: int, orig_height: int) -> "PlaneSet":
        a = np.asarray(arr, dtype=np.int16)
        return cls(a[0], a[1], a[2], a[3], orig_width, orig_height)

    @property
    def shape(self) -> tuple[int, int]:
        return self.y.shape

    def __eq__(self, other):
        if not isinstance(other, PlaneSet):
            return NotImplemented
        return all(np.array_equal(a, b) for a, b in zip(self.planes(), other.planes()))


# ---------------------------------------------------------------------------
# block addressing


def iter_macroblocks(frame: BayerFrame) -> Iterator[tuple[int, int, np.ndarray]]:
    """Yield ``(row, col, view)`` for every 8x8 macro-block in raster order."""
    s = frame.samples
    for r in range(0, frame.height, BLOCK):
        for c in range(0, frame.width, BLOCK):
            yield r, c, s[r : r + BLOCK, c : c + BLOCK]


def to_blocks(plane: np.ndarray, n: int = 4) -> np.ndarray:
    """Split ``(..., H, W)`` into ``(..., H/n * W/n, n, n)`` in raster block order."""
    *lead, h, w = plane.shape
    b = plane.reshape(*lead, h // n, n, w // n, n)
    b = np.swapaxes(b, -3, -2)
    return b.reshape(*lead, (h // n) * (w // n), n, n)


def from_blocks(blocks: np.ndarray, h: int, w: int) -> np.ndarray:
    """Inverse of :func:`to_blocks`."""
    *lead, _, n, _ = blocks.shape
    b = blocks.reshape(*lead, h // n, w // n, n, n)
    b = np.swapaxes(b, -3, -2)
    return b.reshape(*lead, h, w)


# ---------------------------------------------------------------------------
# file I/O


def _read_pnm_header(data: bytes, magic: bytes, nfields: int = 3) -> tuple[list[int], int]:
    if not data.startswith(magic):
        raise FrameFormatError(f"not a {magic.decode()} file")
    pos = len(magic)
    fields: list[int] = []
    while len(fields) < nfields:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise FrameFormatError("truncated header")
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and data[pos : pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise FrameFormatError("malformed header")
        fields.append(int(data[start:pos]))
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise FrameFormatError("malformed header")
    return fields, pos + 1


def _parse_pgm(data: bytes) -> np.ndarray:
    (w, h, maxval), off = _read_pnm_header(data, b"P5")
    if maxval != 255:
        raise FrameFormatError(f"only 8-bit PGM is supported (maxval {maxval})")
    if w <= 0 or h <= 0:
        raise FrameFormatError("bad dimensions")
    payload = data[off : off + w * h]
    if len(payload) != w * h:
        raise FrameFormatError("truncated payload")
    return np.frombuffer(payload, dtype=np.uint8).reshape(h, w)


def _parse_raw(data: bytes) -> BayerFrame:
    if len(data) < _RAW_HEADER.size:
        raise FrameFormatError("truncated header")
    magic, version, w, h, ow, oh = _RAW_HEADER.unpack_from(data)
    if magic != RAW_MAGIC:
        raise FrameFormatError("bad magic")
    if version != RAW_VERSION:
        raise FrameFormatError(f"unsupported raw version {version}")
    payload = data[_RAW_HEADER.size : _RAW_HEADER.size + w * h]
    if len(payload) != w * h:
        raise FrameFormatError("truncated payload")
    arr = np.frombuffer(payload, dtype=np.uint8).reshape(h, w)
    ow, oh = ow or w, oh or h
    if w % BLOCK == 0 and h % BLOCK == 0 and w >= BLOCK and h >= BLOCK:
        try:
            return BayerFrame(arr.copy(), ow, oh)
        except ValueError as e:
            raise FrameFormatError(str(e)) from None
    return BayerFrame.from_array(arr, pad=True)


def sniff_format(data: bytes) -> str:
    if data.startswith(b"P5"):
        return "pgm"
    if data.startswith(RAW_MAGIC):
        return "raw"
    raise FrameFormatError("unrecognised frame file")


def load_frame(path, format: str | None = None, pad: bool = True) -> BayerFrame:
    """Read a Bayer frame from a PGM (P5) or CBAY raw file.

    Sizes not aligned to 8 are edge-padded when ``pad`` is true; otherwise
    odd or misaligned sizes raise.
    """
    data = Path(path).read_bytes()
    fmt = format or sniff_format(data)
    if fmt == "pgm":
        arr = _parse_pgm(data)
        h, w = arr.shape
        if not pad and (w % 2 or h % 2):
            raise FrameFormatError(f"odd frame size {w}x{h}")
        try:
            return BayerFrame.from_array(arr, pad=pad)
        except ValueError as e:
            raise FrameFormatError(str(e)) from None
    if fmt == "raw":
        return _parse_raw(data)
    raise ValueError(f"unknown frame format {fmt!r}")


def frame_bytes(frame: BayerFrame, format: str = "pgm", crop: bool = False) -> bytes:
    if format == "pgm":
        s = frame.cropped() if crop else frame.samples
        h, w = s.shape
        return b"P5\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(s).tobytes()
    if format == "raw":
        if crop:
            raise ValueError("the raw container always stores the padded frame")
        header = _RAW_HEADER.pack(
            RAW_MAGIC, RAW_VERSION, frame.width, frame.height, frame.orig_width, frame.orig_height
        )
        return header + frame.samples.tobytes()
    raise ValueError(f"unknown frame format {format!r}")


def store_frame(frame: BayerFrame, path, format: str = "pgm", crop: bool = False) -> None:
    Path(path).write_bytes(frame_bytes(frame, format, crop))


# RGB images -----------------------------------------------------------------


def load_rgb(path) -> np.ndarray:
    """Read an 8-bit RGB image as ``(H, W, 3)`` uint8 (PPM natively, else via Pillow)."""
    p = Path(path)
    data = p.read_bytes()
    if data.startswith(b"P6"):
        (w, h, maxval), off = _read_pnm_header(data, b"P6")
        if maxval != 255:
            raise FrameFormatError("only 8-bit PPM is supported")
        payload = data[off : off + w * h * 3]
        if len(payload) != w * h * 3:
            raise FrameFormatError("truncated payload")
        return np.frombuffer(payload, dtype=np.uint8).reshape(h, w, 3).copy()
    if data.startswith(b"P5"):
        g = _parse_pgm(data)
        return np.repeat(g[..., None], 3, axis=2)
    from PIL import Image

    with Image.open(p) as im:
        return np.asarray(im.convert("RGB")).copy()


def save_rgb(rgb: np.ndarray, path) -> None:
    p = Path(path)
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
    if p.suffix.lower() in (".ppm", ".pnm"):
        h, w, _ = rgb.shape
        p.write_bytes(b"P6\n%d %d\n255\n" % (w, h) + rgb.tobytes())
        return
    from PIL import Image

    Image.fromarray(rgb).save(p)


# CFA sampling ---------------------------------------------------------------


def mosaic_rggb(rgb, pad: bool = True) -> BayerFrame:
    """Subsample a 3-channel image through an RGGB colour filter array."""
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError("expected an (H, W, 3) image")
    h, w, _ = rgb.shape
    if h % 2 or w % 2:
        raise ValueError(f"odd image size {w}x{h}")
    out = np.empty((h, w), dtype=np.uint8)
    out[0::2, 0::2] = rgb[0::2, 0::2, 0]
    out[0::2, 1::2] = rgb[0::2, 1::2, 1]
    out[1::2, 0::2] = rgb[1::2, 0::2, 1]
    out[1::2, 1::2] = rgb[1::2, 1::2, 2]
    return BayerFrame.from_array(out, pad=pad)
