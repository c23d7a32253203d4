"""Fixed-point 4x4 DCT, reversible integer DCT and power-of-two quantisation.

The lossy transform runs an add/shift butterfly core (cosine constants are
expanded into signed shift terms, Q15) over rows then columns and applies
one post-scaling multiply per coefficient by the Q12 scale matrix
``round(k(i) k(j) 4096)`` with ``k(0)=1, k(>0)=sqrt(2)``. Coefficients use
the orthonormal DCT-II convention (a constant block ``c`` has DC ``4c``).

The reversible transform factors the same orthonormal DCT into lifting
rotations, so it maps integers to integers bijectively; it is used when all
quantisation shifts are zero.

Only integer arithmetic is used here.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .entropy import ZIGZAG

# -- constants ---------------------------------------------------------------

SCALE_BITS = 12
SCALE = np.array(
    [
        [4096, 5793, 5793, 5793],
        [5793, 8192, 8192, 8192],
        [5793, 8192, 8192, 8192],
        [5793, 8192, 8192, 8192],
    ],
    dtype=np.int64,
)

COS_BITS = 15
COS_1 = 30274  # cos(pi/8)  in Q15
COS_2 = 23170  # cos(pi/4)  in Q15
COS_3 = 12540  # cos(3pi/8) in Q15

LIFT_BITS = 14
LIFT_TAN_PI8 = 6787  # tan(pi/8)   in Q14
LIFT_SIN_PI4 = -11585  # -sin(pi/4) in Q14
LIFT_TAN_PI16 = 3259  # tan(pi/16)  in Q14
LIFT_SIN_PI8 = -6270  # -sin(pi/8)  in Q14

MAX_SHIFT = 8


def signed_digits(n: int) -> tuple[tuple[int, int], ...]:
    """Non-adjacent form of ``n`` as ``(shift, +-1)`` terms."""
    terms = []
    s = 0
    while n:
        if n & 1:
            d = 2 - (n & 3)
            terms.append((s, d))
            n -= d
        n >>= 1
        s += 1
    return tuple(terms)


def mul_const(x: np.ndarray, terms: tuple[tuple[int, int], ...]) -> np.ndarray:
    """``x * c`` as a sum of shifted copies of ``x``."""
    acc = np.zeros_like(x)
    for s, d in terms:
        if d > 0:
            acc = acc + (x << s)
        else:
            acc = acc - (x << s)
    return acc


_C1 = signed_digits(COS_1)
_C2 = signed_digits(COS_2)
_C3 = signed_digits(COS_3)
_L45A = signed_digits(LIFT_TAN_PI8)
_L45B = signed_digits(LIFT_SIN_PI4)
_L8A = signed_digits(LIFT_TAN_PI16)
_L8B = signed_digits(LIFT_SIN_PI8)


def _split(x):
    return x[..., 0], x[..., 1], x[..., 2], x[..., 3]


# -- fixed-point (lossy) DCT --------------------------------------------------


def _fdct_1d(x: np.ndarray) -> np.ndarray:
    # output is the unnormalised DCT, scaled by 2**COS_BITS
    x0, x1, x2, x3 = _split(x)
    a0 = x0 + x3
    a1 = x1 + x2
    b0 = x0 - x3
    b1 = x1 - x2
    z0 = (a0 + a1) << COS_BITS
    z2 = mul_const(a0 - a1, _C2)
    z1 = mul_const(b0, _C1) + mul_const(b1, _C3)
    z3 = mul_const(b0, _C3) - mul_const(b1, _C1)
    return np.stack([z0, z1, z2, z3], axis=-1)


def _idct_1d(w: np.ndarray) -> np.ndarray:
    w0, w1, w2, w3 = _split(w)
    base = w0 << COS_BITS
    t = mul_const(w2, _C2)
    e0 = base + t
    e1 = base - t
    o0 = mul_const(w1, _C1) + mul_const(w3, _C3)
    o1 = mul_const(w1, _C3) - mul_const(w3, _C1)
    return np.stack([e0 + o0, e1 + o1, e1 - o1, e0 - o0], axis=-1)


_FWD_SHIFT = SCALE_BITS + 2 + 2 * COS_BITS
_INV_MID = 8
_INV_SHIFT = SCALE_BITS + 2 + 2 * COS_BITS - _INV_MID


def fdct4x4(block) -> np.ndarray:
    """Forward fixed-point DCT of ``(..., 4, 4)`` integer blocks."""
    x = np.asarray(block, dtype=np.int64)
    rows = _fdct_1d(x)
    cols = np.swapaxes(_fdct_1d(np.swapaxes(rows, -1, -2)), -1, -2)
    return ((cols * SCALE + (1 << (_FWD_SHIFT - 1))) >> _FWD_SHIFT).astype(np.int32)


def idct4x4(coeffs) -> np.ndarray:
    """Inverse fixed-point DCT; rounds to the nearest integer sample."""
    w = np.asarray(coeffs, dtype=np.int64) * SCALE
    cols = np.swapaxes(_idct_1d(np.swapaxes(w, -1, -2)), -1, -2)
    cols = (cols + (1 << (_INV_MID - 1))) >> _INV_MID
    rows = _idct_1d(cols)
    return ((rows + (1 << (_INV_SHIFT - 1))) >> _INV_SHIFT).astype(np.int32)


# -- reversible DCT -----------------------------------------------------------


def _rnd(t):
    return (t + (1 << (LIFT_BITS - 1))) >> LIFT_BITS


def _lift(u, v, a, b):
    u = u + _rnd(mul_const(v, a))
    v = v + _rnd(mul_const(u, b))
    u = u + _rnd(mul_const(v, a))
    return u, v


def _unlift(u, v, a, b):
    u = u - _rnd(mul_const(v, a))
    v = v - _rnd(mul_const(u, b))
    u = u - _rnd(mul_const(v, a))
    return u, v


def _fwd_rev_1d(x):
    x0, x1, x2, x3 = _split(x)
    s0, d0 = _lift(x0, x3, _L45A, _L45B)
    s1, d1 = _lift(x1, x2, _L45A, _L45B)
    X0, X2 = _lift(s0, s1, _L45A, _L45B)
    X1, X3 = _lift(-d0, -d1, _L8A, _L8B)
    return np.stack([X0, X1, -X2, -X3], axis=-1)


def _inv_rev_1d(X):
    X0, X1, X2, X3 = _split(X)
    s0, s1 = _unlift(X0, -X2, _L45A, _L45B)
    nd0, nd1 = _unlift(X1, -X3, _L8A, _L8B)
    x0, x3 = _unlift(s0, -nd0, _L45A, _L45B)
    x1, x2 = _unlift(s1, -nd1, _L45A, _L45B)
    return np.stack([x0, x1, x2, x3], axis=-1)


def fdct4x4_reversible(block) -> np.ndarray:
    x = np.asarray(block, dtype=np.int64)
    rows = _fwd_rev_1d(x)
    return np.swapaxes(_fwd_rev_1d(np.swapaxes(rows, -1, -2)), -1, -2).astype(np.int32)


def idct4x4_reversible(coeffs) -> np.ndarray:
    X = np.asarray(coeffs, dtype=np.int64)
    cols = np.swapaxes(_inv_rev_1d(np.swapaxes(X, -1, -2)), -1, -2)
    return _inv_rev_1d(cols).astype(np.int32)


# -- quantisation -------------------------------------------------------------


def quantize(coeffs, shifts) -> np.ndarray:
    """Round-half-away-from-zero division by ``2**shift``."""
    x = np.asarray(coeffs, dtype=np.int32)
    s = np.asarray(shifts, dtype=np.int32)
    half = (np.int32(1) << s) >> 1
    q = (np.abs(x) + half) >> s
    return np.where(x < 0, -q, q).astype(np.int32)


def dequantize(q, shifts) -> np.ndarray:
    return np.asarray(q, dtype=np.int32) << np.asarray(shifts, dtype=np.int32)


DEFAULT_LUMA = (0, 1, 1, 2, 1, 2, 2, 3, 2, 2, 3, 3, 3, 3, 3, 4)
DEFAULT_CHROMA = tuple(min(s + 1, MAX_SHIFT) for s in DEFAULT_LUMA)


@dataclass(frozen=True)
class QuantTables:
    """Shift amounts for the luma (Y, Dg) and chroma (Cb, Cr) classes.

    Both tuples are indexed by zigzag position.
    """

    luma: tuple[int, ...] = DEFAULT_LUMA
    chroma: tuple[int, ...] = DEFAULT_CHROMA

    def __post_init__(self):
        for name in ("luma", "chroma"):
            t = tuple(int(v) for v in getattr(self, name))
            if len(t) != 16:
                raise ValueError(f"{name} table needs 16 shifts, got {len(t)}")
            if any(v < 0 or v > MAX_SHIFT for v in t):
                raise ValueError(f"{name} shifts must lie in [0, {MAX_SHIFT}]")
            object.__setattr__(self, name, t)

    @property
    def lossless(self) -> bool:
        return not any(self.luma) and not any(self.chroma)

    def raster(self, cls: str) -> np.ndarray:
        """4x4 raster-order shift matrix for ``"luma"`` or ``"chroma"``."""
        out = np.empty(16, dtype=np.int32)
        out[ZIGZAG] = getattr(self, cls)
        return out.reshape(4, 4)

    def plane_shifts(self) -> np.ndarray:
        """``(4, 4, 4)`` raster shifts for planes Y, Dg, Cb, Cr."""
        lu, ch = self.raster("luma"), self.raster("chroma")
        return np.stack([lu, lu, ch, ch])


def default_tables() -> QuantTables:
    return QuantTables()


def lossless_tables() -> QuantTables:
    return QuantTables((0,) * 16, (0,) * 16)


def parse_tables(text: str) -> QuantTables:
    """Parse ``luma = ...`` / ``chroma = ...`` lines (16 integers each)."""
    vals: dict[str, tuple[int, ...]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].split(";", 1)[0].strip()
        if not line or (line.startswith("[") and line.endswith("]")):
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value")
        key, val = (p.strip().lower() for p in line.split("=", 1))
        if key not in ("luma", "chroma"):
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        try:
            vals[key] = tuple(int(t) for t in re.split(r"[,\s]+", val) if t)
        except ValueError:
            raise ValueError(f"line {lineno}: non-integer shift") from None
    missing = {"luma", "chroma"} - vals.keys()
    if missing:
        raise ValueError(f"missing table(s): {', '.join(sorted(missing))}")
    return QuantTables(vals["luma"], vals["chroma"])


def load_tables(path) -> QuantTables:
    return parse_tables(Path(path).read_text())


def format_tables(tables: QuantTables) -> str:
    return "luma = %s\nchroma = %s\n" % (
        ",".join(map(str, tables.luma)),
        ",".join(map(str, tables.chroma)),
    )
