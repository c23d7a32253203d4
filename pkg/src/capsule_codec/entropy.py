"""Zigzag scan, adaptive Golomb-Rice coding and 32-bit word bit packing.

Bit conventions (normative):

* bits are packed MSB-first into 32-bit words; the final word is padded
  with zero bits;
* a Rice code of ``u`` with parameter ``k`` is ``u >> k`` one-bits, a zero
  bit, then the ``k`` low bits of ``u``;
* signed values are interleaved as ``v >= 0 -> 2v``, ``v < 0 -> -2v - 1``.

A :class:`RiceContext` keeps the accumulated mapped magnitude ``A`` and the
symbol count ``N``; ``k`` is the smallest value with ``N << k >= A``. Both
are halved when ``N`` reaches 64.

Block layout: Rice(DC - previous DC) under the DC context, one Zero-AC flag
bit (1 = every AC coefficient is zero), then, if the flag is 0, the 15 AC
values in zigzag order under the AC context.

Plane streams add an adaptive block-skip run mode on top of the block
layout (see :func:`encode_planes`).
"""

from __future__ import annotations

import numpy as np
from numba import njit

ZIGZAG = np.array([0, 1, 4, 8, 5, 2, 3, 6, 9, 12, 13, 10, 7, 11, 14, 15], dtype=np.intp)
UNZIGZAG = np.argsort(ZIGZAG)

RENORM_LIMIT = 64
MAX_K = 24
MAX_UNARY = 1 << 15
MAX_COEFF = 1 << 13

# block-skip run mode
RUN_SHIFT = 2
RUN_UP = 2
RUN_DOWN = 3
RUN_DECAY = 1
RUN_KMAX = 10


class CorruptStreamError(ValueError):
    """Bitstream ended early, held a runaway unary run or bad padding."""


def zigzag(block) -> np.ndarray:
    """Raster ``(..., 4, 4)`` or ``(..., 16)`` -> zigzag ``(..., 16)``."""
    b = np.asarray(block)
    return b.reshape(*b.shape[:-2], 16)[..., ZIGZAG] if b.shape[-2:] == (4, 4) else b[..., ZIGZAG]


def unzigzag(seq) -> np.ndarray:
    s = np.asarray(seq)
    return s[..., UNZIGZAG].reshape(*s.shape[:-1], 4, 4)


def map_signed(v):
    v = np.asarray(v, dtype=np.int64)
    out = np.where(v >= 0, v << 1, ((-v) << 1) - 1)
    return int(out) if out.ndim == 0 else out


def unmap_signed(u):
    u = np.asarray(u, dtype=np.int64)
    out = np.where(u & 1, -((u + 1) >> 1), u >> 1)
    return int(out) if out.ndim == 0 else out


# -- jitted primitives ----------------------------------------------------------
# writer state: [word index, bits pending, pending value, overflow flag, bits before flush]
# reader state: [bit position, error flag]


@njit(cache=True)
def _put(buf, st, value, n):
    if n == 0:
        return
    nacc = st[1]
    room = 32 - nacc
    if n < room:
        st[2] = (st[2] << n) | value
        st[1] = nacc + n
        return
    rem = n - room
    word = (st[2] << room) | (value >> rem)
    if st[0] < buf.shape[0]:
        buf[st[0]] = word & 0xFFFFFFFF
    else:
        st[3] = 1
    st[0] += 1
    st[2] = value & ((1 << rem) - 1)
    st[1] = rem


@njit(cache=True)
def _flush(buf, st):
    if st[1] > 0:
        _put(buf, st, 0, 32 - st[1])


@njit(cache=True)
def _get(words, nwords, rs, n):
    pos = rs[0]
    if pos + n > (nwords << 5):
        rs[1] = 1
        return 0
    rs[0] = pos + n
    if n == 0:
        return 0
    w = pos >> 5
    avail = 32 - (pos & 31)
    cur = np.int64(words[w]) & ((np.int64(1) << avail) - 1)
    if n <= avail:
        return cur >> (avail - n)
    rem = n - avail
    nxt = np.int64(words[w + 1])
    return (cur << rem) | (nxt >> (32 - rem))


@njit(cache=True)
def _rice_k(A, N):
    k = 0
    while (N << k) < A and k < MAX_K:
        k += 1
    return k


@njit(cache=True)
def _ctx_update(ctx, u):
    ctx[0] += u
    ctx[1] += 1
    if ctx[1] >= RENORM_LIMIT:
        ctx[0] >>= 1
        ctx[1] >>= 1


@njit(cache=True)
def _map(v):
    if v >= 0:
        return v << 1
    return ((-v) << 1) - 1


@njit(cache=True)
def _unmap(u):
    if u & 1:
        return -((u + 1) >> 1)
    return u >> 1


@njit(cache=True)
def _write_rice(buf, st, u, k):
    q = u >> k
    while q >= 32:
        _put(buf, st, 0xFFFFFFFF, 32)
        q -= 32
    _put(buf, st, ((np.int64(1) << q) - 1) << 1, q + 1)
    _put(buf, st, u & ((np.int64(1) << k) - 1), k)


@njit(cache=True)
def _read_rice(words, nwords, rs, k):
    total = nwords << 5
    q = 0
    while True:
        pos = rs[0]
        if pos >= total:
            rs[1] = 1
            return 0
        bit = (np.int64(words[pos >> 5]) >> (31 - (pos & 31))) & 1
        rs[0] = pos + 1
        if bit == 0:
            break
        q += 1
        if q > MAX_UNARY:
            rs[1] = 2
            return 0
    r = _get(words, nwords, rs, k)
    return (q << k) | r


@njit(cache=True)
def _encode_block(seq, dc_ctx, ac_ctx, prev_dc, buf, st):
    u = _map(np.int64(seq[0]) - prev_dc)
    _write_rice(buf, st, u, _rice_k(dc_ctx[0], dc_ctx[1]))
    _ctx_update(dc_ctx, u)
    zero_ac = True
    for i in range(1, 16):
        if seq[i] != 0:
            zero_ac = False
            break
    if zero_ac:
        _put(buf, st, 1, 1)
        return
    _put(buf, st, 0, 1)
    for i in range(1, 16):
        u = _map(np.int64(seq[i]))
        _write_rice(buf, st, u, _rice_k(ac_ctx[0], ac_ctx[1]))
        _ctx_update(ac_ctx, u)


@njit(cache=True)
def _decode_block(words, nwords, rs, dc_ctx, ac_ctx, prev_dc, out):
    u = _read_rice(words, nwords, rs, _rice_k(dc_ctx[0], dc_ctx[1]))
    if rs[1]:
        return
    _ctx_update(dc_ctx, u)
    out[0] = prev_dc + _unmap(u)
    flag = _get(words, nwords, rs, 1)
    if rs[1]:
        return
    if flag == 1:
        for i in range(1, 16):
            out[i] = 0
        return
    for i in range(1, 16):
        u = _read_rice(words, nwords, rs, _rice_k(ac_ctx[0], ac_ctx[1]))
        if rs[1]:
            return
        _ctx_update(ac_ctx, u)
        out[i] = _unmap(u)


@njit(cache=True)
def _is_static(seq, prev_dc):
    if seq[0] != prev_dc:
        return False
    for i in range(1, 16):
        if seq[i] != 0:
            return False
    return True


@njit(cache=True)
def _encode_planes(zz, plane_ctx, prev_init, buf, st):
    P = zz.shape[0]
    B = zz.shape[1]
    ctx = np.zeros((2, 2, 2), np.int64)
    ctx[:, :, 1] = 1
    kp = np.zeros(2, np.int64)
    for p in range(P):
        c = plane_ctx[p]
        dc_ctx = ctx[c, 0]
        ac_ctx = ctx[c, 1]
        prev = np.int64(prev_init[p])
        b = 0
        while b < B:
            kr = min(kp[c] >> RUN_SHIFT, RUN_KMAX)
            if kr == 0:
                blk = zz[p, b]
                static = _is_static(blk, prev)
                _encode_block(blk, dc_ctx, ac_ctx, prev, buf, st)
                prev = np.int64(blk[0])
                if static:
                    kp[c] += RUN_UP
                else:
                    kp[c] = max(0, kp[c] - RUN_DECAY)
                b += 1
                continue
            m = 1 << kr
            r = 0
            while r < m and b + r < B and _is_static(zz[p, b + r], prev):
                r += 1
            if r == m:
                _put(buf, st, 0, 1)
                b += m
                kp[c] += RUN_UP
                continue
            _put(buf, st, 1, 1)
            _put(buf, st, r, kr)
            b += r
            if b < B:
                blk = zz[p, b]
                _encode_block(blk, dc_ctx, ac_ctx, prev, buf, st)
                prev = np.int64(blk[0])
                b += 1
            kp[c] = max(0, kp[c] - RUN_DOWN)
    st[4] = (st[0] << 5) + st[1]
    _flush(buf, st)


@njit(cache=True)
def _decode_planes(words, nwords, out, plane_ctx, prev_init, rs):
    P = out.shape[0]
    B = out.shape[1]
    ctx = np.zeros((2, 2, 2), np.int64)
    ctx[:, :, 1] = 1
    kp = np.zeros(2, np.int64)
    for p in range(P):
        c = plane_ctx[p]
        dc_ctx = ctx[c, 0]
        ac_ctx = ctx[c, 1]
        prev = np.int64(prev_init[p])
        b = 0
        while b < B:
            kr = min(kp[c] >> RUN_SHIFT, RUN_KMAX)
            if kr == 0:
                blk = out[p, b]
                _decode_block(words, nwords, rs, dc_ctx, ac_ctx, prev, blk)
                if rs[1]:
                    return
                if _is_static(blk, prev):
                    kp[c] += RUN_UP
                else:
                    kp[c] = max(0, kp[c] - RUN_DECAY)
                prev = np.int64(blk[0])
                b += 1
                continue
            flag = _get(words, nwords, rs, 1)
            if rs[1]:
                return
            if flag == 0:
                m = 1 << kr
                if b + m > B:
                    rs[1] = 3
                    return
                for j in range(b, b + m):
                    out[p, j, 0] = prev
                    out[p, j, 1:] = 0
                b += m
                kp[c] += RUN_UP
                continue
            r = _get(words, nwords, rs, kr)
            if rs[1]:
                return
            if b + r > B:
                rs[1] = 3
                return
            for j in range(b, b + r):
                out[p, j, 0] = prev
                out[p, j, 1:] = 0
            b += r
            if b < B:
                blk = out[p, b]
                _decode_block(words, nwords, rs, dc_ctx, ac_ctx, prev, blk)
                if rs[1]:
                    return
                prev = np.int64(blk[0])
                b += 1
            kp[c] = max(0, kp[c] - RUN_DOWN)


@njit(cache=True)
def _encode_adaptive(us, buf, st, ks):
    ctx = np.zeros(2, np.int64)
    ctx[1] = 1
    for i in range(us.shape[0]):
        k = _rice_k(ctx[0], ctx[1])
        ks[i] = k
        _write_rice(buf, st, us[i], k)
        _ctx_update(ctx, us[i])
    st[4] = (st[0] << 5) + st[1]
    _flush(buf, st)


@njit(cache=True)
def _decode_adaptive(words, nwords, n, out, rs):
    ctx = np.zeros(2, np.int64)
    ctx[1] = 1
    for i in range(n):
        u = _read_rice(words, nwords, rs, _rice_k(ctx[0], ctx[1]))
        if rs[1]:
            return
        out[i] = u
        _ctx_update(ctx, u)


# -- Python-facing API ----------------------------------------------------------


class BitWriter:
    """Accumulates bits MSB-first into 32-bit words."""

    def __init__(self, capacity_words: int = 64):
        self._buf = np.zeros(max(int(capacity_words), 4), dtype=np.uint32)
        self._st = np.zeros(4, dtype=np.int64)
        self._closed = False

    def _reserve(self, nbits: int) -> None:
        need = int(self._st[0]) + (nbits >> 5) + 2
        if need > self._buf.shape[0]:
            grown = np.zeros(max(need, self._buf.shape[0] << 1), dtype=np.uint32)
            grown[: self._buf.shape[0]] = self._buf
            self._buf = grown

    @property
    def bits_written(self) -> int:
        return (int(self._st[0]) << 5) + int(self._st[1])

    def write(self, value: int, nbits: int) -> None:
        if not 0 <= nbits <= 32:
            raise ValueError("write at most 32 bits at a time")
        if value < 0 or value >> nbits:
            raise ValueError(f"{value} does not fit in {nbits} bits")
        self._reserve(nbits)
        _put(self._buf, self._st, value, nbits)

    def write_rice(self, u: int, k: int) -> None:
        if u < 0 or not 0 <= k <= MAX_K:
            raise ValueError("rice coding needs u >= 0 and 0 <= k <= 24")
        if (u >> k) > MAX_UNARY:
            raise ValueError("unary part exceeds the decoder's runaway limit")
        self._reserve((u >> k) + k + 1)
        _write_rice(self._buf, self._st, u, k)

    def flush(self) -> np.ndarray:
        """Pad the last word with zeros and return all words."""
        self._reserve(32)
        _flush(self._buf, self._st)
        return self._buf[: int(self._st[0])].copy()


class BitReader:
    """Reads bits MSB-first from a sequence of 32-bit words."""

    def __init__(self, words):
        self._words = np.ascontiguousarray(words, dtype=np.uint32)
        self._rs = np.zeros(2, dtype=np.int64)

    @property
    def bits_consumed(self) -> int:
        return int(self._rs[0])

    @property
    def bits_left(self) -> int:
        return (self._words.shape[0] << 5) - int(self._rs[0])

    def _check(self):
        if self._rs[1]:
            code = int(self._rs[1])
            self._rs[1] = 0
            raise CorruptStreamError("runaway unary run" if code == 2 else "read past end of stream")

    def read(self, nbits: int) -> int:
        v = _get(self._words, self._words.shape[0], self._rs, nbits)
        self._check()
        return int(v)

    def read_rice(self, k: int) -> int:
        v = _read_rice(self._words, self._words.shape[0], self._rs, k)
        self._check()
        return int(v)


class RiceContext:
    """Running (A, N) statistics selecting the Rice parameter."""

    def __init__(self, A: int = 0, N: int = 1):
        if A < 0 or N < 1:
            raise ValueError("need A >= 0 and N >= 1")
        self.state = np.array([A, N], dtype=np.int64)

    A = property(lambda self: int(self.state[0]))
    N = property(lambda self: int(self.state[1]))

    @property
    def k(self) -> int:
        return int(_rice_k(self.state[0], self.state[1]))

    def update(self, u: int) -> None:
        _ctx_update(self.state, u)

    def __repr__(self):
        return f"RiceContext(A={self.A}, N={self.N}, k={self.k})"


def _bits_str(words: np.ndarray, nbits: int) -> str:
    return "".join(format(int(w), "032b") for w in words)[:nbits]


def rice_encode(u: int, k: int) -> str:
    """Rice code of ``u`` as a string of '0'/'1'."""
    w = BitWriter()
    w.write_rice(u, k)
    n = w.bits_written
    return _bits_str(w.flush(), n)


def rice_decode(bits: str, k: int) -> int:
    if not bits or set(bits) - {"0", "1"}:
        raise ValueError("expected a non-empty bit string")
    padded = bits + "0" * (-len(bits) % 32)
    words = [int(padded[i : i + 32], 2) for i in range(0, len(padded), 32)]
    r = BitReader(words)
    u = r.read_rice(k)
    if r.bits_consumed != len(bits):
        raise ValueError("trailing bits after the code word")
    return u


def encode_block(seq, dc_ctx: RiceContext, ac_ctx: RiceContext, prev_dc: int, sink: BitWriter):
    """Code one zigzag-ordered block; contexts are updated in place and returned."""
    s = np.ascontiguousarray(seq, dtype=np.int32)
    if s.shape != (16,):
        raise ValueError("expected 16 zigzag coefficients")
    worst = int(np.abs(s.astype(np.int64)).sum() + abs(int(s[0]) - prev_dc)) * 2 + 16 * (MAX_K + 2)
    sink._reserve(worst)
    _encode_block(s, dc_ctx.state, ac_ctx.state, np.int64(prev_dc), sink._buf, sink._st)
    return dc_ctx, ac_ctx


def decode_block(source: BitReader, dc_ctx: RiceContext, ac_ctx: RiceContext, prev_dc: int) -> np.ndarray:
    out = np.zeros(16, dtype=np.int32)
    _decode_block(
        source._words, source._words.shape[0], source._rs, dc_ctx.state, ac_ctx.state, np.int64(prev_dc), out
    )
    source._check()
    return out


def encode_planes(zz, plane_ctx, prev_dc) -> tuple[np.ndarray, int]:
    """Code ``(planes, blocks, 16)`` zigzag coefficients into 32-bit words.

    ``plane_ctx[p]`` picks the context pair (0 or 1) for plane ``p`` and
    ``prev_dc[p]`` is the DC predictor at the start of that plane.

    Each context pair also tracks a skip-run parameter. While it is zero,
    blocks are coded exactly as in :func:`encode_block`. A block is static
    when its DC equals the predictor and all its AC coefficients are zero;
    static blocks raise the parameter and non-static ones lower it. Once the
    run parameter ``kr`` is positive, a ``0`` bit stands for ``2**kr`` static
    blocks, while ``1`` followed by a ``kr``-bit count ``r < 2**kr`` stands
    for ``r`` static blocks followed by one coded block (or the end of the
    plane).

    Returns ``(words, bits_written)``.
    """
    zz = np.ascontiguousarray(zz, dtype=np.int32)
    pc = np.ascontiguousarray(plane_ctx, dtype=np.int64)
    pd = np.ascontiguousarray(prev_dc, dtype=np.int64)
    if zz.ndim != 3 or zz.shape[2] != 16 or pc.shape[0] != zz.shape[0] or pd.shape[0] != zz.shape[0]:
        raise ValueError("shape mismatch between coefficients and plane parameters")
    # keeps every mapped value, DC differences included, within the unary limit
    if zz.size and np.abs(zz.astype(np.int64)).max() >= MAX_COEFF:
        raise ValueError(f"coefficients must lie within +-{MAX_COEFF - 1}")
    cap = max(64, zz.size >> 1)
    while True:
        buf = np.zeros(cap, dtype=np.uint32)
        st = np.zeros(5, dtype=np.int64)
        _encode_planes(zz, pc, pd, buf, st)
        if not st[3]:
            return buf[: int(st[0])].copy(), int(st[4])
        cap = int(st[0]) + 64


def decode_planes(words, planes: int, blocks: int, plane_ctx, prev_dc) -> np.ndarray:
    """Inverse of :func:`encode_planes`; checks that only zero padding is left over."""
    w = np.ascontiguousarray(words, dtype=np.uint32)
    out = np.zeros((planes, blocks, 16), dtype=np.int32)
    rs = np.zeros(2, dtype=np.int64)
    _decode_planes(
        w,
        w.shape[0],
        out,
        np.ascontiguousarray(plane_ctx, dtype=np.int64),
        np.ascontiguousarray(prev_dc, dtype=np.int64),
        rs,
    )
    if rs[1]:
        raise CorruptStreamError(
            {1: "payload ended before all blocks were decoded", 2: "runaway unary run"}.get(
                int(rs[1]), "skip run overruns the plane"
            )
        )
    left = (w.shape[0] << 5) - int(rs[0])
    if left >= 32:
        raise CorruptStreamError(f"{left} unused payload bits")
    if left:
        tail = _get(w, w.shape[0], rs, left)
        if tail:
            raise CorruptStreamError("non-zero padding bits")
    return out


def encode_symbols(us) -> tuple[np.ndarray, np.ndarray]:
    """Adaptive Rice coding of a non-negative stream under one context.

    Returns ``(words, k_used)``.
    """
    u = np.ascontiguousarray(us, dtype=np.int64)
    if u.size and (u.min() < 0 or u.max() > MAX_UNARY):
        raise ValueError(f"symbols must lie in [0, {MAX_UNARY}]")
    ks = np.zeros(u.shape[0], dtype=np.int64)
    cap = max(64, u.shape[0])
    while True:
        buf = np.zeros(cap, dtype=np.uint32)
        st = np.zeros(5, dtype=np.int64)
        _encode_adaptive(u, buf, st, ks)
        if not st[3]:
            return buf[: int(st[0])].copy(), ks
        cap = int(st[0]) + 64


def decode_symbols(words, n: int) -> np.ndarray:
    w = np.ascontiguousarray(words, dtype=np.uint32)
    out = np.zeros(n, dtype=np.int64)
    rs = np.zeros(2, dtype=np.int64)
    _decode_adaptive(w, w.shape[0], n, out, rs)
    if rs[1]:
        raise CorruptStreamError("symbol stream truncated or corrupt")
    return out
