import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capsule_codec.entropy import (
    MAX_UNARY,
    ZIGZAG,
    BitReader,
    BitWriter,
    CorruptStreamError,
    RiceContext,
    decode_block,
    decode_planes,
    decode_symbols,
    encode_block,
    encode_planes,
    encode_symbols,
    map_signed,
    rice_decode,
    rice_encode,
    unmap_signed,
    unzigzag,
    zigzag,
)
import oracles


def test_zigzag_permutation():
    assert zigzag(np.arange(16).reshape(4, 4)).tolist() == [0, 1, 4, 8, 5, 2, 3, 6, 9, 12, 13, 10, 7, 11, 14, 15]
    assert sorted(ZIGZAG.tolist()) == list(range(16)) and ZIGZAG[0] == 0
    assert (zigzag(np.full((4, 4), 7)) == 7).all()


def test_zigzag_roundtrip(rng):
    b = rng.integers(-500, 500, (100, 4, 4))
    assert np.array_equal(unzigzag(zigzag(b)), b)


def test_map_signed():
    assert [map_signed(v) for v in (0, -1, 1, -2, 2)] == [0, 1, 2, 3, 4]
    v = np.arange(-(1 << 14), (1 << 14) + 1)
    u = map_signed(v)
    assert np.array_equal(unmap_signed(u), v)
    assert sorted(u.tolist()) == list(range(len(v)))


def test_rice_examples():
    assert rice_encode(0, 0) == "0"
    assert rice_encode(9, 2) == "11001"
    assert rice_decode("11001", 2) == 9


def test_rice_random(rng):
    w = BitWriter()
    pairs = []
    for _ in range(100_000):
        k = int(rng.integers(0, 25))
        u = int(rng.integers(0, 1 << min(k + 6, 30)))
        pairs.append((u, k))
        w.write_rice(u, k)
    words = w.flush()
    r = BitReader(words)
    assert [r.read_rice(k) for _, k in pairs] == [u for u, _ in pairs]


def test_rice_against_bitstring_oracle(rng):
    for _ in range(300):
        k = int(rng.integers(0, 12))
        u = int(rng.integers(0, 5000))
        assert rice_encode(u, k) == oracles.rice_bits(u, k)


def test_runaway_unary():
    words = np.full(MAX_UNARY // 32 + 4, 0xFFFFFFFF, dtype=np.uint32)
    with pytest.raises(CorruptStreamError):
        BitReader(words).read_rice(0)
    with pytest.raises(CorruptStreamError):
        BitReader([0xFFFFFFFF]).read_rice(0)


def test_bit_packing_msb_first():
    w = BitWriter()
    w.write(1, 1)
    w.write(0b0101, 4)
    words = w.flush()
    assert words.tolist() == [0b10101 << 27]
    w = BitWriter()
    for _ in range(3):
        w.write(0xABCDE, 20)
    assert w.bits_written == 60
    words = w.flush()
    assert len(words) == 2
    r = BitReader(words)
    assert [r.read(20) for _ in range(3)] == [0xABCDE] * 3
    assert r.bits_left == 4 and r.read(4) == 0
    with pytest.raises(CorruptStreamError):
        r.read(1)


def test_k_invariant():
    ctx = RiceContext()
    rng = np.random.default_rng(3)
    for u in rng.geometric(0.05, 5000):
        ctx.update(int(u))
        A, N, k = ctx.A, ctx.N, ctx.k
        assert 1 <= N < 64
        assert N << k >= A and (k == 0 or N << (k - 1) < A)


def test_k_adapts_upwards():
    ctx = RiceContext()
    k0 = ctx.k
    ks = []
    for _ in range(64):
        ctx.update(5000)
        ks.append(ctx.k)
    assert max(ks) > k0 and ks == sorted(ks)


def test_zero_block_two_bits():
    w = BitWriter()
    encode_block(np.zeros(16, int), RiceContext(), RiceContext(), 0, w)
    assert w.bits_written == 2
    assert BitReader(w.flush()).read(2) == 0b01


def test_block_matches_oracle_and_roundtrips(rng):
    w = BitWriter()
    dc, ac = RiceContext(), RiceContext()
    odc, oac = oracles.Ctx(), oracles.Ctx()
    blocks = rng.integers(-40, 40, (300, 16)) * (rng.random((300, 16)) < 0.4)
    ref = []
    prev = 0
    for b in blocks:
        encode_block(b, dc, ac, prev, w)
        ref.append(oracles.block_bits(b, odc, oac, prev))
        prev = int(b[0])
    n = w.bits_written
    words = w.flush()
    assert words.tolist() == oracles.pack_words("".join(ref))
    assert n == len("".join(ref))
    r = BitReader(words)
    dc, ac = RiceContext(), RiceContext()
    prev = 0
    for b in blocks:
        out = decode_block(r, dc, ac, prev)
        assert np.array_equal(out, b)
        prev = int(out[0])


def _planes(rng, nb=400, p_zero=0.7, static_runs=True):
    zz = rng.integers(-60, 60, (4, nb, 16)) * (rng.random((4, nb, 16)) < 0.3)
    zz[..., 0] = rng.integers(-100, 300, (4, nb))
    if static_runs:
        # long stretches of identical-DC zero blocks exercise the skip runs
        for p in range(4):
            s = int(rng.integers(0, nb // 2))
            e = s + int(rng.integers(10, nb // 2))
            zz[p, s:e] = 0
            zz[p, s:e, 0] = zz[p, s - 1, 0] if s else 128
    return zz.astype(np.int32)


def test_planes_match_reference_bits(rng):
    ctxs = np.array([0, 0, 1, 1])
    for trial in range(6):
        zz = _planes(rng)
        prev = np.array([128, 0, 64, 64])
        words, nbits = encode_planes(zz, ctxs, prev)
        bits = oracles.planes_bits(zz, ctxs, prev)
        assert nbits == len(bits)
        assert words.tolist() == oracles.pack_words(bits)
        assert np.array_equal(decode_planes(words, 4, zz.shape[1], ctxs, prev), zz)


def test_static_planes_cost():
    zz = np.zeros((4, 1600, 16), np.int32)
    zz[[0, 2, 3], :, 0] = 128
    words, nbits = encode_planes(zz, [0, 0, 1, 1], [128, 0, 128, 128])
    assert nbits == len(oracles.planes_bits(zz, [0, 0, 1, 1], [128, 0, 128, 128]))
    assert nbits < 100


def test_planes_random_10k_blocks(rng):
    zz = rng.integers(-300, 300, (4, 2500, 16)).astype(np.int32)
    zz *= (rng.random(zz.shape) < 0.5)
    words, _ = encode_planes(zz, [0, 0, 1, 1], [0, 0, 0, 0])
    assert np.array_equal(decode_planes(words, 4, 2500, [0, 0, 1, 1], [0, 0, 0, 0]), zz)


def test_planes_bit_accounting(rng):
    zz = _planes(rng, 50)
    words, nbits = encode_planes(zz, [0, 0, 1, 1], [0] * 4)
    assert len(words) == -(-nbits // 32)


def test_truncated_and_padding_errors(rng):
    zz = _planes(rng, 200)
    words, nbits = encode_planes(zz, [0, 0, 1, 1], [0] * 4)
    with pytest.raises(CorruptStreamError):
        decode_planes(words[:-3], 4, 200, [0, 0, 1, 1], [0] * 4)
    extra = np.concatenate([words, np.zeros(1, np.uint32)])
    with pytest.raises(CorruptStreamError):
        decode_planes(extra, 4, 200, [0, 0, 1, 1], [0] * 4)
    if nbits % 32:
        bad = words.copy()
        bad[-1] |= 1
        with pytest.raises(CorruptStreamError):
            decode_planes(bad, 4, 200, [0, 0, 1, 1], [0] * 4)


def test_symbol_stream_million(rng):
    u = rng.geometric(0.02, 1_000_000) - 1
    u[::5000] = rng.integers(0, 1 << 15, u[::5000].shape)
    words, ks = encode_symbols(u)
    assert np.array_equal(decode_symbols(words, u.size), u)
    # k history agrees with the plain-Python context
    c = oracles.Ctx()
    for i in range(2000):
        assert ks[i] == c.k
        c.update(int(u[i]))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.lists(st.integers(-2000, 2000), min_size=16, max_size=16), min_size=1, max_size=40))
def test_block_roundtrip_property(blocks):
    zz = np.array(blocks, dtype=np.int32)[None].repeat(2, axis=0)
    words, _ = encode_planes(zz, [0, 1], [0, 0])
    assert np.array_equal(decode_planes(words, 2, len(blocks), [0, 1], [0, 0]), zz)


def test_encoder_limits():
    with pytest.raises(ValueError):
        encode_planes(np.full((1, 1, 16), 1 << 13, np.int32), [0], [0])
    with pytest.raises(ValueError):
        encode_symbols([MAX_UNARY + 1])
    with pytest.raises(ValueError):
        BitWriter().write_rice(MAX_UNARY + 1, 0)
