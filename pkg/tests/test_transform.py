import math

import numpy as np
import pytest

from capsule_codec.transform import (
    COS_1,
    COS_2,
    COS_3,
    SCALE,
    QuantTables,
    default_tables,
    dequantize,
    fdct4x4,
    fdct4x4_reversible,
    format_tables,
    idct4x4,
    idct4x4_reversible,
    lossless_tables,
    mul_const,
    parse_tables,
    quantize,
    signed_digits,
)
from oracles import dct2_ortho, quantize_ref


def test_scale_matrix_values():
    k = [1, math.sqrt(2), math.sqrt(2), math.sqrt(2)]
    ref = np.array([[round(k[i] * k[j] * 4096) for j in range(4)] for i in range(4)])
    assert np.array_equal(SCALE, ref)
    assert set(SCALE.ravel().tolist()) == {4096, 5793, 8192}


def test_cosine_constants():
    for c, ang in ((COS_1, math.pi / 8), (COS_2, math.pi / 4), (COS_3, 3 * math.pi / 8)):
        assert c == round(math.cos(ang) * 2**15)


def test_shift_add_multiply(rng):
    x = rng.integers(-5000, 5000, 1000)
    for c in (COS_1, COS_2, COS_3, 6787, -11585, 1):
        assert np.array_equal(mul_const(x, signed_digits(c)), x * c)


def test_zero_and_constant():
    assert not fdct4x4(np.zeros((4, 4), int)).any()
    assert not idct4x4(np.zeros((4, 4), int)).any()
    for c in (-255, -1, 1, 17, 128, 383):
        X = fdct4x4(np.full((4, 4), c))
        assert X[0, 0] == 4 * c and not X.ravel()[1:].any()
        assert np.abs(idct4x4(X) - c).max() <= 1


def test_against_float_oracle(rng):
    b = rng.integers(-255, 384, (1000, 4, 4))
    X = fdct4x4(b)
    ref = np.array([dct2_ortho(x) for x in b])
    assert np.abs(X - ref).max() <= 1
    assert np.abs(idct4x4(X) - b).max() <= 1


def test_reversible_exact(rng):
    b = rng.integers(-255, 384, (5000, 4, 4))
    assert np.array_equal(idct4x4_reversible(fdct4x4_reversible(b)), b)
    # it is still a DCT, only rounded differently
    ref = np.array([dct2_ortho(x) for x in b[:200]])
    assert np.abs(fdct4x4_reversible(b[:200]) - ref).max() <= 6


def test_energy_compaction():
    yy, xx = np.mgrid[0:4, 0:4]
    for gx, gy in ((3, 0), (0, 5), (4, 4), (-7, 2), (10, -9)):
        X = fdct4x4(100 + gx * xx + gy * yy).astype(float)
        from capsule_codec.entropy import zigzag

        z = zigzag(X) ** 2
        assert z[:6].sum() >= 0.9 * z.sum()


def test_quantize_examples():
    assert quantize(0, 5) == 0
    assert quantize(9, 2) == 2 and dequantize(2, 2) == 8
    assert quantize(-9, 2) == -2
    assert quantize(6, 2) == 2  # half rounds away from zero
    assert quantize(-6, 2) == -2


def test_quantize_exhaustive():
    x = np.arange(-1024, 1025)
    for s in range(9):
        q = quantize(x, s)
        assert q.tolist() == [quantize_ref(int(v), s) for v in x]
        err = np.abs(dequantize(q, s) - x)
        assert err.max() <= (1 << s >> 1)
        if s == 0:
            assert np.array_equal(q, x)


def test_default_tables():
    t = default_tables()
    assert t.luma == (0, 1, 1, 2, 1, 2, 2, 3, 2, 2, 3, 3, 3, 3, 3, 4)
    assert t.chroma == tuple(v + 1 for v in t.luma)
    assert t.raster("luma")[3, 3] == 4 and t.raster("luma")[0, 1] == 1
    assert lossless_tables().lossless and not t.lossless
    assert t.plane_shifts().shape == (4, 4, 4)


def test_table_file_roundtrip():
    t = QuantTables(tuple(range(16)[:9]) + (8,) * 7, (2,) * 16)
    assert parse_tables(format_tables(t)) == t
    txt = "# calibrated\n[tables]\nluma = 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0\nchroma=1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1\n"
    assert parse_tables(txt).chroma == (1,) * 16


@pytest.mark.parametrize(
    "txt",
    ["luma = 1 2 3\nchroma = " + "0 " * 16, "luma = " + "9 " * 16 + "\nchroma = " + "0 " * 16, "luma = " + "0 " * 16, "foo = 1\n", "luma 1 2"],
)
def test_table_errors(txt):
    with pytest.raises(ValueError):
        parse_tables(txt)
