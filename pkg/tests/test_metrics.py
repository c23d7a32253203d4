import io
import math

import numpy as np
import pytest

from capsule_codec.metrics import (
    METRIC_COLUMNS,
    aggregate,
    compression_ratio,
    frame_metrics,
    mse,
    psnr,
    read_metrics_csv,
    saved_fraction,
    write_metrics_csv,
)


def test_cr():
    assert compression_ratio(819200, 142500) == pytest.approx(5.7488, abs=1e-4)
    assert compression_ratio(10, 10) == 1.0
    assert round(100 * saved_fraction(5.748), 1) == 82.6
    with pytest.raises(ValueError):
        compression_ratio(10, 0)


def test_mse_psnr():
    a = np.zeros((8, 8), np.uint8)
    assert mse(a, a) == 0 and psnr(0) == math.inf
    assert mse(a, a + 255) == 65025 and psnr(65025) == pytest.approx(0.0)
    assert mse(a, a + 2) == 4 and psnr(4) == pytest.approx(42.11, abs=0.01)
    assert psnr(4) - psnr(16) == pytest.approx(6.02, abs=0.01)
    with pytest.raises(ValueError):
        mse(a, np.zeros((4, 4)))


def test_csv_roundtrip():
    a = np.zeros((8, 8), np.uint8)
    rows = [frame_metrics("x", a, a + 1, 100), frame_metrics("y", a, a, 200)]
    buf = io.StringIO()
    write_metrics_csv(rows, buf)
    assert buf.getvalue().splitlines()[0] == ",".join(METRIC_COLUMNS)
    back = read_metrics_csv(io.StringIO(buf.getvalue()))
    assert back[1].psnr == math.inf and back[0].cr == pytest.approx(5.12)


def test_aggregate_total_ratio():
    a = np.zeros((8, 8), np.uint8)
    rows = [frame_metrics("x", a, a, 100), frame_metrics("y", a, a, 300)]
    agg = aggregate(rows)
    assert agg["cr_total"] == pytest.approx(1024 / 400)
    assert agg["cr_mean"] == pytest.approx((5.12 + 512 / 300) / 2)
