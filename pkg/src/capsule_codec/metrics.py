"""Compression ratio, MSE and PSNR, plus CSV metric reports.

PSNR is measured on the Bayer mosaic itself (the codec never demosaics),
so figures are not directly comparable with PSNR computed on RGB.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, fields
from typing import Iterable, TextIO

import numpy as np


def compression_ratio(original_bits: float, compressed_bits: float) -> float:
    if compressed_bits <= 0 or original_bits <= 0:
        raise ValueError("sizes must be positive")
    return original_bits / compressed_bits


def saved_fraction(cr: float) -> float:
    return 1.0 - 1.0 / cr


def mse(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))


def psnr(mse_value: float, max_value: float = 255.0) -> float:
    """Peak signal-to-noise ratio in dB; ``inf`` for a lossless match."""
    if mse_value < 0:
        raise ValueError("negative MSE")
    if mse_value == 0:
        return math.inf
    return 10.0 * math.log10(max_value * max_value / mse_value)


@dataclass(frozen=True)
class FrameMetrics:
    name: str
    width: int
    height: int
    bits_original: int
    bits_compressed: int
    cr: float
    saved_fraction: float
    mse: float
    psnr: float


def frame_metrics(name: str, original, reconstructed, bits_compressed: int, bits_per_sample: int = 8) -> FrameMetrics:
    original = np.asarray(original)
    h, w = original.shape[:2]
    bits_original = original.size * bits_per_sample
    cr = compression_ratio(bits_original, bits_compressed)
    m = mse(original, reconstructed)
    return FrameMetrics(name, w, h, bits_original, bits_compressed, cr, saved_fraction(cr), m, psnr(m))


def aggregate(rows: Iterable[FrameMetrics]) -> dict:
    """Batch summary: CR from summed sizes, mean per-frame CR and PSNR."""
    rows = list(rows)
    if not rows:
        raise ValueError("no rows")
    total_o = sum(r.bits_original for r in rows)
    total_c = sum(r.bits_compressed for r in rows)
    finite = [r.psnr for r in rows if math.isfinite(r.psnr)]
    return {
        "frames": len(rows),
        "cr_total": compression_ratio(total_o, total_c),
        "cr_mean": float(np.mean([r.cr for r in rows])),
        "psnr_mean": float(np.mean(finite)) if finite else math.inf,
        "mse_mean": float(np.mean([r.mse for r in rows])),
    }


METRIC_COLUMNS = [f.name for f in fields(FrameMetrics)]


def _fmt(v):
    if isinstance(v, float):
        if math.isinf(v):
            return "inf"
        return f"{v:.6g}"
    return v


def write_metrics_csv(rows: Iterable[FrameMetrics], fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(METRIC_COLUMNS)
    for r in rows:
        w.writerow([_fmt(v) for v in asdict(r).values()])


def read_metrics_csv(fh: TextIO) -> list[FrameMetrics]:
    rd = csv.reader(fh)
    header = next(rd)
    if header != METRIC_COLUMNS:
        raise ValueError("unexpected metrics header")
    out = []
    for row in rd:
        name, w, h, bo, bc, cr, sf, m, p = row
        out.append(FrameMetrics(name, int(w), int(h), int(bo), int(bc), float(cr), float(sf), float(m), float(p)))
    return out
