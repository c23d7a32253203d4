"""Seeded synthetic capsule-endoscopy-like imagery and study traces.

Stands in for clinical data that cannot be bundled. Everything is driven by
``numpy.random.Generator`` seeds so corpora are byte-reproducible.

* :func:`tissue_rgb` - smooth vignetted mucosa-like texture with sensor noise.
* :func:`render_bubbles` - bright-rimmed bubbles with a specular highlight.
* :func:`bubble_scene` - tissue + non-overlapping bubbles + exact ground truth.
* :func:`coverage_ladder` - one base frame at increasing bubble coverage.
* :func:`study_trace` - per-frame CR / pathology traces for the controller.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .controller import StudyTrace, TraceRecord

SIZE = 320


def _octave_noise(rng, shape, sigmas, amps):
    """Sum of unit-variance periodic Gaussian-smoothed noise fields.

    Sigmas are given for a ``SIZE`` frame and scale with the frame width.
    """
    out = np.zeros(shape)
    scale = shape[1] / SIZE
    for s, a in zip(sigmas, amps):
        spec = np.fft.rfft2(rng.standard_normal(shape))
        n = np.fft.irfft2(ndimage.fourier_gaussian(spec, s * scale, n=shape[1]), s=shape)
        n -= n.mean()
        n /= n.std() + 1e-12
        out += a * n
    return out


def tissue_rgb(rng: np.random.Generator, size: int = SIZE, noise: float = 1.0, detail: float = 0.7) -> np.ndarray:
    """Mucosa-like RGB frame: folds, fine texture, vignette and sensor noise."""
    h = w = size
    yy, xx = np.mgrid[0:h, 0:w] / size
    base = _octave_noise(rng, (h, w), (40, 20, 10), (14, 8, 4))
    # folds: a few soft ridges with random orientation
    folds = np.zeros((h, w))
    for _ in range(rng.integers(2, 5)):
        ang = rng.uniform(0, np.pi)
        freq = rng.uniform(2.0, 5.0)
        ph = rng.uniform(0, 2 * np.pi)
        folds += np.sin(2 * np.pi * freq * (xx * np.cos(ang) + yy * np.sin(ang)) + ph)
    folds = 9 * folds / 2
    fine = detail * _octave_noise(rng, (h, w), (3.0, 1.5), (4.0, 2.0))
    lum = base + folds + fine
    cy, cx = rng.uniform(0.4, 0.6, 2)
    r2 = ((yy - cy) ** 2 + (xx - cx) ** 2) / 0.5
    vignette = np.clip(1.0 - 0.55 * r2, 0.25, 1.0)
    tint = np.array([rng.uniform(165, 200), rng.uniform(90, 115), rng.uniform(70, 95)])
    chroma = _octave_noise(rng, (h, w), (30,), (6,))
    rgb = np.empty((h, w, 3))
    rgb[..., 0] = (tint[0] + 1.3 * lum + chroma) * vignette
    rgb[..., 1] = (tint[1] + 1.0 * lum - 0.5 * chroma) * vignette
    rgb[..., 2] = (tint[2] + 0.8 * lum - 0.3 * chroma) * vignette
    rgb += noise * rng.standard_normal(rgb.shape)
    return np.clip(np.rint(rgb), 0, 255).astype(np.uint8)


@dataclass(frozen=True)
class Bubble:
    x: float
    y: float
    r: float


def render_bubbles(rgb: np.ndarray, bubbles, rng: np.random.Generator) -> np.ndarray:
    """Composite bubbles onto an RGB image (returns a new array).

    Each bubble: a bright rim band, a faintly brightened interior with
    shimmer, and an arc-shaped specular reflection concentric with the rim
    in the upper-left quadrant.
    """
    out = rgb.astype(np.float64)
    h, w = rgb.shape[:2]
    for b in bubbles:
        x0, x1 = int(max(0, b.x - b.r - 2)), int(min(w, b.x + b.r + 3))
        y0, y1 = int(max(0, b.y - b.r - 2)), int(min(h, b.y + b.r + 3))
        if x0 >= x1 or y0 >= y1:
            continue
        yy, xx = np.mgrid[y0:y1, x0:x1]
        d = np.hypot(xx - b.x, yy - b.y)
        rim_w = max(2.5, 0.22 * b.r)
        inside = np.clip(b.r + 0.5 - d, 0, 1)  # anti-aliased disc
        rim = inside * np.clip((d - (b.r - rim_w)) + 0.5, 0, 1)
        shimmer = 10 * np.sin(d * 1.7 + rng.uniform(0, 6.3))
        add = inside * (20 + shimmer) + rim * 55
        # specular arc: soft band at 0.6 r spanning ~70 degrees up-left
        theta = np.arctan2(yy - b.y, xx - b.x)
        arc = np.exp(-0.5 * ((theta + 2.36) / 0.6) ** 2)
        band = np.exp(-0.5 * ((d - 0.6 * b.r) / max(0.8, 0.08 * b.r)) ** 2)
        spec = 60 * arc * band * inside
        patch = out[y0:y1, x0:x1]
        patch += (add + spec)[..., None] * np.array([0.85, 1.0, 1.0])
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def disc_mask(bubbles, width: int, height: int) -> np.ndarray:
    """Pixel-centre rasterisation of the union of discs."""
    m = np.zeros((height, width), dtype=bool)
    for b in bubbles:
        x0, x1 = max(0, int(np.floor(b.x - b.r))), min(width, int(np.ceil(b.x + b.r)) + 1)
        y0, y1 = max(0, int(np.floor(b.y - b.r))), min(height, int(np.ceil(b.y + b.r)) + 1)
        if x0 >= x1 or y0 >= y1:
            continue
        yy, xx = np.mgrid[y0:y1, x0:x1]
        m[y0:y1, x0:x1] |= (xx - b.x) ** 2 + (yy - b.y) ** 2 <= b.r * b.r
    return m


def place_bubbles(
    rng: np.random.Generator,
    n: int,
    size: int = SIZE,
    r_range=(5.0, 25.0),
    gap: float = 4.0,
    margin: float = 2.0,
    tries: int = 4000,
) -> list[Bubble]:
    """Rejection-sample up to ``n`` non-overlapping bubbles fully inside the frame."""
    out: list[Bubble] = []
    for _ in range(tries):
        if len(out) >= n:
            break
        r = rng.uniform(*r_range)
        x = rng.uniform(r + margin, size - r - margin)
        y = rng.uniform(r + margin, size - r - margin)
        if all(np.hypot(x - b.x, y - b.y) >= r + b.r + gap for b in out):
            out.append(Bubble(float(x), float(y), float(r)))
    return out


@dataclass
class Scene:
    rgb: np.ndarray
    bubbles: list[Bubble]
    coverage: float
    meta: dict = field(default_factory=dict)


def bubble_scene(rng: np.random.Generator, n_bubbles: int, size: int = SIZE, r_range=(5.0, 25.0)) -> Scene:
    base = tissue_rgb(rng, size)
    bubbles = place_bubbles(rng, n_bubbles, size, r_range)
    rgb = render_bubbles(base, bubbles, rng)
    cov = float(disc_mask(bubbles, size, size).mean())
    return Scene(rgb, bubbles, cov)


def coverage_ladder(
    seed: int = 0, levels=(0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6), size: int = SIZE, r_range=(8.0, 28.0)
) -> list[Scene]:
    """Bubbles added to one base frame until each target coverage is reached.

    Bubbles may overlap here (dense clusters); each rung's recorded coverage
    is the exact rasterised union.
    """
    rng = np.random.default_rng(seed)
    base = tissue_rgb(rng, size)
    placed: list[Bubble] = []
    mask = np.zeros((size, size), dtype=bool)
    scenes = []
    for target in levels:
        guard = 0
        while mask.mean() < target and guard < 10000:
            guard += 1
            r = rng.uniform(*r_range)
            x, y = rng.uniform(r, size - r, 2)
            # prefer free space so coverage actually grows
            if mask[int(y), int(x)] and guard % 4:
                continue
            b = Bubble(float(x), float(y), float(r))
            placed.append(b)
            mask |= disc_mask([b], size, size)
        render_rng = np.random.default_rng([seed, len(placed)])
        rgb = render_bubbles(base, placed, render_rng)
        scenes.append(Scene(rgb, list(placed), float(mask.mean()), {"target": target}))
    return scenes


def study_trace(
    rng: np.random.Generator,
    n_frames: int = 1200,
    low_fraction: float = 0.3,
    high_cr=(3.2, 8.0),
    low_cr=(1.8, 3.4),
    mean_regime: int = 40,
    pathology_episodes: int = 6,
    episode_len=(1, 12),
) -> StudyTrace:
    """Regime-switching CR trace with pathology episodes.

    Low-CR (bubble) regimes take roughly ``low_fraction`` of the frames.
    Pathology episodes have lengths drawn from ``episode_len`` (in frames at
    the nominal rate) and are placed anywhere in the study.
    """
    cr = np.empty(n_frames)
    view = np.empty(n_frames, dtype=object)
    i = 0
    while i < n_frames:
        low = rng.random() < low_fraction
        length = int(rng.geometric(1.0 / mean_regime))
        lo, hi = low_cr if low else high_cr
        seg = rng.uniform(lo, hi, length)
        cr[i : i + length] = seg[: n_frames - i]
        view[i : i + length] = "bubbles" if low else "good"
        i += length
    path = np.zeros(n_frames, dtype=bool)
    for _ in range(pathology_episodes):
        length = int(rng.integers(episode_len[0], episode_len[1] + 1))
        start = int(rng.integers(0, max(1, n_frames - length)))
        path[start : start + length] = True
    return StudyTrace(
        [TraceRecord(j, float(round(cr[j], 4)), bool(path[j]), str(view[j])) for j in range(n_frames)]
    )


def constant_trace(cr: float, n_frames: int) -> StudyTrace:
    return StudyTrace([TraceRecord(i, cr, False, "good") for i in range(n_frames)])


# -- corpus on disk ----------------------------------------------------------


def write_corpus(out_dir, kind: str = "tissue", count: int = 10, seed: int = 0, size: int = SIZE) -> Path:
    """Write a synthetic corpus plus ``manifest.csv``.

    ``kind``: ``tissue`` (Bayer PGM frames), ``bubbles`` (RGB PPM scenes
    with ground-truth circles in ``circles.json``), ``ladder`` (coverage
    ladder, RGB PPM) or ``traces`` (trace CSVs).
    """
    from .frame import mosaic_rggb, save_rgb, store_frame

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = out / "manifest.csv"
    rows = []
    if kind == "tissue":
        for i in range(count):
            rng = np.random.default_rng([seed, i])
            name = f"tissue_{i:04d}.pgm"
            store_frame(mosaic_rggb(tissue_rgb(rng, size)), out / name)
            rows.append({"file": name, "seed": seed, "index": i})
    elif kind == "bubbles":
        truth = {}
        for i in range(count):
            rng = np.random.default_rng([seed, i])
            sc = bubble_scene(rng, int(rng.integers(0, 21)), size)
            name = f"bubbles_{i:04d}.ppm"
            save_rgb(sc.rgb, out / name)
            truth[name] = [[b.x, b.y, b.r] for b in sc.bubbles]
            rows.append({"file": name, "bubbles": len(sc.bubbles), "coverage": f"{sc.coverage:.6f}"})
        (out / "circles.json").write_text(json.dumps(truth, indent=1))
    elif kind == "ladder":
        for j, sc in enumerate(coverage_ladder(seed, size=size)):
            name = f"ladder_{j:02d}.ppm"
            save_rgb(sc.rgb, out / name)
            rows.append(
                {"file": name, "target": sc.meta["target"], "bubbles": len(sc.bubbles), "coverage": f"{sc.coverage:.6f}"}
            )
    elif kind == "traces":
        for i in range(count):
            rng = np.random.default_rng([seed, i])
            name = f"study_{i:03d}.csv"
            tr = study_trace(rng)
            tr.save(out / name)
            rows.append({"file": name, "frames": len(tr), "low_cr_fraction": f"{tr.fraction_below(3.6):.4f}"})
    else:
        raise ValueError(f"unknown corpus kind {kind!r}")
    with manifest.open("w", newline="") as fh:
        if rows:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
    return out
