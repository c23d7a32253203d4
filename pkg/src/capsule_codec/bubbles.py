"""Bubble detection and view coverage.

grayscale -> 5x5 median -> Canny -> gradient Hough circles -> disc union.

The Hough stage is the classic two-stage gradient method: every edge pixel
votes for centres along its gradient line (both directions, every radius
in range), peaks in the accumulator become candidate centres, and each
centre gets the radius with the most edge support in its radial histogram.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

from .frame import BayerFrame


@dataclass(frozen=True)
class HoughParams:
    radius_min: int = 3
    radius_max: int = 30
    min_center_distance: float = 10.0
    canny_high: float = 100.0
    accumulator_threshold: float = 23.0
    dp: float = 0.9

    def __post_init__(self):
        if not 0 < self.radius_min <= self.radius_max:
            raise ValueError("need 0 < radius_min <= radius_max")
        if not self.dp > 0:
            raise ValueError("dp must be positive")
        if self.canny_high <= 0 or self.min_center_distance < 0:
            raise ValueError("bad Canny threshold or centre distance")

    @property
    def canny_low(self) -> float:
        return self.canny_high / 2


@dataclass(frozen=True)
class Circle:
    x: float
    y: float
    r: float
    score: float = 0.0


class CircleSet(Sequence):
    def __init__(self, circles: Iterable[Circle] = ()):
        self.circles = list(circles)

    def __len__(self):
        return len(self.circles)

    def __getitem__(self, i):
        return self.circles[i]

    def __repr__(self):
        return f"CircleSet({self.circles!r})"

    def as_array(self) -> np.ndarray:
        """``(n, 3)`` array of x, y, r."""
        return np.array([(c.x, c.y, c.r) for c in self.circles], dtype=np.float64).reshape(-1, 3)


@dataclass(frozen=True)
class CoverageReport:
    bubble_count: int
    coverage_fraction: float
    mean_radius: float
    median_radius: float


# -- preprocessing --------------------------------------------------------------


def to_grayscale(image) -> np.ndarray:
    """8-bit luma: ``(77 R + 150 G + 29 B + 128) >> 8`` for RGB, Y plane for Bayer."""
    if isinstance(image, BayerFrame):
        from .color import forward_rct

        return np.clip(forward_rct(image).y, 0, 255).astype(np.uint8)
    a = np.asarray(image)
    if a.ndim == 2:
        return a.astype(np.uint8)
    if a.ndim != 3 or a.shape[2] < 3:
        raise ValueError(f"expected HxW or HxWx3 image, got {a.shape}")
    a = a[..., :3].astype(np.int32)
    return ((77 * a[..., 0] + 150 * a[..., 1] + 29 * a[..., 2] + 128) >> 8).astype(np.uint8)


def median_blur_5x5(gray) -> np.ndarray:
    return ndimage.median_filter(np.asarray(gray), size=5, mode="nearest")


@dataclass
class EdgeMap:
    mask: np.ndarray
    gx: np.ndarray
    gy: np.ndarray

    @property
    def magnitude(self) -> np.ndarray:
        return np.hypot(self.gx, self.gy)


def canny_edges(gray, high_threshold: float = 100.0, low_threshold: float | None = None) -> EdgeMap:
    """Sobel gradients, 4-direction non-maximum suppression, hysteresis."""
    low_threshold = high_threshold / 2 if low_threshold is None else low_threshold
    g = np.asarray(gray, dtype=np.float64)
    gx = ndimage.sobel(g, axis=1, mode="nearest")
    gy = ndimage.sobel(g, axis=0, mode="nearest")
    mag = np.hypot(gx, gy)

    # quantise direction to 0/45/90/135 degrees
    ang = (np.rad2deg(np.arctan2(gy, gx)) + 180.0) % 180.0
    sector = (((ang + 22.5) // 45) % 4).astype(np.int8)
    p = np.pad(mag, 1, mode="constant")
    h, w = mag.shape
    nbrs = {
        0: (p[1 : h + 1, 2 : w + 2], p[1 : h + 1, 0:w]),
        1: (p[2 : h + 2, 2 : w + 2], p[0:h, 0:w]),
        2: (p[2 : h + 2, 1 : w + 1], p[0:h, 1 : w + 1]),
        3: (p[2 : h + 2, 0:w], p[0:h, 2 : w + 2]),
    }
    keep = np.zeros_like(mag, dtype=bool)
    for s, (a, b) in nbrs.items():
        sel = sector == s
        # ties broken towards the forward neighbour so plateaus stay one pixel wide
        keep |= sel & (mag > a) & (mag >= b)
    thin = np.where(keep, mag, 0.0)

    strong = thin >= high_threshold
    weak = thin >= low_threshold
    lab, n = ndimage.label(weak, structure=np.ones((3, 3), dtype=bool))
    if n == 0:
        return EdgeMap(np.zeros_like(strong), gx, gy)
    good = np.zeros(n + 1, dtype=bool)
    good[np.unique(lab[strong])] = True
    good[0] = False
    return EdgeMap(good[lab], gx, gy)


# -- Hough ----------------------------------------------------------------------

# edge pixels count towards a radius only if their gradient is within ~25 deg of radial
RADIAL_COS = 0.9
MIN_ARC = 0.4


def _accumulate(edges: EdgeMap, params: HoughParams, shape):
    ys, xs = np.nonzero(edges.mask)
    h, w = shape
    ah, aw = int(math.ceil(h / params.dp)) + 1, int(math.ceil(w / params.dp)) + 1
    acc = np.zeros(ah * aw)
    if ys.size == 0:
        return acc.reshape(ah, aw)
    gx, gy = edges.gx[ys, xs], edges.gy[ys, xs]
    norm = np.hypot(gx, gy)
    ux, uy = gx / norm, gy / norm
    radii = np.arange(params.radius_min, params.radius_max + 1, dtype=np.float64)
    sign = np.concatenate([radii, -radii])
    cx = (xs[:, None] + ux[:, None] * sign) / params.dp
    cy = (ys[:, None] + uy[:, None] * sign) / params.dp
    cx, cy = cx.ravel(), cy.ravel()
    ok = (cx >= 0) & (cy >= 0) & (cx < aw - 1) & (cy < ah - 1)
    cx, cy = cx[ok], cy[ok]
    x0, y0 = np.floor(cx).astype(np.int64), np.floor(cy).astype(np.int64)
    fx, fy = cx - x0, cy - y0
    base = y0 * aw + x0
    for off, wt in (
        (0, (1 - fx) * (1 - fy)),
        (1, fx * (1 - fy)),
        (aw, (1 - fx) * fy),
        (aw + 1, fx * fy),
    ):
        acc += np.bincount(base + off, weights=wt, minlength=acc.size)
    return acc.reshape(ah, aw)


def _centres(acc: np.ndarray, params: HoughParams):
    # a vote is split over 2x2 cells; pool it back before thresholding
    pooled = ndimage.uniform_filter(acc, size=2, mode="constant") * 4
    peak = (pooled == ndimage.maximum_filter(pooled, size=3, mode="constant")) & (
        pooled >= params.accumulator_threshold
    )
    ys, xs = np.nonzero(peak)
    order = np.argsort(-pooled[ys, xs], kind="stable")
    out = []
    for i in order:
        y, x = ys[i], xs[i]
        # centre of mass of the pooled 2x2 window, in image pixels
        win = acc[max(0, y - 1) : y + 1, max(0, x - 1) : x + 1]
        yy, xx = np.mgrid[max(0, y - 1) : y + 1, max(0, x - 1) : x + 1]
        tot = win.sum()
        out.append((float((xx * win).sum() / tot) * params.dp, float((yy * win).sum() / tot) * params.dp, float(pooled[y, x])))
    return out


def _best_radius(cx, cy, ex, ey, ux, uy, params: HoughParams):
    """Radial-histogram peak over edge pixels whose gradient points at the centre."""
    dx, dy = ex - cx, ey - cy
    d = np.hypot(dx, dy)
    ok = (d >= params.radius_min - 0.5) & (d < params.radius_max + 0.5)
    cos = np.abs(dx[ok] * ux[ok] + dy[ok] * uy[ok]) / d[ok]
    d = d[ok][cos >= RADIAL_COS]
    if d.size == 0:
        return None
    bins = np.arange(params.radius_min - 0.5, params.radius_max + 1.0)
    hist, _ = np.histogram(d, bins)
    sm = np.convolve(hist, [1, 1, 1], mode="same")
    k = int(np.argmax(sm))
    r0 = params.radius_min + k
    near = d[np.abs(d - r0) <= 1.0]
    return float(near.mean()), int(sm[k])


def hough_circles(edges: EdgeMap, params: HoughParams = HoughParams()) -> CircleSet:
    acc = _accumulate(edges, params, edges.mask.shape)
    ys, xs = np.nonzero(edges.mask)
    ex, ey = xs.astype(np.float64), ys.astype(np.float64)
    gx, gy = edges.gx[ys, xs], edges.gy[ys, xs]
    norm = np.maximum(np.hypot(gx, gy), 1e-12)
    ux, uy = gx / norm, gy / norm
    accepted: list[Circle] = []
    md2 = params.min_center_distance**2
    for cx, cy, score in _centres(acc, params):
        if any((c.x - cx) ** 2 + (c.y - cy) ** 2 < md2 for c in accepted):
            continue
        best = _best_radius(cx, cy, ex, ey, ux, uy, params)
        # the chosen radius needs as much edge support as a centre needs votes,
        # and that support has to cover a fair part of the circumference
        if best is None or best[1] < max(params.accumulator_threshold, MIN_ARC * 2 * math.pi * best[0]):
            continue
        r = min(max(best[0], params.radius_min), params.radius_max)
        accepted.append(Circle(cx, cy, r, score))
    return CircleSet(accepted)


def detect(image, params: HoughParams = HoughParams()) -> CircleSet:
    gray = median_blur_5x5(to_grayscale(image))
    return hough_circles(canny_edges(gray, params.canny_high, params.canny_low), params)


# -- coverage -------------------------------------------------------------------


def disc_union_mask(circles, width: int, height: int) -> np.ndarray:
    """Pixels whose centre lies inside at least one disc."""
    m = np.zeros((height, width), dtype=bool)
    for c in circles:
        x, y, r = c.x, c.y, c.r
        x0, x1 = max(0, int(math.floor(x - r))), min(width, int(math.ceil(x + r)) + 1)
        y0, y1 = max(0, int(math.floor(y - r))), min(height, int(math.ceil(y + r)) + 1)
        if x0 >= x1 or y0 >= y1:
            continue
        yy, xx = np.mgrid[y0:y1, x0:x1]
        m[y0:y1, x0:x1] |= (xx - x) ** 2 + (yy - y) ** 2 <= r * r
    return m


def coverage(circles, width: int, height: int) -> CoverageReport:
    circles = list(circles)
    frac = float(disc_union_mask(circles, width, height).mean()) if circles else 0.0
    radii = [c.r for c in circles]
    mean_r = float(np.mean(radii)) if radii else 0.0
    med_r = float(np.median(radii)) if radii else 0.0
    return CoverageReport(len(circles), frac, mean_r, med_r)


@dataclass
class ImageReport:
    name: str
    width: int
    height: int
    circles: CircleSet
    report: CoverageReport


def analyze(image, name: str = "", params: HoughParams = HoughParams()) -> ImageReport:
    gray = to_grayscale(image)
    h, w = gray.shape
    cs = hough_circles(canny_edges(median_blur_5x5(gray), params.canny_high, params.canny_low), params)
    return ImageReport(name, w, h, cs, coverage(cs, w, h))


# -- matching against ground truth ----------------------------------------------


def match_circles(found, truth, center_tol: float = 3.0, radius_tol: float = 3.0):
    """Greedy one-to-one matching by centre distance.

    Returns ``(true_positives, n_found, n_truth)``. A pair matches when the
    centres are within ``max(center_tol, 0.2 r)`` and the radii within
    ``max(radius_tol, 0.2 r)`` of the true radius.
    """
    found = list(found)
    truth = list(truth)
    pairs = []
    for i, f in enumerate(found):
        for j, t in enumerate(truth):
            d = math.hypot(f.x - t.x, f.y - t.y)
            if d <= max(center_tol, 0.2 * t.r) and abs(f.r - t.r) <= max(radius_tol, 0.2 * t.r):
                pairs.append((d, i, j))
    pairs.sort()
    used_f, used_t = set(), set()
    for _, i, j in pairs:
        if i in used_f or j in used_t:
            continue
        used_f.add(i)
        used_t.add(j)
    return len(used_f), len(found), len(truth)


# -- reports ----------------------------------------------------------------------

REPORT_COLUMNS = ["image", "width", "height", "bubble_count", "coverage", "mean_radius", "median_radius"]


def write_reports_csv(reports: Iterable[ImageReport], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in reports:
        c = r.report
        w.writerow([r.name, r.width, r.height, c.bubble_count, f"{c.coverage_fraction:.6f}", f"{c.mean_radius:.3f}", f"{c.median_radius:.3f}"])


@dataclass
class AggregateStats:
    """Dataset-level row: images, mean count, mean coverage, mean radius."""

    images: int = 0
    mean_count: float = 0.0
    mean_coverage: float = 0.0
    mean_radius: float = 0.0
    per_image: list = field(default_factory=list, repr=False)


def aggregate(reports: Sequence[ImageReport]) -> AggregateStats:
    if not reports:
        return AggregateStats()
    radii = [c.r for r in reports for c in r.circles]
    return AggregateStats(
        len(reports),
        float(np.mean([r.report.bubble_count for r in reports])),
        float(np.mean([r.report.coverage_fraction for r in reports])),
        float(np.mean(radii)) if radii else 0.0,
        list(reports),
    )


def format_aggregate(label: str, agg: AggregateStats) -> str:
    head = "dataset,images,mean_bubbles,mean_coverage,mean_bubble_radius_px"
    return f"{head}\n{label},{agg.images},{agg.mean_count:.2f},{agg.mean_coverage:.4f},{agg.mean_radius:.2f}\n"


def annotate(image, circles, color=(0, 255, 0)) -> np.ndarray:
    """RGB copy of ``image`` with circle outlines and centre marks drawn."""
    a = np.asarray(image)
    rgb = np.repeat(a[..., None], 3, axis=2).copy() if a.ndim == 2 else a[..., :3].copy()
    h, w = rgb.shape[:2]
    for c in circles:
        t = np.linspace(0, 2 * np.pi, max(16, int(8 * c.r)), endpoint=False)
        xs = np.rint(c.x + c.r * np.cos(t)).astype(int)
        ys = np.rint(c.y + c.r * np.sin(t)).astype(int)
        ok = (xs >= 0) & (xs < w) & (ys >= 0) & (ys < h)
        rgb[ys[ok], xs[ok]] = color
        cx, cy = int(round(c.x)), int(round(c.y))
        for dx, dy in ((0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)):
            if 0 <= cx + dx < w and 0 <= cy + dy < h:
                rgb[cy + dy, cx + dx] = color
    return rgb
