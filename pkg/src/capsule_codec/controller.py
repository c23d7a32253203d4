"""Compression-ratio-driven frame-rate control.

A frame that compresses poorly (CR below the threshold) is taken as a sign
that the view is dominated by bubbles; the next capture is then delayed by
the reduced-rate interval. Any captured frame at or above the threshold
restores the nominal rate. Only captured frames are observed.

Time is tracked with :class:`fractions.Fraction` so that sampling indices
``floor(t * nominal_fps)`` are exact.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence


class TraceFormatError(ValueError):
    pass


@dataclass(frozen=True)
class ControllerConfig:
    nominal_fps: float = 2.0
    reduced_fps: float = 0.67
    cr_threshold: float = 3.6

    def __post_init__(self):
        if not (0 < self.reduced_fps <= self.nominal_fps):
            raise ValueError("need 0 < reduced_fps <= nominal_fps")
        if not self.cr_threshold > 1:
            raise ValueError("cr_threshold must exceed 1")

    @property
    def nominal_interval(self) -> Fraction:
        return 1 / _exact(self.nominal_fps)

    @property
    def reduced_interval(self) -> Fraction:
        return 1 / _exact(self.reduced_fps)


def _exact(x: float) -> Fraction:
    # decimal literal semantics: 0.67 -> 67/100
    return Fraction(repr(float(x)))


class Mode(enum.Enum):
    NORMAL = "normal"
    REDUCED = "reduced"


@dataclass(frozen=True)
class ControllerState:
    mode: Mode = Mode.NORMAL
    next_capture_time: Fraction = Fraction(0)


def step(state: ControllerState, observed_cr: float, config: ControllerConfig = ControllerConfig()):
    """Update on a captured frame's CR; returns ``(new_state, interval_s)``."""
    if observed_cr < config.cr_threshold:
        mode, iv = Mode.REDUCED, config.reduced_interval
    else:
        mode, iv = Mode.NORMAL, config.nominal_interval
    return ControllerState(mode, state.next_capture_time + iv), float(iv)


# -- traces -------------------------------------------------------------------


@dataclass(frozen=True)
class TraceRecord:
    index: int
    cr: float
    pathology: str = ""
    view: str = ""


TRACE_COLUMNS = ["index", "cr", "pathology_flag", "view_label"]


class StudyTrace(Sequence):
    """Per-source-frame records at the nominal frame rate."""

    def __init__(self, records: Iterable[TraceRecord]):
        recs = []
        for i, r in enumerate(records):
            if not isinstance(r.pathology, str):
                r = TraceRecord(r.index, r.cr, "1" if r.pathology else "", r.view)
            if r.index != i:
                raise ValueError(f"trace indices must be contiguous from 0 (got {r.index} at {i})")
            if not (r.cr > 0 and math.isfinite(r.cr)):
                raise ValueError(f"frame {i}: CR must be positive")
            recs.append(r)
        self.records = recs

    @classmethod
    def from_crs(cls, crs, pathology=None) -> "StudyTrace":
        pathology = pathology if pathology is not None else [""] * len(crs)
        return cls(TraceRecord(i, float(c), p) for i, (c, p) in enumerate(zip(crs, pathology)))

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def crs(self) -> list[float]:
        return [r.cr for r in self.records]

    def fraction_below(self, threshold: float) -> float:
        return sum(r.cr < threshold for r in self.records) / len(self) if self.records else 0.0

    def save(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_COLUMNS)
            for r in self.records:
                w.writerow([r.index, repr(r.cr), r.pathology or "0", r.view])

    @classmethod
    def load(cls, path) -> "StudyTrace":
        recs = []
        with Path(path).open(newline="") as fh:
            rows = csv.reader(fh)
            for lineno, row in enumerate(rows, 1):
                if not row or not "".join(row).strip():
                    continue
                if lineno == 1 and row[0].strip().lower() == "index":
                    continue
                if len(row) < 2 or len(row) > 4:
                    raise TraceFormatError(f"{path}:{lineno}: expected 2-4 columns, got {len(row)}")
                try:
                    idx = int(row[0])
                    cr = float(row[1])
                except ValueError:
                    raise TraceFormatError(f"{path}:{lineno}: bad index or cr value") from None
                if not (cr > 0 and math.isfinite(cr)):
                    raise TraceFormatError(f"{path}:{lineno}: CR must be positive")
                if idx != len(recs):
                    raise TraceFormatError(f"{path}:{lineno}: index {idx} breaks contiguity")
                flag = row[2].strip() if len(row) > 2 else ""
                recs.append(TraceRecord(idx, cr, "" if flag in ("", "0") else flag, row[3].strip() if len(row) > 3 else ""))
        return cls(recs)


# -- schedules ------------------------------------------------------------------


@dataclass
class CaptureSchedule:
    indices: list[int] = field(default_factory=list)
    modes: list[Mode] = field(default_factory=list)
    times: list[Fraction] = field(default_factory=list)
    trace_length: int = 0

    def __len__(self):
        return len(self.indices)

    @property
    def skipped(self) -> int:
        return self.trace_length - len(self.indices)

    def intervals(self, end: Fraction) -> list[Fraction]:
        """Time from each capture to the next one (the last runs to ``end``)."""
        nxt = self.times[1:] + [end]
        return [max(Fraction(0), min(b, end) - a) for a, b in zip(self.times, nxt)]


def run_trace(trace: StudyTrace, config: ControllerConfig = ControllerConfig()) -> CaptureSchedule:
    if len(trace) == 0:
        raise ValueError("empty trace")
    nominal = _exact(config.nominal_fps)
    sched = CaptureSchedule(trace_length=len(trace))
    state = ControllerState()
    while True:
        t = state.next_capture_time
        idx = math.floor(t * nominal)
        if idx >= len(trace):
            break
        state, _ = step(state, trace[idx].cr, config)
        sched.indices.append(idx)
        sched.modes.append(state.mode)
        sched.times.append(t)
    return sched


def full_schedule(trace: StudyTrace, config: ControllerConfig = ControllerConfig()) -> CaptureSchedule:
    """Every frame at the nominal rate (no controller)."""
    iv = config.nominal_interval
    n = len(trace)
    return CaptureSchedule(list(range(n)), [Mode.NORMAL] * n, [i * iv for i in range(n)], n)


def episodes(trace: StudyTrace) -> list[tuple[int, int, str]]:
    """Maximal runs ``[start, end)`` of consecutive frames with the same pathology label."""
    out = []
    i, n = 0, len(trace)
    while i < n:
        lab = trace[i].pathology
        if not lab:
            i += 1
            continue
        j = i
        while j < n and trace[j].pathology == lab:
            j += 1
        out.append((i, j, lab))
        i = j
    return out


def missed_pathologies(trace: StudyTrace, schedule: CaptureSchedule) -> int:
    """Episodes without a single captured frame inside them."""
    import bisect

    caps = sorted(schedule.indices)
    missed = 0
    for start, end, _ in episodes(trace):
        k = bisect.bisect_left(caps, start)
        if k == len(caps) or caps[k] >= end:
            missed += 1
    return missed


@dataclass(frozen=True)
class SweepCell:
    threshold: float
    reduced_fps: float
    missed: int
    skipped: int
    energy_uj: float
    reduction_pct: float


SWEEP_COLUMNS = ["threshold", "reduced_fps", "missed", "energy_mJ", "reduction_pct"]


def sweep(traces, thresholds, reduced_fps_values, nominal_fps: float = 2.0, model=None, runtime=None):
    """Evaluate every (threshold, reduced fps) pair; row-major by threshold.

    ``traces`` is one :class:`StudyTrace` or several; with several, missed
    and skipped counts and energies are summed and the reduction is taken
    from the summed totals.
    """
    from .energy import EnergyModel, RuntimeModel, simulate_study

    if isinstance(traces, StudyTrace):
        traces = [traces]
    model = model or EnergyModel()
    runtime = runtime or RuntimeModel()
    cells = []
    for th in thresholds:
        for rf in reduced_fps_values:
            cfg = ControllerConfig(nominal_fps, rf, th)
            missed = skipped = base_nj = ctrl_nj = 0
            for tr in traces:
                sched = run_trace(tr, cfg)
                rep = simulate_study(tr, sched, cfg, model, runtime)
                missed += missed_pathologies(tr, sched)
                skipped += sched.skipped
                base_nj += rep.baseline.total_nj
                ctrl_nj += rep.controller.total_nj
            red = 100.0 * (base_nj - ctrl_nj) / base_nj if base_nj else 0.0
            cells.append(SweepCell(th, rf, missed, skipped, ctrl_nj / 1000, red))
    return cells


def write_sweep_csv(cells: Iterable[SweepCell], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for c in cells:
        w.writerow([c.threshold, c.reduced_fps, c.missed, f"{c.energy_uj / 1000:.5f}", f"{c.reduction_pct:.4f}"])
