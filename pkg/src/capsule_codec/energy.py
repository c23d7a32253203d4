"""Per-frame and per-study energy accounting for a capsule camera.

Capture energies are the measured per-module values of the demonstrator
(sensor, LEDs and core during a 12.79 ms exposure). Compression costs core
power for the CR-dependent runtime, transmission costs radio power for
``bits / bitrate``, and idle power fills every remaining moment of each
capture interval.

Energies are accumulated as integer nanojoules so that totals are exact
sums of their components.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

from .controller import ControllerConfig, StudyTrace, full_schedule, run_trace


@dataclass(frozen=True)
class EnergyModel:
    capture_ms: float = 12.79
    sensor_uj: float = 108.93
    led_uj: float = 189.15
    capture_core_uj: float = 13.56
    core_mw: float = 1.06
    radio_mw: float = 5.0
    idle_mw: float = 0.43
    bitrate_bps: float = 16_384_000.0
    frame_bits: int = 320 * 320 * 8

    def __post_init__(self):
        for name in ("capture_ms", "sensor_uj", "led_uj", "capture_core_uj", "core_mw", "radio_mw", "idle_mw", "bitrate_bps", "frame_bits"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def capture_uj(self) -> float:
        return self.sensor_uj + self.led_uj + self.capture_core_uj


@dataclass(frozen=True)
class RuntimeModel:
    """Compression runtime ``a * exp(-b (CR - cr0)) + c`` in milliseconds."""

    a: float = 45.0
    b: float = 0.35
    cr0: float = 2.0
    c: float = 50.0

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0 or self.c < 0:
            raise ValueError("runtime model needs a > 0, b > 0, c >= 0")

    def duration_ms(self, cr: float) -> float:
        return self.a * math.exp(-self.b * (cr - self.cr0)) + self.c


def _nj(power_mw: float, time_ms: float) -> int:
    # mW * ms = uJ
    return round(power_mw * time_ms * 1000.0)


@dataclass(frozen=True)
class FrameEnergy:
    capture_nj: int
    compression_nj: int
    transmission_nj: int
    capture_ms: float
    compression_ms: float
    transmission_ms: float

    @property
    def active_ms(self) -> float:
        return self.capture_ms + self.compression_ms + self.transmission_ms

    @property
    def total_nj(self) -> int:
        return self.capture_nj + self.compression_nj + self.transmission_nj

    capture_uj = property(lambda self: self.capture_nj / 1000)
    compression_uj = property(lambda self: self.compression_nj / 1000)
    transmission_uj = property(lambda self: self.transmission_nj / 1000)
    total_uj = property(lambda self: self.total_nj / 1000)


def frame_energy(cr: float, compressed: bool = True, model: EnergyModel = EnergyModel(), runtime: RuntimeModel = RuntimeModel()) -> FrameEnergy:
    if not cr > 0:
        raise ValueError("CR must be positive")
    capture_nj = round(model.capture_uj * 1000)
    if compressed:
        comp_ms = runtime.duration_ms(cr)
        tx_ms = model.frame_bits / cr / model.bitrate_bps * 1000.0
    else:
        comp_ms = 0.0
        tx_ms = model.frame_bits / model.bitrate_bps * 1000.0
    return FrameEnergy(
        capture_nj, _nj(model.core_mw, comp_ms), _nj(model.radio_mw, tx_ms), model.capture_ms, comp_ms, tx_ms
    )


@dataclass
class VariantEnergy:
    captures: int = 0
    capture_nj: int = 0
    compression_nj: int = 0
    transmission_nj: int = 0
    idle_nj: int = 0

    @property
    def total_nj(self) -> int:
        return self.capture_nj + self.compression_nj + self.transmission_nj + self.idle_nj

    def add(self, fe: FrameEnergy, interval_ms: float, idle_mw: float) -> None:
        self.captures += 1
        self.capture_nj += fe.capture_nj
        self.compression_nj += fe.compression_nj
        self.transmission_nj += fe.transmission_nj
        self.idle_nj += _nj(idle_mw, max(0.0, interval_ms - fe.active_ms))


def _pct(base: int, variant: int) -> float:
    return 100.0 * (base - variant) / base if base else 0.0


@dataclass
class EnergyReport:
    study_id: str
    config: ControllerConfig
    baseline: VariantEnergy = field(default_factory=VariantEnergy)
    comp_only: VariantEnergy = field(default_factory=VariantEnergy)
    controller: VariantEnergy = field(default_factory=VariantEnergy)

    baseline_uj = property(lambda self: self.baseline.total_nj / 1000)
    comp_only_uj = property(lambda self: self.comp_only.total_nj / 1000)
    controller_uj = property(lambda self: self.controller.total_nj / 1000)

    @property
    def reduction_comp_pct(self) -> float:
        return _pct(self.baseline.total_nj, self.comp_only.total_nj)

    @property
    def reduction_ctrl_pct(self) -> float:
        return _pct(self.baseline.total_nj, self.controller.total_nj)


def simulate_study(
    trace: StudyTrace,
    schedule=None,
    config: ControllerConfig = ControllerConfig(),
    model: EnergyModel = EnergyModel(),
    runtime: RuntimeModel = RuntimeModel(),
    study_id: str = "",
) -> EnergyReport:
    """Energy of one study under three variants.

    * baseline: every frame at the nominal rate, sent uncompressed;
    * comp_only: every frame at the nominal rate, compressed;
    * controller: frames from ``schedule`` (default: :func:`run_trace`), compressed.
    """
    rep = EnergyReport(study_id, config)
    if len(trace) == 0:
        return rep
    schedule = schedule if schedule is not None else run_trace(trace, config)
    end = len(trace) * config.nominal_interval
    full = full_schedule(trace, config)
    for idx, iv in zip(full.indices, full.intervals(end)):
        ms = float(iv) * 1000.0
        rep.baseline.add(frame_energy(trace[idx].cr, False, model, runtime), ms, model.idle_mw)
        rep.comp_only.add(frame_energy(trace[idx].cr, True, model, runtime), ms, model.idle_mw)
    for idx, iv in zip(schedule.indices, schedule.intervals(end)):
        rep.controller.add(frame_energy(trace[idx].cr, True, model, runtime), float(iv) * 1000.0, model.idle_mw)
    return rep


def batch_simulate(traces, configs, model: EnergyModel = EnergyModel(), runtime: RuntimeModel = RuntimeModel(), ids=None):
    """Cross product traces x configs, trace-major."""
    ids = ids or [str(i) for i in range(len(traces))]
    return [
        simulate_study(tr, None, cfg, model, runtime, sid)
        for sid, tr in zip(ids, traces)
        for cfg in configs
    ]


SIMULATE_COLUMNS = [
    "study_id",
    "threshold",
    "reduced_fps",
    "baseline_uJ",
    "comp_only_uJ",
    "controller_uJ",
    "reduction_comp_pct",
    "reduction_ctrl_pct",
]


def write_reports_csv(reports, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(SIMULATE_COLUMNS)
    for r in reports:
        w.writerow(
            [
                r.study_id,
                r.config.cr_threshold,
                r.config.reduced_fps,
                f"{r.baseline_uj:.2f}",
                f"{r.comp_only_uj:.2f}",
                f"{r.controller_uj:.2f}",
                f"{r.reduction_comp_pct:.4f}",
                f"{r.reduction_ctrl_pct:.4f}",
            ]
        )
