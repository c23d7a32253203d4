"""Run configuration: one INI-style file, every key optional.

::

    [codec]
    tables = default            ; default | lossless | path to a table file
    luma = 0 1 1 2 ...          ; optional inline override (16 ints)
    chroma = 1 2 2 3 ...

    [controller]
    nominal_fps = 2.0
    reduced_fps = 0.67
    cr_threshold = 3.6

    [energy]                    ; EnergyModel fields
    bitrate_bps = 16384000
    ...

    [runtime]                   ; RuntimeModel fields: a, b, cr0, c

    [bubbles]                   ; HoughParams fields

    [sweep]
    thresholds = 3.0, 3.3, 3.6, 3.9, 4.2
    reduced_fps = 1.5, 1.0, 0.67, 0.5, 0.33

    [synth]
    seed = 0
    size = 320
    count = 10

Unknown sections or keys are rejected so typos do not pass silently.
"""

from __future__ import annotations

import configparser
import dataclasses
import re
from dataclasses import dataclass, field
from pathlib import Path

from .bubbles import HoughParams
from .controller import ControllerConfig
from .energy import EnergyModel, RuntimeModel
from .transform import QuantTables, default_tables, lossless_tables, load_tables

DEFAULT_THRESHOLDS = (3.0, 3.3, 3.6, 3.9, 4.2)
DEFAULT_RATES = (1.5, 1.0, 0.67, 0.5, 0.33)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    size: int = 320
    count: int = 10

    def __post_init__(self):
        if self.size <= 0 or self.size % 8:
            raise ValueError("synth size must be a positive multiple of 8")
        if self.count < 0:
            raise ValueError("synth count must be >= 0")


@dataclass(frozen=True)
class RunConfig:
    tables: QuantTables = field(default_factory=default_tables)
    controller: ControllerConfig = ControllerConfig()
    energy: EnergyModel = EnergyModel()
    runtime: RuntimeModel = RuntimeModel()
    hough: HoughParams = HoughParams()
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS
    rates: tuple[float, ...] = DEFAULT_RATES
    synth: SynthConfig = SynthConfig()

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in re.split(r"[,\s]+", text.strip()) if t)


def _typed(cls, section, base):
    """Build ``cls`` from ``base`` with section values cast to the field types."""
    kinds = {f.name: f.type for f in dataclasses.fields(cls)}
    kw = {}
    for key, raw in section.items():
        if key not in kinds:
            raise ConfigError(f"[{section.name}] unknown key {key!r}")
        kind = kinds[key] if isinstance(kinds[key], str) else kinds[key].__name__
        try:
            kw[key] = int(raw) if kind == "int" else float(raw)
        except ValueError:
            raise ConfigError(f"[{section.name}] {key}: not a number: {raw!r}") from None
    try:
        return dataclasses.replace(base, **kw)
    except ValueError as e:
        raise ConfigError(f"[{section.name}] {e}") from None


def _tables(section, base_dir: Path) -> QuantTables:
    extra = set(section) - {"tables", "luma", "chroma"}
    if extra:
        raise ConfigError(f"[codec] unknown key(s): {', '.join(sorted(extra))}")
    which = section.get("tables", "default").strip()
    try:
        if which == "default":
            t = default_tables()
        elif which == "lossless":
            t = lossless_tables()
        else:
            p = Path(which)
            t = load_tables(p if p.is_absolute() else base_dir / p)
        luma = tuple(int(v) for v in _floats(section["luma"])) if "luma" in section else t.luma
        chroma = tuple(int(v) for v in _floats(section["chroma"])) if "chroma" in section else t.chroma
        return QuantTables(luma, chroma)
    except (OSError, ValueError) as e:
        raise ConfigError(f"[codec] {e}") from None


SECTIONS = ("codec", "controller", "energy", "runtime", "bubbles", "sweep", "synth")


def parse_config(text: str, base_dir=".") -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(str(e).splitlines()[0]) from None
    unknown = set(cp.sections()) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    cfg = RunConfig()
    if cp.has_section("codec"):
        cfg = cfg.replace(tables=_tables(cp["codec"], Path(base_dir)))
    for name, attr, cls in (
        ("controller", "controller", ControllerConfig),
        ("energy", "energy", EnergyModel),
        ("runtime", "runtime", RuntimeModel),
        ("bubbles", "hough", HoughParams),
        ("synth", "synth", SynthConfig),
    ):
        if cp.has_section(name):
            cfg = cfg.replace(**{attr: _typed(cls, cp[name], getattr(cfg, attr))})
    if cp.has_section("sweep"):
        sec = cp["sweep"]
        extra = set(sec) - {"thresholds", "reduced_fps"}
        if extra:
            raise ConfigError(f"[sweep] unknown key(s): {', '.join(sorted(extra))}")
        try:
            th = _floats(sec.get("thresholds", "")) or cfg.thresholds
            rt = _floats(sec.get("reduced_fps", "")) or cfg.rates
        except ValueError:
            raise ConfigError("[sweep] lists must be numbers") from None
        cfg = cfg.replace(thresholds=th, rates=rt)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    """Cross-section checks that single dataclasses cannot see."""
    nominal = cfg.controller.nominal_fps
    for rf in cfg.rates:
        if not 0 < rf <= nominal:
            raise ConfigError(f"[sweep] reduced fps {rf} outside (0, {nominal}]")
    for th in cfg.thresholds:
        if not th > 1:
            raise ConfigError(f"[sweep] threshold {th} must exceed 1")


def load_config(path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {p}: {e.strerror}") from None
    return parse_config(text, p.parent)
