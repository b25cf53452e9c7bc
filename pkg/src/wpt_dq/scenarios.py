"""Scenario configuration files.

A scenario file is YAML. Circuit and drive keys sit at the top level in SI
units (``sigma_deg`` is the one angle, in degrees); each experiment kind
reads its own optional section::

    l_t: 140.90e-6
    c_t: 16.45e-9
    r_t: 0.200
    l_r: 55.20e-6
    c_r: 41.47e-9
    r_r: 0.084
    r_l: 100.0
    m: 9.0e-6
    u_dc: 20.0
    sigma_deg: 0.0
    f_hz: 105.0e3
    waveform: sinusoidal        # or phase_shift_square
    sweep:    {f_start_hz: 85.0e3, f_stop_hz: 125.0e3, points: 81}
    step:     {u_dc_before: 10.0, u_dc_after: 20.0}
    phase:    {f_list_hz: [85.0e3, 95.0e3, 105.0e3, 115.0e3, 125.0e3]}
    identify: {k_values: [0.10, 0.12, 0.14, 0.16, 0.18, 0.20]}

``m`` has no default.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError, ParameterError
from .params import DriveSpec, SystemParams, Waveform

PARAM_KEYS = {"l_t": "L_t", "c_t": "C_t", "r_t": "R_t", "l_r": "L_r", "c_r": "C_r", "r_r": "R_r", "r_l": "R_L", "m": "M"}
DRIVE_KEYS = ("u_dc", "sigma_deg", "f_hz", "waveform")


class Kind(str, enum.Enum):
    FREQUENCY_SWEEP = "sweep"
    STEP_RESPONSE = "step"
    PHASE_CHECK = "phase"
    IDENTIFY_SWEEP = "identify"


@dataclass(frozen=True)
class SweepSettings:
    f_start_hz: float = 85.0e3
    f_stop_hz: float = 125.0e3
    points: int = 81
    m_values_h: tuple = ()
    oracle_f_hz: tuple = (85.0e3, 95.0e3, 105.0e3, 115.0e3, 125.0e3)
    oracle_cycles: int = 400

    def frequencies(self) -> list[float]:
        if self.points == 1:
            return [self.f_start_hz]
        step = (self.f_stop_hz - self.f_start_hz) / (self.points - 1)
        return [self.f_start_hz + i * step for i in range(self.points)]


@dataclass(frozen=True)
class StepSettings:
    u_dc_before: float = 10.0
    u_dc_after: float = 20.0
    t_step_cycles: int = 200
    t_end_cycles: int = 400
    output_samples_per_cycle: int = 24


@dataclass(frozen=True)
class PhaseSettings:
    f_list_hz: tuple = (85.0e3, 95.0e3, 105.0e3, 115.0e3, 125.0e3)
    oracle_cycles: int = 400


@dataclass(frozen=True)
class IdentifySettings:
    k_values: tuple = ()
    m_values_h: tuple = ()
    r_l_values_ohm: tuple = (50.0, 100.0)
    waveforms: tuple = (Waveform.SINUSOIDAL, Waveform.PHASE_SHIFT_SQUARE)
    samples_per_cycle: int = 24
    settle_cycles: int = 150
    window_cycles: int = 10
    noise_rel: float = 0.0
    known_overrides: tuple = ()  # (SystemParams field, value) applied to the identifier's copy only

    def couplings(self, params: SystemParams) -> list[float]:
        """Grid of true M values in henries, in file order."""
        if self.m_values_h:
            return list(self.m_values_h)
        base = math.sqrt(params.L_t * params.L_r)
        return [k * base for k in self.k_values]


@dataclass(frozen=True)
class Scenario:
    params: SystemParams
    drive: DriveSpec
    sweep: SweepSettings = field(default_factory=SweepSettings)
    step: StepSettings = field(default_factory=StepSettings)
    phase: PhaseSettings = field(default_factory=PhaseSettings)
    identify: IdentifySettings = field(default_factory=IdentifySettings)
    raw: dict = field(default_factory=dict, compare=False, repr=False)


def _number(value, key, integer=False):
    if isinstance(value, bool):
        raise ConfigError(f"key '{key}': expected a number, got {value!r}")
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"key '{key}': expected a number, got {value!r}") from None
    if not math.isfinite(out):
        raise ConfigError(f"key '{key}': value must be finite, got {value!r}")
    if integer:
        if out != int(out):
            raise ConfigError(f"key '{key}': expected an integer, got {value!r}")
        return int(out)
    return out


def _numbers(value, key):
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"key '{key}': expected a list, got {value!r}")
    return tuple(_number(v, f"{key}[{i}]") for i, v in enumerate(value))


def _section(raw: dict, name: str, cls, converters: dict):
    data = raw.get(name) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"section '{name}' must be a mapping")
    unknown = set(data) - set(converters)
    if unknown:
        raise ConfigError(f"section '{name}': unknown key(s) {sorted(unknown)}")
    kwargs = {k: conv(data[k], f"{name}.{k}") for k, conv in converters.items() if k in data}
    return cls(**kwargs)


def _waveform(value, key):
    try:
        return Waveform(value)
    except ValueError:
        choices = [w.value for w in Waveform]
        raise ConfigError(f"key '{key}': waveform must be one of {choices}, got {value!r}") from None


def _overrides(value, key):
    if not isinstance(value, dict):
        raise ConfigError(f"key '{key}': expected a mapping")
    out = []
    for k, v in value.items():
        if k not in PARAM_KEYS or k == "m":
            raise ConfigError(f"key '{key}.{k}': not an overridable circuit parameter")
        out.append((PARAM_KEYS[k], _number(v, f"{key}.{k}")))
    return tuple(out)


def _positive_int(value, key):
    out = _number(value, key, integer=True)
    if out < 1:
        raise ConfigError(f"key '{key}': must be >= 1, got {value!r}")
    return out


SECTION_CONVERTERS = {
    "sweep": (
        SweepSettings,
        {
            "f_start_hz": _number,
            "f_stop_hz": _number,
            "points": _positive_int,
            "m_values_h": _numbers,
            "oracle_f_hz": _numbers,
            "oracle_cycles": _positive_int,
        },
    ),
    "step": (
        StepSettings,
        {
            "u_dc_before": _number,
            "u_dc_after": _number,
            "t_step_cycles": _positive_int,
            "t_end_cycles": _positive_int,
            "output_samples_per_cycle": _positive_int,
        },
    ),
    "phase": (PhaseSettings, {"f_list_hz": _numbers, "oracle_cycles": _positive_int}),
    "identify": (
        IdentifySettings,
        {
            "k_values": _numbers,
            "m_values_h": _numbers,
            "r_l_values_ohm": _numbers,
            "waveforms": lambda v, k: tuple(_waveform(w, f"{k}[{i}]") for i, w in enumerate(v or [])),
            "samples_per_cycle": _positive_int,
            "settle_cycles": _positive_int,
            "window_cycles": _positive_int,
            "noise_rel": _number,
            "known_overrides": _overrides,
        },
    ),
}


def parse_config(raw) -> Scenario:
    """Build and validate a Scenario from a parsed mapping."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a mapping at the top level")
    allowed = set(PARAM_KEYS) | set(DRIVE_KEYS) | set(SECTION_CONVERTERS) | {"kind"}
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)}")
    missing = [k for k in list(PARAM_KEYS) + ["u_dc", "f_hz"] if k not in raw]
    if missing:
        raise ConfigError(f"missing required key(s) {missing}")

    values = {attr: _number(raw[key], key) for key, attr in PARAM_KEYS.items()}
    try:
        params = SystemParams(**values)
    except ParameterError as exc:
        raise ConfigError(f"circuit parameters: {exc}") from None
    try:
        drive = DriveSpec(
            U_dc=_number(raw["u_dc"], "u_dc"),
            f=_number(raw["f_hz"], "f_hz"),
            sigma=math.radians(_number(raw.get("sigma_deg", 0.0), "sigma_deg")),
            waveform=_waveform(raw.get("waveform", Waveform.SINUSOIDAL.value), "waveform"),
        )
    except ParameterError as exc:
        raise ConfigError(f"drive: {exc}") from None

    sections = {name: _section(raw, name, cls, conv) for name, (cls, conv) in SECTION_CONVERTERS.items()}
    scenario = Scenario(params=params, drive=drive, raw=raw, **sections)
    _validate(scenario)
    return scenario


def _validate(s: Scenario) -> None:
    sw = s.sweep
    if sw.f_start_hz <= 0 or sw.f_stop_hz < sw.f_start_hz:
        raise ConfigError("sweep: need 0 < f_start_hz <= f_stop_hz")
    if any(f <= 0 for f in sw.oracle_f_hz):
        raise ConfigError("sweep.oracle_f_hz: frequencies must be > 0")
    st = s.step
    if st.t_step_cycles < 60:
        raise ConfigError("step.t_step_cycles: the step must come at least 60 cycles after start")
    if st.t_end_cycles <= st.t_step_cycles + 20:
        raise ConfigError("step.t_end_cycles: need at least 20 cycles after the step")
    if st.u_dc_before < 0 or st.u_dc_after < 0:
        raise ConfigError("step: dc voltages must be >= 0")
    if not s.phase.f_list_hz or any(f <= 0 for f in s.phase.f_list_hz):
        raise ConfigError("phase.f_list_hz: need a non-empty list of positive frequencies")
    ident = s.identify
    if ident.k_values and ident.m_values_h:
        raise ConfigError("identify: give either k_values or m_values_h, not both")
    for M in ident.couplings(s.params):
        k = M / math.sqrt(s.params.L_t * s.params.L_r)
        if not 0 < k <= 0.5:
            raise ConfigError(f"identify: coupling k = {k:g} outside (0, 0.5]")
    if any(r <= 0 for r in ident.r_l_values_ohm):
        raise ConfigError("identify.r_l_values_ohm: loads must be > 0")
    if ident.samples_per_cycle % 4:
        raise ConfigError("identify.samples_per_cycle: must be divisible by 4")
    if ident.noise_rel < 0:
        raise ConfigError("identify.noise_rel: must be >= 0")


def load_config(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise ConfigError(f"{path}: YAML syntax error at {where}: {getattr(exc, 'problem', exc)}") from None
    try:
        return parse_config(raw)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
