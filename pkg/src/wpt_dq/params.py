"""Circuit parameters, inverter drive descriptions and derived operating points.

All quantities are SI. Angles are radians internally; degrees only appear at
the configuration and CSV boundaries.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass

from .errors import ParameterError


class Waveform(str, enum.Enum):
    SINUSOIDAL = "sinusoidal"
    PHASE_SHIFT_SQUARE = "phase_shift_square"


def _finite(name, value):
    value = float(value)
    if not math.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class SystemParams:
    """Electrical parameters of the series-parallel compensated link.

    ``M`` may be zero (decoupled coils); every other field must be strictly
    positive, and the coupling coefficient may not exceed one.
    """

    L_t: float
    C_t: float
    R_t: float
    L_r: float
    C_r: float
    R_r: float
    R_L: float
    M: float

    def __post_init__(self):
        for field in dataclasses.fields(self):
            value = _finite(field.name, getattr(self, field.name))
            object.__setattr__(self, field.name, value)
            if field.name == "M":
                if value < 0.0:
                    raise ParameterError(f"M must be >= 0, got {value!r}")
            elif value <= 0.0:
                raise ParameterError(f"{field.name} must be > 0, got {value!r}")
        if self.M > math.sqrt(self.L_t * self.L_r) * (1.0 + 1e-12):
            raise ParameterError(
                f"M = {self.M!r} exceeds sqrt(L_t*L_r) = {math.sqrt(self.L_t * self.L_r)!r}"
            )

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)

    @property
    def k(self) -> float:
        return coupling_coefficient(self)

    def with_coupling(self, k: float) -> "SystemParams":
        """Copy with M set from a coupling coefficient."""
        return self.replace(M=k * math.sqrt(self.L_t * self.L_r))


@dataclass(frozen=True)
class DriveSpec:
    """Full-bridge inverter drive: dc link voltage, phase shift and frequency."""

    U_dc: float
    f: float
    sigma: float = 0.0
    waveform: Waveform = Waveform.SINUSOIDAL

    def __post_init__(self):
        object.__setattr__(self, "U_dc", _finite("U_dc", self.U_dc))
        object.__setattr__(self, "f", _finite("f", self.f))
        object.__setattr__(self, "sigma", _finite("sigma", self.sigma))
        try:
            object.__setattr__(self, "waveform", Waveform(self.waveform))
        except ValueError:
            raise ParameterError(f"unknown waveform {self.waveform!r}") from None
        if self.f <= 0.0:
            raise ParameterError(f"f must be > 0, got {self.f!r}")
        if self.U_dc < 0.0:
            raise ParameterError(f"U_dc must be >= 0, got {self.U_dc!r}")
        if not 0.0 <= self.sigma <= math.pi:
            raise ParameterError(f"sigma must lie in [0, pi], got {self.sigma!r}")

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * self.f

    @property
    def period(self) -> float:
        return 1.0 / self.f

    def replace(self, **changes) -> "DriveSpec":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class OperatingPoint:
    """Angular frequency and fundamental voltage amplitude seen by the tank."""

    omega: float
    U_s: float

    def __post_init__(self):
        object.__setattr__(self, "omega", _finite("omega", self.omega))
        object.__setattr__(self, "U_s", _finite("U_s", self.U_s))
        if self.omega <= 0.0:
            raise ParameterError(f"omega must be > 0, got {self.omega!r}")

    @classmethod
    def from_drive(cls, drive: DriveSpec) -> "OperatingPoint":
        return cls(omega=drive.omega, U_s=fundamental_voltage(drive))

    @classmethod
    def at_frequency(cls, f: float, U_s: float) -> "OperatingPoint":
        return cls(omega=2.0 * math.pi * f, U_s=U_s)


def coupling_coefficient(params: SystemParams) -> float:
    """k = M / sqrt(L_t * L_r)."""
    return params.M / math.sqrt(params.L_t * params.L_r)


def fundamental_voltage(drive: DriveSpec) -> float:
    """Fundamental amplitude of the phase-shifted full-bridge output.

    (4/pi) * U_dc * cos(sigma/2). The same value drives the sinusoidal
    waveform, so both waveforms share one fundamental.
    """
    return 4.0 / math.pi * drive.U_dc * math.cos(drive.sigma / 2.0)


# Reference link used throughout the examples and tests. M is deliberately
# absent: callers must always state the coupling.
REFERENCE_VALUES = {
    "L_t": 140.90e-6,
    "C_t": 16.45e-9,
    "R_t": 0.200,
    "L_r": 55.20e-6,
    "C_r": 41.47e-9,
    "R_r": 0.084,
    "R_L": 100.0,
}
REFERENCE_FREQUENCY = 105.0e3
REFERENCE_U_DC = 20.0


def reference_params(M: float, R_L: float = REFERENCE_VALUES["R_L"]) -> SystemParams:
    values = dict(REFERENCE_VALUES, R_L=R_L)
    return SystemParams(M=M, **values)
